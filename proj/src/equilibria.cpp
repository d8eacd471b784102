#include "gallop/equilibria.hpp"

#include <algorithm>
#include <cmath>

#include "gallop/errors.hpp"
#include "gallop/integrator.hpp"
#include "gallop/io.hpp"

namespace gallop {

const char* to_string(EqClass c) {
  switch (c) {
    case EqClass::StableFocus: return "StableFocus";
    case EqClass::UnstableFocus: return "UnstableFocus";
    case EqClass::StableNode: return "StableNode";
    case EqClass::UnstableNode: return "UnstableNode";
    case EqClass::Saddle: return "Saddle";
    case EqClass::Center: return "Center";
  }
  return "?";
}

EqClass classify(const EigenPair& ev, double band) {
  const double r1 = ev.first.real();
  const double r2 = ev.second.real();
  if (ev.first.imag() != 0.0) {
    if (r1 < -band) return EqClass::StableFocus;
    if (r1 > band) return EqClass::UnstableFocus;
    return EqClass::Center;
  }
  const double lo = std::min(r1, r2);
  const double hi = std::max(r1, r2);
  if (hi < -band) return EqClass::StableNode;
  if (lo > band) return EqClass::UnstableNode;
  if (lo < -band && hi > band) return EqClass::Saddle;
  return EqClass::Center;
}

Equilibrium eigen_classify(const State& s, const PlanarField& field, double residual_tol) {
  const State f = field.eval(s);
  const double res = std::hypot(f.x, f.xdot);
  if (!(res <= residual_tol)) {
    throw SolverError(ErrorCode::ResidualTooLarge,
                      "point is not an equilibrium (residual " + io::fmt(res) + ")");
  }
  Equilibrium eq;
  eq.state = s;
  eq.eigenvalues = eigenvalues(field.jacobian(s));
  eq.cls = classify(eq.eigenvalues);
  return eq;
}

Equilibrium eigen_classify(const State& s, const ModelParams& q, double residual_tol) {
  return eigen_classify(s, GallopingField(q), residual_tol);
}

std::vector<Equilibrium> find_equilibria(const PlanarField& field, int subintervals) {
  if (subintervals < 2) throw SolverError(ErrorCode::InvalidArgument, "need at least 2 subintervals");
  const double lo = field.search_lo();
  const double hi = field.search_hi();
  auto g = [&](double x) { return field.static_accel(x); };

  std::vector<double> roots;
  double x_prev = lo;
  double g_prev = g(lo);
  if (g_prev == 0.0) roots.push_back(lo);
  for (int i = 1; i <= subintervals; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / subintervals;
    const double gx = g(x);
    if (gx == 0.0) {
      roots.push_back(x);
    } else if (g_prev != 0.0 && (g_prev < 0.0) != (gx < 0.0)) {
      double r = detail::brent_root(g, x_prev, x, g_prev, gx, 0.0);
      // Newton polish; keep the bracketed value if Newton wanders off.
      for (int it = 0; it < 3; ++it) {
        const double d = field.static_accel_dx(r);
        if (d == 0.0) break;
        const double rn = r - g(r) / d;
        if (rn < x_prev || rn > x) break;
        r = rn;
      }
      if (!(r >= x_prev && r <= x)) {
        throw SolverError(ErrorCode::NoConvergence,
                          "equilibrium polish failed in [" + io::fmt(x_prev) + ", " + io::fmt(x) + "]");
      }
      roots.push_back(r);
    }
    x_prev = x;
    g_prev = gx;
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              roots.end());

  std::vector<Equilibrium> out;
  out.reserve(roots.size());
  for (double r : roots) out.push_back(eigen_classify(State{r, 0.0}, field, 1e-9));
  return out;
}

std::vector<Equilibrium> find_equilibria(const ModelParams& q, int subintervals) {
  return find_equilibria(GallopingField(q), subintervals);
}

const Equilibrium& central_equilibrium(const std::vector<Equilibrium>& eqs) {
  if (eqs.empty()) throw SolverError(ErrorCode::NoConvergence, "no equilibria");
  if (eqs.size() == 3) return eqs[1];
  if (eqs.size() == 1) return eqs[0];
  // Unusual counts: the non-saddle closest to the origin.
  const Equilibrium* best = &eqs[0];
  for (const auto& e : eqs) {
    if (!e.is_saddle() && (best->is_saddle() || std::abs(e.state.x) < std::abs(best->state.x))) best = &e;
  }
  return *best;
}

double hopf_velocity(const ModelParams& q) {
  return 2.0 * q.r / (q.p * cf_prime(0.0));
}

double hopf_velocity_numeric(const ModelParams& q) {
  ModelParams w = q;
  const auto eqs = find_equilibria(q);
  const State xc = central_equilibrium(eqs).state;
  auto growth = [&](double v) {
    w.v = v;
    return eigen_classify(xc, w).max_real();
  };
  double lo = 0.0;
  if (growth(lo) > 0.0) {
    throw SolverError(ErrorCode::NoSignChange, "central equilibrium is unstable without wind");
  }
  double hi = 1.0;
  while (growth(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw SolverError(ErrorCode::NoSignChange, "no Hopf crossing below v = 1e6");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (growth(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Statics

namespace {

double H(double b, double x, double e) { return static_force(x, b, e); }
double H_b(double x, double e) { return (e + std::sin(x)) * std::cos(x); }
double H_x(double b, double x, double e) { return static_stiffness(x, b, e); }
double H_xb(double x, double e) { return std::cos(2.0 * x) - e * std::sin(x); }
double H_xx(double b, double x, double e) {
  return (1.0 + b) * (-2.0 * std::sin(2.0 * x) - e * std::cos(x)) + std::sin(x);
}

struct Tangent {
  double tb, tx;
};

Tangent tangent_at(double b, double x, double e, const Tangent& prev) {
  const double gb = H_b(x, e);
  const double gx = H_x(b, x, e);
  const double n = std::hypot(gb, gx);
  if (n < 1e-14) return prev;
  Tangent t{gx / n, -gb / n};
  if (t.tb * prev.tb + t.tx * prev.tx < 0.0) t = {-t.tb, -t.tx};
  return t;
}

// Continues from (b, x) along `dir`; appends points to path. Stops on leaving
// the box, after the first fold if requested, or at max_points.
void continue_static(double e, double b0, double x0, Tangent dir, double b_min, double b_max,
                     const StaticPathOptions& opt, int segment, bool stop_at_fold, StaticPath& path) {
  double b = b0, x = x0;
  Tangent t = tangent_at(b, x, e, dir);
  double ds = opt.step;
  path.points.push_back({b, x, H_x(b, x, e) > 0.0, segment});

  for (int n = 0; n < opt.max_points; ++n) {
    bool ok = false;
    double bn = 0.0, xn = 0.0;
    Tangent tn{};
    int iters = 0;
    while (!ok) {
      if (ds < opt.min_step) {
        throw SolverError(ErrorCode::ContinuationStall,
                          "static continuation stalled at b = " + io::fmt(b) + ", x = " + io::fmt(x));
      }
      const double bp = b + ds * t.tb;
      const double xp = x + ds * t.tx;
      bn = bp;
      xn = xp;
      bool conv = false;
      for (iters = 0; iters < 10; ++iters) {
        const double f1 = H(bn, xn, e);
        const double f2 = t.tb * (bn - bp) + t.tx * (xn - xp);
        if (std::abs(f1) < 1e-14 && std::abs(f2) < 1e-14) {
          conv = true;
          break;
        }
        const double j11 = H_b(xn, e), j12 = H_x(bn, xn, e);
        const double det = j11 * t.tx - j12 * t.tb;
        if (det == 0.0) break;
        const double db = (-f1 * t.tx + j12 * f2) / det;
        const double dx = (-j11 * f2 + t.tb * f1) / det;
        bn += db;
        xn += dx;
      }
      if (conv) {
        tn = tangent_at(bn, xn, e, t);
        // Angle control keeps the fold region well resolved.
        ok = (tn.tb * t.tb + tn.tx * t.tx) > std::cos(0.15);
      }
      if (!ok) ds *= 0.5;
    }

    const bool fold = (tn.tb > 0.0) != (t.tb > 0.0) && std::abs(t.tb) > 0.0;
    const double hx_old = H_x(b, x, e);
    const double hx_new = H_x(bn, xn, e);
    if (fold) {
      const StaticFold f = polish_fold(e, 0.5 * (b + bn), 0.5 * (x + xn));
      path.folds.push_back({f.b, f.x, segment});
    } else if ((hx_old > 0.0) != (hx_new > 0.0) && hx_old != 0.0) {
      // Stability change without a fold: a branch point. Locate by bisection on H_x.
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double hm = H_x(b + mid * (bn - b), x + mid * (xn - x), e);
        ((hm > 0.0) == (hx_old > 0.0) ? lo : hi) = mid;
      }
      const double s = 0.5 * (lo + hi);
      path.branch_points.push_back({b + s * (bn - b), x + s * (xn - x), segment});
    }

    b = bn;
    x = xn;
    t = tn;
    path.points.push_back({b, x, hx_new > 0.0, segment});
    if (fold && stop_at_fold) return;
    if (b < b_min || b > b_max || std::abs(x) > opt.x_limit) return;
    if (iters <= 3) ds = std::min(ds * 1.5, opt.max_step);
  }
}

}  // namespace

StaticFold polish_fold(double e, double b_guess, double x_guess) {
  double b = b_guess, x = x_guess;
  for (int it = 0; it < 50; ++it) {
    const double f1 = H(b, x, e);
    const double f2 = H_x(b, x, e);
    if (std::abs(f1) < 1e-15 && std::abs(f2) < 1e-13) return {b, x, 0};
    const double j11 = H_b(x, e), j12 = H_x(b, x, e);
    const double j21 = H_xb(x, e), j22 = H_xx(b, x, e);
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0) break;
    const double db = (-f1 * j22 + j12 * f2) / det;
    const double dx = (-j11 * f2 + j21 * f1) / det;
    b += db;
    x += dx;
    if (std::abs(db) < 1e-16 && std::abs(dx) < 1e-16) return {b, x, 0};
  }
  if (std::abs(H(b, x, e)) < 1e-12 && std::abs(H_x(b, x, e)) < 1e-9) return {b, x, 0};
  throw SolverError(ErrorCode::NoConvergence, "fold polishing failed near b = " + io::fmt(b_guess));
}

StaticPath static_path(double e, double b_min, double b_max, const StaticPathOptions& opt) {
  if (!(b_max > b_min)) throw SolverError(ErrorCode::InvalidArgument, "static_path needs b_max > b_min");
  StaticPath path;
  path.e = e;

  ModelParams q;
  q.b = b_max;
  q.e = e;
  const auto eqs = find_equilibria(q);
  const Equilibrium& c = central_equilibrium(eqs);
  continue_static(e, b_max, c.state.x, Tangent{-1.0, 0.0}, b_min, b_max, opt, 0, false, path);

  if (e == 0.0) {
    // Switch onto the post-buckling branch at the pitchfork (b, x) = (0, 0):
    // the second tangent there is (0, 1). Trace each half and join them.
    if (b_min < 0.0 && b_max > 0.0) {
      StaticPath neg, pos;
      neg.e = pos.e = 0.0;
      const double seed = std::min(opt.step, 1e-3);
      auto start = [&](double xs) {
        double b = 0.0;
        for (int it = 0; it < 50; ++it) {
          const double f = H(b, xs, 0.0);
          b -= f / H_b(xs, 0.0);
          if (std::abs(f) < 1e-15) break;
        }
        return b;
      };
      continue_static(0.0, start(-seed), -seed, Tangent{0.0, -1.0}, b_min, b_max, opt, 1, false, neg);
      continue_static(0.0, start(seed), seed, Tangent{0.0, 1.0}, b_min, b_max, opt, 1, false, pos);
      std::reverse(neg.points.begin(), neg.points.end());
      path.points.insert(path.points.end(), neg.points.begin(), neg.points.end());
      path.points.push_back({0.0, 0.0, false, 1});
      path.points.insert(path.points.end(), pos.points.begin(), pos.points.end());
    }
  } else if (eqs.size() == 3) {
    const Equilibrium& remote = e < 0.0 ? eqs.front() : eqs.back();
    continue_static(e, b_max, remote.state.x, Tangent{-1.0, 0.0}, b_min, b_max, opt, 1, false, path);
  }
  return path;
}

StaticFold static_fold(double e, double b_start) {
  if (e == 0.0) return {0.0, 0.0, 0};
  ModelParams q;
  q.b = b_start;
  q.e = e;
  const auto eqs = find_equilibria(q);
  StaticPath path;
  StaticPathOptions opt;
  opt.step = std::min(0.01, b_start / 20.0);
  continue_static(e, b_start, central_equilibrium(eqs).state.x, Tangent{-1.0, 0.0}, -1.0, b_start, opt, 0, true,
                  path);
  if (path.folds.empty()) throw SolverError(ErrorCode::NoConvergence, "static path did not fold");
  return path.folds.front();
}

SensitivityResult imperfection_sensitivity(std::span<const double> e_list) {
  if (e_list.size() < 2) throw SolverError(ErrorCode::InvalidArgument, "need at least two imperfections");
  const bool neg = e_list.front() < 0.0;
  SensitivityResult res;
  for (double e : e_list) {
    if (e == 0.0 || (e < 0.0) != neg) {
      throw SolverError(ErrorCode::InvalidArgument, "imperfections must be nonzero and of one sign");
    }
    const StaticFold f = static_fold(e);
    res.rows.push_back({e, f.b, f.x});
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(res.rows.size());
  for (const auto& r : res.rows) {
    const double lx = std::log(std::abs(r.e));
    const double ly = std::log(r.b_fold);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  res.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  res.prefactor = std::exp((sy - res.exponent * sx) / n);
  return res;
}

void write_static_path_csv(const StaticPath& path, const std::string& file, const std::string& header) {
  io::CsvTable t({"b", "x", "stability", "segment"});
  if (!header.empty()) t.add_comment(header);
  t.add_comment("static equilibrium path, load fixed at A = 1, sweep in b = B - 1; e = " + io::fmt(path.e));
  t.add_comment("stability: 1 = potential minimum, 0 = maximum");
  for (const auto& p : path.points) t.add_row({p.b, p.x, p.stable ? 1.0 : 0.0, static_cast<double>(p.segment)});
  for (const auto& f : path.folds) t.add_comment("fold b = " + io::fmt(f.b) + " x = " + io::fmt(f.x));
  for (const auto& f : path.branch_points) t.add_comment("branch point b = " + io::fmt(f.b) + " x = " + io::fmt(f.x));
  t.write(file);
}

void write_sensitivity_csv(const SensitivityResult& res, const std::string& file, const std::string& header) {
  io::CsvTable t({"e", "b_fold", "x_fold"});
  if (!header.empty()) t.add_comment(header);
  t.add_comment("imperfection sensitivity: fold stiffness b_fold versus imperfection e");
  t.add_comment("fitted b_fold = " + io::fmt(res.prefactor) + " |e|^" + io::fmt(res.exponent));
  for (const auto& r : res.rows) t.add_row({r.e, r.b_fold, r.x_fold});
  t.write(file);
}

}  // namespace gallop
