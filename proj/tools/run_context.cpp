#include "run_context.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gallop/io.hpp"

#ifndef GALLOP_VERSION
#define GALLOP_VERSION "dev"
#endif

namespace gallop::cli {

namespace {

std::string to_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return io::fmt(v.get<double>());
  return v.dump();
}

}  // namespace

void OptionSet::add(const std::string& name, double& ref, const std::string& help) {
  app_->add_option("--" + name, ref, help)->capture_default_str();
  names_.push_back(name);
  getters_.push_back([&ref] { return Json(ref); });
}

void OptionSet::add(const std::string& name, int& ref, const std::string& help) {
  app_->add_option("--" + name, ref, help)->capture_default_str();
  names_.push_back(name);
  getters_.push_back([&ref] { return Json(ref); });
}

void OptionSet::add(const std::string& name, std::string& ref, const std::string& help) {
  app_->add_option("--" + name, ref, help)->capture_default_str();
  names_.push_back(name);
  getters_.push_back([&ref] { return Json(ref); });
}

void OptionSet::add(const std::string& name, std::vector<double>& ref, const std::string& help) {
  app_->add_option("--" + name, ref, help)->capture_default_str();
  names_.push_back(name);
  getters_.push_back([&ref] { return Json(ref); });
}

void OptionSet::flag(const std::string& name, bool& ref, const std::string& help) {
  app_->add_flag("--" + name, ref, help);
  names_.push_back(name);
  getters_.push_back([&ref] { return Json(ref); });
}

bool OptionSet::given(const std::string& name) const {
  const CLI::Option* opt = app_->get_option_no_throw("--" + name);
  return opt != nullptr && opt->count() > 0;
}

void OptionSet::apply(const Json& config) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : config.items()) {
    if (key == "command") continue;
    if (std::find(names_.begin(), names_.end(), key) == names_.end()) {
      throw ConfigError("unknown config key '" + key + "' for subcommand " + app_->get_name());
    }
    CLI::Option* opt = app_->get_option("--" + key);
    if (opt->count() > 0) continue;  // flags override the file
    try {
      if (value.is_array()) {
        for (const auto& v : value) opt->add_result(to_text(v));
      } else {
        opt->add_result(to_text(value));
      }
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError("bad value for config key '" + key + "': " + e.what());
    }
  }
}

Json OptionSet::echo() const {
  Json j = Json::object();
  for (std::size_t i = 0; i < names_.size(); ++i) j[names_[i]] = getters_[i]();
  return j;
}

Json load_config(const std::string& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("tool")) j = j["config"];
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  if (j.contains("command") && j["command"] != command) {
    throw ConfigError("config file is for '" + to_text(j["command"]) + "', not '" + command + "'");
  }
  return j;
}

Run::Run(std::string command, Json config, std::string out_dir, int workers)
    : command_(std::move(command)), config_(std::move(config)), out_dir_(std::move(out_dir)), workers_(workers) {
  config_["command"] = command_;
  config_hash_ = io::checksum(config_.dump());
  std::error_code ec;
  std::filesystem::create_directories(out_dir_, ec);
  if (ec) throw ConfigError("cannot create output directory " + out_dir_ + ": " + ec.message());
}

std::string Run::path(const std::string& name) const { return (std::filesystem::path(out_dir_) / name).string(); }

std::string Run::header() const {
  return "gallop " + std::string(GALLOP_VERSION) + " " + command_ + " config_hash=" + config_hash_;
}

void Run::record(const std::string& file) {
  outputs_.emplace_back(std::filesystem::path(file).filename().string(), io::checksum(io::read_file(file)));
}

void Run::write_manifest(double wall_seconds, int exit_code) const {
  Json m;
  m["tool"] = "gallop";
  m["version"] = GALLOP_VERSION;
  m["command"] = command_;
  m["config"] = config_;
  m["config_hash"] = config_hash_;
  m["workers"] = workers_;
  m["numerics"] = numerics_;
  m["determinism"] = "no random numbers; outputs depend only on config";
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream ts;
  ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  m["finished_utc"] = ts.str();
  m["wall_clock_s"] = wall_seconds;
  m["exit_code"] = exit_code;
  Json outs = Json::array();
  for (const auto& [name, sum] : outputs_) outs.push_back({{"file", name}, {"fnv1a64", sum}});
  m["outputs"] = outs;
  io::write_file(path(command_ + "_manifest.json"), m.dump(2) + "\n");
}

Json to_json(const IntegratorConfig& c) {
  return {{"rel_tol", c.rel_tol}, {"abs_tol", c.abs_tol}, {"max_step", c.max_step}, {"h_min", c.h_min},
          {"max_steps", c.max_steps}};
}

Json to_json(const ShootingConfig& c) {
  return {{"integrator", to_json(c.integ)}, {"t_return_max", c.t_return_max}, {"fd_step", c.fd_step},
          {"variational", c.variational}, {"newton_tol", c.newton_tol}, {"newton_max", c.newton_max},
          {"marginal_band", c.marginal_band}};
}

Json to_json(const PortraitOptions& o) {
  return {{"shooting", to_json(o.shooting)},
          {"scan_points", o.scan_points},
          {"max_cycles", o.max_cycles},
          {"back_t_max", o.back_t_max},
          {"manifold",
           {{"delta", o.manifold.delta},
            {"t_max", o.manifold.t_max},
            {"xdot_bound", o.manifold.xdot_bound},
            {"integrator", to_json(o.manifold.integ)}}},
          {"detect_connections", o.detect_connections},
          {"connection_band", o.connection_band},
          {"hopf_band", o.hopf_band}};
}

Json to_json(const ContinuationConfig& c) {
  return {{"v_min", c.v_min},
          {"v_max", c.v_max},
          {"step", c.step},
          {"min_step", c.min_step},
          {"max_step", c.max_step},
          {"period_cap", c.period_cap},
          {"log_period_weight", c.log_period_weight},
          {"max_points", c.max_points},
          {"hopf_offset", c.hopf_offset},
          {"hopf_radius", c.hopf_radius},
          {"fold_multiplier_band", c.fold_multiplier_band},
          {"resolution_band", c.resolution_band},
          {"shooting", to_json(c.shooting)}};
}

}  // namespace gallop::cli
