#include "gallop/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gallop/errors.hpp"

namespace gallop::io {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);  // no "-0"
  return buf;
}

void CsvTable::add_row(const std::vector<double>& row) {
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line += ',';
    line += fmt(row[i]);
  }
  rows_.push_back(std::move(line));
}

void CsvTable::add_row_text(const std::vector<std::string>& row) {
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line += ',';
    line += row[i];
  }
  rows_.push_back(std::move(line));
}

std::string CsvTable::str() const {
  std::string out;
  for (const auto& c : comments_) out += "# " + c + "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i];
  }
  out += '\n';
  for (const auto& r : rows_) out += r + "\n";
  return out;
}

std::string CsvTable::write(const std::string& path) const {
  const std::string s = str();
  write_file(path, s);
  return checksum(s);
}

SvgCanvas::SvgCanvas(double x0, double x1, double y0, double y1, int width, int height)
    : x0_(x0), x1_(x1), y0_(y0), y1_(y1), width_(width), height_(height) {}

std::pair<double, double> SvgCanvas::map(double x, double y) const {
  const double px = (x - x0_) / (x1_ - x0_) * width_;
  const double py = height_ - (y - y0_) / (y1_ - y0_) * height_;
  return {px, py};
}

void SvgCanvas::add(const Polyline& line) {
  if (line.points.empty()) return;
  std::string pts;
  for (const auto& [x, y] : line.points) {
    const auto [px, py] = map(x, y);
    pts += fmt(px) + "," + fmt(py) + " ";
  }
  std::string el = "<polyline fill=\"none\" stroke=\"" + line.stroke + "\" stroke-width=\"" + fmt(line.width) + "\"";
  if (line.dashed) el += " stroke-dasharray=\"6,4\"";
  el += " points=\"" + pts + "\"/>";
  body_.push_back(std::move(el));
}

void SvgCanvas::add_point(double x, double y, const std::string& fill, double radius) {
  const auto [px, py] = map(x, y);
  body_.push_back("<circle cx=\"" + fmt(px) + "\" cy=\"" + fmt(py) + "\" r=\"" + fmt(radius) + "\" fill=\"" + fill +
                  "\"/>");
}

std::string SvgCanvas::str() const {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_) + "\" height=\"" +
                    std::to_string(height_) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& el : body_) out += el + "\n";
  out += "</svg>\n";
  return out;
}

std::string SvgCanvas::write(const std::string& path) const {
  const std::string s = str();
  write_file(path, s);
  return checksum(s);
}

std::string write_pgm(const std::string& path, int cols, int rows, const std::vector<std::uint8_t>& grey) {
  std::string out = "P2\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c) out += ' ';
      out += std::to_string(grey[static_cast<std::size_t>(r) * cols + c]);
    }
    out += '\n';
  }
  write_file(path, out);
  return checksum(out);
}

std::string checksum(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SolverError(ErrorCode::InvalidArgument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SolverError(ErrorCode::InvalidArgument, "cannot write " + path);
  out << contents;
}

}  // namespace gallop::io
