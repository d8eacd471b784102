#pragma once

// Output helpers: '#'-headed CSV tables, SVG polylines and PGM rasters.
// Number formatting is fixed so identical inputs produce byte-identical files.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gallop::io {

/// Fixed-precision decimal rendering used by every writer ("%.12g").
std::string fmt(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_comment(const std::string& line) { comments_.push_back(line); }
  void add_row(const std::vector<double>& row);
  void add_row_text(const std::vector<std::string>& row);

  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  /// Writes the table and returns the file contents' checksum.
  std::string write(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::string> rows_;
};

struct Polyline {
  std::vector<std::pair<double, double>> points;
  std::string stroke = "black";
  double width = 1.0;
  bool dashed = false;
};

/// Minimal SVG canvas in data coordinates (y up).
class SvgCanvas {
 public:
  SvgCanvas(double x0, double x1, double y0, double y1, int width = 800, int height = 600);

  void add(const Polyline& line);
  void add_point(double x, double y, const std::string& fill, double radius = 3.0);
  std::string str() const;
  std::string write(const std::string& path) const;

 private:
  std::pair<double, double> map(double x, double y) const;

  double x0_, x1_, y0_, y1_;
  int width_, height_;
  std::vector<std::string> body_;
};

/// Binary-free ASCII PGM (P2) of a row-major grey-level matrix.
std::string write_pgm(const std::string& path, int cols, int rows, const std::vector<std::uint8_t>& grey);

/// FNV-1a 64-bit checksum in hex.
std::string checksum(const std::string& bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace gallop::io
