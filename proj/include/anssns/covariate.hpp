#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anssns/errors.hpp"
#include "anssns/geometry.hpp"
#include "anssns/text.hpp"

namespace anssns {

/// A spatial covariate Z(u).
///
/// Rasters are piecewise constant: the value at u is the value of the cell
/// containing u. Values are stored row-major with rows ordered from y0
/// upward, so cell (i, j) (column i, row j) lives at index j * nx + i.
class Covariate {
 public:
  enum class Kind { CoordinateX, CoordinateY, Constant, Raster };

  static Covariate coordinate_x() { return Covariate(Kind::CoordinateX, "x"); }
  static Covariate coordinate_y() { return Covariate(Kind::CoordinateY, "y"); }

  static Covariate constant(double c) {
    if (!std::isfinite(c)) throw std::domain_error("constant covariate must be finite");
    Covariate cov(Kind::Constant, "const:" + format_double(c));
    cov.constant_ = c;
    return cov;
  }

  static Covariate raster(std::size_t nx, std::size_t ny, Point2 origin, double dx, double dy,
                          std::vector<double> values, std::string name = "raster") {
    if (nx < 1 || ny < 1) throw std::domain_error("raster needs nx >= 1 and ny >= 1");
    if (!(dx > 0.0) || !(dy > 0.0)) throw std::domain_error("raster cell sizes must be positive");
    if (values.size() != nx * ny)
      throw std::domain_error("raster value count " + std::to_string(values.size()) +
                              " does not match " + std::to_string(nx) + "x" + std::to_string(ny));
    for (double v : values)
      if (!std::isfinite(v)) throw std::domain_error("raster values must be finite");
    Covariate cov(Kind::Raster, std::move(name));
    cov.nx_ = nx;
    cov.ny_ = ny;
    cov.origin_ = origin;
    cov.dx_ = dx;
    cov.dy_ = dy;
    cov.values_ = std::move(values);
    return cov;
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  Point2 origin() const { return origin_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  const std::vector<double>& values() const { return values_; }

  /// Extent of a raster; unbounded kinds report an infinite window.
  Window extent() const {
    if (kind_ != Kind::Raster) {
      const double inf = std::numeric_limits<double>::infinity();
      return {-inf, inf, -inf, inf};
    }
    return {origin_.x, origin_.x + static_cast<double>(nx_) * dx_, origin_.y,
            origin_.y + static_cast<double>(ny_) * dy_};
  }

  bool covers(const Window& w) const { return kind_ != Kind::Raster || extent().contains(w); }

  double evaluate(const Point2& u) const {
    switch (kind_) {
      case Kind::CoordinateX:
        return u.x;
      case Kind::CoordinateY:
        return u.y;
      case Kind::Constant:
        return constant_;
      case Kind::Raster:
        break;
    }
    const std::size_t i = cell_index(u.x, origin_.x, dx_, nx_);
    const std::size_t j = cell_index(u.y, origin_.y, dy_, ny_);
    if (i == npos || j == npos)
      throw std::domain_error("covariate '" + name_ + "' is undefined at (" + format_double(u.x) +
                              ", " + format_double(u.y) + ")");
    return values_[j * nx_ + i];
  }

  /// Parses a CLI covariate token: `x`, `y`, `const:<v>` or `raster:<path>`.
  static Covariate parse(const std::string& token);

  friend bool operator==(const Covariate& a, const Covariate& b) {
    return a.kind_ == b.kind_ && a.constant_ == b.constant_ && a.nx_ == b.nx_ && a.ny_ == b.ny_ &&
           a.origin_ == b.origin_ && a.dx_ == b.dx_ && a.dy_ == b.dy_ && a.values_ == b.values_;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Covariate(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  // The upper edge of the extent belongs to the last cell.
  static std::size_t cell_index(double v, double v0, double d, std::size_t n) {
    const double t = (v - v0) / d;
    if (!(t >= 0.0) || t > static_cast<double>(n)) return npos;
    const auto k = static_cast<std::size_t>(std::floor(t));
    return k == n ? n - 1 : k;
  }

  Kind kind_;
  std::string name_;
  double constant_ = 0.0;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  Point2 origin_{};
  double dx_ = 0.0;
  double dy_ = 0.0;
  std::vector<double> values_;
};

/// Reads a raster file: first line `nx ny x0 y0 dx dy`, then nx*ny values.
inline Covariate load_raster(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open raster file '" + path + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<double> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      const auto v = parse_double(tok);
      if (!v) throw ParseError("raster header: bad number '" + tok + "'", line_no);
      header.push_back(*v);
    }
    if (!header.empty() && header.size() != 6)
      throw ParseError("raster header needs 6 fields `nx ny x0 y0 dx dy`", line_no);
  }
  if (header.empty()) throw ParseError("raster file is empty", line_no + 1);
  const auto as_count = [&](double v) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
      throw ParseError("raster header: nx and ny must be positive integers", 1);
    return static_cast<std::size_t>(v);
  };
  const std::size_t nx = as_count(header[0]);
  const std::size_t ny = as_count(header[1]);
  const std::size_t header_line = line_no;
  if (!(header[4] > 0.0) || !(header[5] > 0.0) || !std::isfinite(header[2]) ||
      !std::isfinite(header[3]) || !std::isfinite(header[4]) || !std::isfinite(header[5]))
    throw ParseError("raster header: origin must be finite and cell sizes positive", header_line);

  std::vector<double> values;
  values.reserve(nx * ny);
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      const auto v = parse_double(tok);
      if (!v) throw ParseError("raster: bad value '" + tok + "'", line_no);
      if (!std::isfinite(*v)) throw ParseError("raster: non-finite value '" + tok + "'", line_no);
      if (values.size() == nx * ny)
        throw ParseError("raster: more than " + std::to_string(nx * ny) + " values", line_no);
      values.push_back(*v);
    }
  }
  if (values.size() != nx * ny)
    throw ParseError("raster: expected " + std::to_string(nx * ny) + " values, found " +
                         std::to_string(values.size()),
                     line_no);
  return Covariate::raster(nx, ny, {header[2], header[3]}, header[4], header[5], std::move(values),
                           "raster:" + path);
}

inline void save_raster(const Covariate& cov, const std::string& path) {
  if (cov.kind() != Covariate::Kind::Raster)
    throw std::invalid_argument("save_raster: covariate is not a raster");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write raster file '" + path + "'");
  out << cov.nx() << ' ' << cov.ny() << ' ' << format_double(cov.origin().x) << ' '
      << format_double(cov.origin().y) << ' ' << format_double(cov.dx()) << ' '
      << format_double(cov.dy()) << '\n';
  for (std::size_t j = 0; j < cov.ny(); ++j) {
    for (std::size_t i = 0; i < cov.nx(); ++i) {
      if (i) out << ' ';
      out << format_double(cov.values()[j * cov.nx() + i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing raster file '" + path + "'");
}

inline Covariate Covariate::parse(const std::string& token) {
  if (token == "x") return coordinate_x();
  if (token == "y") return coordinate_y();
  if (token.rfind("const:", 0) == 0) {
    const auto v = parse_double(std::string_view(token).substr(6));
    if (!v || !std::isfinite(*v)) throw ConfigError("bad constant covariate '" + token + "'");
    return constant(*v);
  }
  if (token.rfind("raster:", 0) == 0) return load_raster(token.substr(7));
  throw ConfigError("unknown covariate '" + token + "' (expected x, y, const:<v>, raster:<path>)");
}

}  // namespace anssns
