#pragma once

/** @file medium.hpp
    @brief Piecewise-constant (per fine cell) elastic media: Lame conversion,
    inclusion generators, named presets and the plain-text raster format.
*/

#include "grid.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace cemgms {

struct Lame {
  double lambda = 0.0;
  double mu = 0.0;
};

/// Lame pair from Young's modulus and Poisson ratio.
inline Lame lame(double E, double nu)
{
  if (!(E > 0.0)) throw std::invalid_argument("lame: Young's modulus must be positive");
  // 1 - 2 nu below 1e-10 is treated as incompressible
  if (!(nu > -1.0 && 1.0 - 2.0 * nu > 1e-10)) throw std::invalid_argument("lame: Poisson ratio must lie in (-1, 0.5)");
  return {nu * E / ((1.0 + nu) * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu))};
}

struct Phase {
  double E = 1.0;
  double nu = 0.25;

  bool operator==(const Phase&) const = default;
};

class MaterialField {
public:
  MaterialField() = default;
  MaterialField(int numCells, Phase p) { assign(numCells, p); }

  void assign(int numCells, Phase p)
  {
    E_.assign(static_cast<std::size_t>(numCells), p.E);
    nu_.assign(static_cast<std::size_t>(numCells), p.nu);
    lambda_.assign(static_cast<std::size_t>(numCells), 0.0);
    mu_.assign(static_cast<std::size_t>(numCells), 0.0);
    const auto l = lame(p.E, p.nu);
    std::fill(lambda_.begin(), lambda_.end(), l.lambda);
    std::fill(mu_.begin(), mu_.end(), l.mu);
  }

  void set(int cell, Phase p)
  {
    const auto l = lame(p.E, p.nu);
    const auto c = static_cast<std::size_t>(cell);
    E_[c] = p.E;
    nu_[c] = p.nu;
    lambda_[c] = l.lambda;
    mu_[c] = l.mu;
  }

  int size() const { return static_cast<int>(E_.size()); }
  double E(int c) const { return E_[static_cast<std::size_t>(c)]; }
  double nu(int c) const { return nu_[static_cast<std::size_t>(c)]; }
  double lambda(int c) const { return lambda_[static_cast<std::size_t>(c)]; }
  double mu(int c) const { return mu_[static_cast<std::size_t>(c)]; }
  Phase phase(int c) const { return {E(c), nu(c)}; }

  /// Multiplies every Young's modulus by `factor`.
  MaterialField scaled(double factor) const
  {
    MaterialField out = *this;
    for (int c = 0; c < size(); ++c) out.set(c, {E(c) * factor, nu(c)});
    return out;
  }

  /// FNV-1a over the raw bytes of (E, nu); identifies a field in cache keys.
  std::uint64_t hash() const
  {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](double v) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    };
    for (std::size_t i = 0; i < E_.size(); ++i) {
      mix(E_[i]);
      mix(nu_[i]);
    }
    return h;
  }

private:
  std::vector<double> E_, nu_, lambda_, mu_;
};

/// Union of two rectangles sharing a corner region; models bent channels.
struct LShape {
  Rect horizontal;
  Rect vertical;

  bool contains(const Point& p) const { return horizontal.contains(p) || vertical.contains(p); }
};

using Shape = std::variant<Rect, LShape>;

inline bool shape_contains(const Shape& s, const Point& p)
{
  return std::visit([&](const auto& v) { return v.contains(p); }, s);
}

/// Shapes sharing one phase. Without an explicit phase the inclusion default applies.
struct InclusionGroup {
  std::vector<Shape> shapes;
  std::optional<Phase> phase;
};

using InclusionSpec = std::vector<InclusionGroup>;

/// Cells whose centers fall inside an inclusion take the inclusion phase.
inline MaterialField inclusion_medium(const Grid& grid, const InclusionSpec& geometry, Phase matrix, Phase inclusion)
{
  MaterialField field(grid.numFineCells(), matrix);
  std::vector<int> owner(static_cast<std::size_t>(grid.numFineCells()), -1);
  for (int c = 0; c < grid.numFineCells(); ++c) {
    const auto p = grid.fineCellCenter(c);
    for (std::size_t gi = 0; gi < geometry.size(); ++gi) {
      const auto& group = geometry[gi];
      const bool inside = std::any_of(group.shapes.begin(), group.shapes.end(),
                                      [&](const Shape& s) { return shape_contains(s, p); });
      if (!inside) continue;
      const Phase ph = group.phase.value_or(inclusion);
      const auto prev = owner[static_cast<std::size_t>(c)];
      if (prev >= 0) {
        const Phase other = geometry[static_cast<std::size_t>(prev)].phase.value_or(inclusion);
        if (!(other == ph))
          throw std::invalid_argument("inclusion_medium: overlapping groups assign different phases to cell " +
                                      std::to_string(c));
        continue;
      }
      owner[static_cast<std::size_t>(c)] = static_cast<int>(gi);
      field.set(c, ph);
    }
  }
  return field;
}

namespace presets {

inline Rect box(double x0, double y0, double x1, double y1) { return {x0, y0, x1, y1}; }

// The layouts below are parametric stand-ins for "isolated blocks plus long
// channels" media; they do not reproduce any particular published image.

/// Horizontal channels and isolated square blocks.
inline InclusionSpec model1()
{
  InclusionGroup g;
  g.shapes = {box(0.10, 0.24, 0.90, 0.28), box(0.10, 0.72, 0.90, 0.76),
              box(0.14, 0.44, 0.20, 0.56), box(0.44, 0.44, 0.56, 0.56), box(0.80, 0.44, 0.86, 0.56),
              box(0.30, 0.06, 0.36, 0.12), box(0.64, 0.88, 0.70, 0.94)};
  return {g};
}

/// Vertical channels with an L-shaped bend plus blocks.
inline InclusionSpec model2()
{
  InclusionGroup g;
  g.shapes = {box(0.24, 0.10, 0.28, 0.90), LShape{box(0.62, 0.16, 0.86, 0.20), box(0.62, 0.16, 0.66, 0.80)},
              box(0.44, 0.40, 0.50, 0.46), box(0.44, 0.84, 0.50, 0.90), box(0.84, 0.54, 0.90, 0.60)};
  return {g};
}

/// Mixed layout: one long diagonal-ish staircase channel and scattered blocks.
inline InclusionSpec model3()
{
  InclusionGroup g;
  g.shapes = {LShape{box(0.10, 0.46, 0.60, 0.50), box(0.56, 0.46, 0.60, 0.90)},
              box(0.14, 0.14, 0.20, 0.20), box(0.44, 0.14, 0.50, 0.20), box(0.80, 0.14, 0.86, 0.20),
              box(0.14, 0.74, 0.20, 0.80), box(0.80, 0.64, 0.86, 0.70)};
  return {g};
}

/// Cross-shaped channel pair and four isolated blobs.
inline InclusionSpec cross_blob()
{
  InclusionGroup g;
  g.shapes = {box(0.15, 0.48, 0.85, 0.52), box(0.48, 0.15, 0.52, 0.85),
              box(0.22, 0.22, 0.28, 0.28), box(0.72, 0.22, 0.78, 0.28),
              box(0.22, 0.72, 0.28, 0.78), box(0.72, 0.72, 0.78, 0.78)};
  return {g};
}

inline InclusionSpec by_name(const std::string& name)
{
  if (name == "homogeneous") return {};
  if (name == "model1") return model1();
  if (name == "model2") return model2();
  if (name == "model3") return model3();
  if (name == "cross_blob") return cross_blob();
  throw std::invalid_argument("unknown medium preset: " + name);
}

}  // namespace presets

using Legend = std::map<int, Phase>;

/// Raster: first line "cols rows", then `rows` lines of integer keys; the first
/// data line is the bottom row of cells.
inline MaterialField read_raster(std::istream& in, const Grid& grid, const Legend& legend)
{
  int cols = 0, rows = 0;
  if (!(in >> cols >> rows)) throw std::runtime_error("raster: missing 'cols rows' header");
  if (cols != grid.fineCellsX() || rows != grid.fineCellsY())
    throw std::runtime_error("raster: size " + std::to_string(cols) + "x" + std::to_string(rows) +
                             " does not match fine grid " + std::to_string(grid.fineCellsX()) + "x" +
                             std::to_string(grid.fineCellsY()));
  MaterialField field(grid.numFineCells(), Phase{});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int key = 0;
      if (!(in >> key)) throw std::runtime_error("raster: truncated data");
      const auto it = legend.find(key);
      if (it == legend.end()) throw std::runtime_error("raster: unknown legend key " + std::to_string(key));
      field.set(grid.fineCell(c, r), it->second);
    }
  return field;
}

inline MaterialField load_raster(const std::string& path, const Grid& grid, const Legend& legend)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("raster: cannot open " + path);
  return read_raster(in, grid, legend);
}

/// Inverse of read_raster. Every cell phase must appear in the legend.
inline void write_raster(std::ostream& out, const Grid& grid, const MaterialField& field, const Legend& legend)
{
  out << grid.fineCellsX() << ' ' << grid.fineCellsY() << '\n';
  for (int r = 0; r < grid.fineCellsY(); ++r) {
    for (int c = 0; c < grid.fineCellsX(); ++c) {
      const Phase p = field.phase(grid.fineCell(c, r));
      auto it = std::find_if(legend.begin(), legend.end(), [&](const auto& kv) { return kv.second == p; });
      if (it == legend.end()) throw std::runtime_error("raster: cell phase missing from legend");
      out << (c ? " " : "") << it->first;
    }
    out << '\n';
  }
}

}  // namespace cemgms
