#pragma once

/** @file models.hpp
    @brief Boundary data, sources and default media of the benchmark problems.

    model 1: u = h on the whole boundary, h = (x + exp(xy), cos x cos y),
             f = (indicator of a cross, 0).
    model 2: u = 0 on the top edge; tractions (-1,0) left, (1,0) right,
             (1,0) on the left half of the bottom edge, (0,0) on its right half.
    model 3: u = h (model-1 formula) on the top edge, model-2 tractions
             elsewhere, f = 0.
    custom:  homogeneous Dirichlet data on the whole boundary, zero loads.
*/

#include "fem.hpp"
#include "medium.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cemgms {

struct ModelProblem {
  std::string name;
  BoundarySpec bc;
  VectorField f = kZeroField;
  bool hasDirichletData = false;  ///< h not identically zero
  std::string defaultMedium = "homogeneous";
};

namespace models {

inline Vec2 model1_h(const Point& p) { return {p.x + std::exp(p.x * p.y), std::cos(p.x) * std::cos(p.y)}; }

inline bool in_cross(const Point& p)
{
  const Rect horizontal{1.0 / 8, 3.0 / 8, 7.0 / 8, 5.0 / 8};
  const Rect vertical{3.0 / 8, 1.0 / 8, 5.0 / 8, 7.0 / 8};
  return horizontal.contains(p) || vertical.contains(p);
}

inline Vec2 model1_f(const Point& p) { return {in_cross(p) ? 1.0 : 0.0, 0.0}; }

/// Piecewise-constant tractions on the left, right and bottom edges.
inline Vec2 model2_g(const Point& p)
{
  constexpr double tol = 1e-12;
  if (std::abs(p.x) < tol) return {-1.0, 0.0};
  if (std::abs(p.x - 1.0) < tol) return {1.0, 0.0};
  if (std::abs(p.y) < tol) return p.x < 0.5 ? Vec2{1.0, 0.0} : Vec2{0.0, 0.0};
  return {0.0, 0.0};
}

inline ModelProblem model1(const Grid& grid)
{
  ModelProblem m;
  m.name = "1";
  m.bc = make_boundary(grid, [](const Facet&) { return true; }, model1_h);
  m.f = model1_f;
  m.hasDirichletData = true;
  m.defaultMedium = "model1";
  return m;
}

inline ModelProblem model2(const Grid& grid)
{
  ModelProblem m;
  m.name = "2";
  m.bc = make_boundary(grid, [](const Facet& f) { return f.side == Side::Top; }, kZeroField, model2_g);
  m.defaultMedium = "model2";
  return m;
}

inline ModelProblem model3(const Grid& grid)
{
  ModelProblem m;
  m.name = "3";
  m.bc = make_boundary(grid, [](const Facet& f) { return f.side == Side::Top; }, model1_h, model2_g);
  m.hasDirichletData = true;
  m.defaultMedium = "model3";
  return m;
}

inline ModelProblem custom(const Grid& grid)
{
  ModelProblem m;
  m.name = "custom";
  m.bc = make_boundary(grid, [](const Facet&) { return true; });
  return m;
}

inline ModelProblem by_name(const std::string& name, const Grid& grid)
{
  if (name == "1") return model1(grid);
  if (name == "2") return model2(grid);
  if (name == "3") return model3(grid);
  if (name == "custom") return custom(grid);
  throw std::invalid_argument("unknown model: " + name);
}

}  // namespace models
}  // namespace cemgms
