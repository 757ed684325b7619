#pragma once

/** @file fem.hpp
    @brief Vector Q1 finite elements for plane linear elasticity on the fine grid:
    element matrices, the weight kappa-tilde, global/local assembly, loads with
    mixed boundary data, the fine reference solve and discrete norms.
*/

#include "grid.hpp"
#include "medium.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cemgms {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Matrix8 = Eigen::Matrix<double, 8, 8>;

namespace quad {
inline constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)
/// 2-point Gauss abscissae on [0, 1].
inline constexpr std::array<double, 2> kPoints{0.5 - 0.5 * kGauss, 0.5 + 0.5 * kGauss};
}  // namespace quad

/// Quadrature point q of a cell, q = qx + 2*qy, in unit coordinates.
inline std::array<double, 2> unit_qp(int q) { return {quad::kPoints[q % 2], quad::kPoints[q / 2]}; }

/// Bilinear shape values at unit coordinates (s, t), node order (0,0),(1,0),(1,1),(0,1).
inline std::array<double, 4> q1_values(double s, double t)
{
  return {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
}

/// Physical gradients of the bilinear shapes on an hx-by-hy rectangle.
inline std::array<Vec2, 4> q1_gradients(double s, double t, double hx, double hy)
{
  return {Vec2{-(1 - t) / hx, -(1 - s) / hy}, Vec2{(1 - t) / hx, -s / hy}, Vec2{t / hx, s / hy},
          Vec2{-t / hx, (1 - s) / hy}};
}

/// Cell matrices that only depend on the cell size. Ke = lambda*Klambda + mu*Kmu.
struct CellKernel {
  double hx = 0.0, hy = 0.0;
  Matrix8 Klambda = Matrix8::Zero();
  Matrix8 Kmu = Matrix8::Zero();
  Matrix8 mass = Matrix8::Zero();
  std::array<std::array<double, 4>, 4> N{};  ///< N[q][a]

  CellKernel() = default;
  CellKernel(double hx_, double hy_) : hx(hx_), hy(hy_)
  {
    if (!(hx > 0.0) || !(hy > 0.0)) throw std::invalid_argument("element: degenerate cell");
    const double w = 0.25 * hx * hy;
    for (int q = 0; q < 4; ++q) {
      const auto [s, t] = unit_qp(q);
      N[static_cast<std::size_t>(q)] = q1_values(s, t);
      const auto G = q1_gradients(s, t, hx, hy);
      // strain rows (exx, eyy, gxy) per DOF
      Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
      for (int a = 0; a < 4; ++a) {
        B(0, 2 * a) = G[static_cast<std::size_t>(a)][0];
        B(1, 2 * a + 1) = G[static_cast<std::size_t>(a)][1];
        B(2, 2 * a) = G[static_cast<std::size_t>(a)][1];
        B(2, 2 * a + 1) = G[static_cast<std::size_t>(a)][0];
      }
      Eigen::Matrix3d Dl, Dm;
      Dl << 1, 1, 0, 1, 1, 0, 0, 0, 0;
      Dm << 2, 0, 0, 0, 2, 0, 0, 0, 1;
      Klambda += w * B.transpose() * Dl * B;
      Kmu += w * B.transpose() * Dm * B;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const double m = w * N[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)] *
                           N[static_cast<std::size_t>(q)][static_cast<std::size_t>(b)];
          mass(2 * a, 2 * b) += m;
          mass(2 * a + 1, 2 * b + 1) += m;
        }
    }
  }

  Matrix8 stiffness(double lambda, double mu) const { return lambda * Klambda + mu * Kmu; }

  /// Mass matrix weighted by a scalar given at the four quadrature points.
  Matrix8 weightedMass(const std::array<double, 4>& weight) const
  {
    Matrix8 M = Matrix8::Zero();
    const double w = 0.25 * hx * hy;
    for (int q = 0; q < 4; ++q)
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const double m = w * weight[static_cast<std::size_t>(q)] * N[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)] *
                           N[static_cast<std::size_t>(q)][static_cast<std::size_t>(b)];
          M(2 * a, 2 * b) += m;
          M(2 * a + 1, 2 * b + 1) += m;
        }
    return M;
  }
};

struct ElementMatrices {
  Matrix8 stiffness;
  Matrix8 weightedMass;
};

/// Element stiffness and kappa-weighted mass for a rectangular cell with constant Lame pair.
inline ElementMatrices element_matrices(double hx, double hy, double lambda, double mu,
                                        const std::array<double, 4>& kappaAtQp)
{
  const CellKernel k(hx, hy);
  return {k.stiffness(lambda, mu), k.weightedMass(kappaAtQp)};
}

/// kappa-tilde = sum_i (lambda + 2 mu) |grad chi_i|^2 at each fine-cell quadrature point.
using KappaField = std::vector<std::array<double, 4>>;

inline KappaField kappa_tilde(const Grid& grid, const MaterialField& medium, const PartitionOfUnity& pou)
{
  KappaField kappa(static_cast<std::size_t>(grid.numFineCells()));
  for (int c = 0; c < grid.numFineCells(); ++c) {
    const auto o = grid.fineCellOrigin(c);
    const int K = grid.coarseOfFineCell(c);
    const double stiff = medium.lambda(c) + 2.0 * medium.mu(c);
    for (int q = 0; q < 4; ++q) {
      const auto [s, t] = unit_qp(q);
      const Point p{o.x + s * grid.hx(), o.y + t * grid.hy()};
      kappa[static_cast<std::size_t>(c)][static_cast<std::size_t>(q)] = stiff * pou.sumGradSquared(p, K);
    }
  }
  return kappa;
}

/// Global DOFs of a fine cell in element order.
inline std::array<int, 8> cell_dofs(const Grid& grid, int c)
{
  const auto n = grid.fineCellNodes(c);
  std::array<int, 8> d{};
  for (int a = 0; a < 4; ++a) {
    d[static_cast<std::size_t>(2 * a)] = 2 * n[static_cast<std::size_t>(a)];
    d[static_cast<std::size_t>(2 * a + 1)] = 2 * n[static_cast<std::size_t>(a)] + 1;
  }
  return d;
}

/// Global stiffness A, kappa-weighted mass S and plain mass M, without boundary conditions.
struct FineOperators {
  SparseMatrix A;
  SparseMatrix S;
  SparseMatrix M;
};

inline FineOperators assemble(const Grid& grid, const MaterialField& medium, const KappaField& kappa)
{
  if (medium.size() != grid.numFineCells()) throw std::invalid_argument("assemble: medium/grid size mismatch");
  const CellKernel kernel(grid.hx(), grid.hy());
  using T = Eigen::Triplet<double>;
  std::vector<T> ta, ts, tm;
  const auto nc = static_cast<std::size_t>(grid.numFineCells());
  ta.reserve(64 * nc);
  ts.reserve(64 * nc);
  tm.reserve(64 * nc);
  for (int c = 0; c < grid.numFineCells(); ++c) {
    const auto d = cell_dofs(grid, c);
    const Matrix8 Ke = kernel.stiffness(medium.lambda(c), medium.mu(c));
    const Matrix8 Se = kernel.weightedMass(kappa[static_cast<std::size_t>(c)]);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        ta.emplace_back(d[static_cast<std::size_t>(a)], d[static_cast<std::size_t>(b)], Ke(a, b));
        ts.emplace_back(d[static_cast<std::size_t>(a)], d[static_cast<std::size_t>(b)], Se(a, b));
        tm.emplace_back(d[static_cast<std::size_t>(a)], d[static_cast<std::size_t>(b)], kernel.mass(a, b));
      }
  }
  FineOperators ops;
  const int n = grid.numDofs();
  ops.A.resize(n, n);
  ops.S.resize(n, n);
  ops.M.resize(n, n);
  ops.A.setFromTriplets(ta.begin(), ta.end());
  ops.S.setFromTriplets(ts.begin(), ts.end());
  ops.M.setFromTriplets(tm.begin(), tm.end());
  return ops;
}

/// Dense stiffness and weighted mass integrated over `cells` only, indexed by the local DOFs of `box`.
struct LocalForms {
  Matrix A;
  Matrix S;
};

inline LocalForms assemble_local(const Grid& grid, const MaterialField& medium, const KappaField& kappa,
                                 const std::vector<int>& cells, const NodeBox& box)
{
  const CellKernel kernel(grid.hx(), grid.hy());
  LocalForms f{Matrix::Zero(box.numDofs(), box.numDofs()), Matrix::Zero(box.numDofs(), box.numDofs())};
  for (int c : cells) {
    const auto nodes = grid.fineCellNodes(c);
    std::array<int, 8> l{};
    for (int a = 0; a < 4; ++a) {
      const int n = nodes[static_cast<std::size_t>(a)];
      const int ln = box.localNode(grid.nodeIx(n), grid.nodeIy(n));
      l[static_cast<std::size_t>(2 * a)] = 2 * ln;
      l[static_cast<std::size_t>(2 * a + 1)] = 2 * ln + 1;
    }
    const Matrix8 Ke = kernel.stiffness(medium.lambda(c), medium.mu(c));
    const Matrix8 Se = kernel.weightedMass(kappa[static_cast<std::size_t>(c)]);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        f.A(l[static_cast<std::size_t>(a)], l[static_cast<std::size_t>(b)]) += Ke(a, b);
        f.S(l[static_cast<std::size_t>(a)], l[static_cast<std::size_t>(b)]) += Se(a, b);
      }
  }
  return f;
}

/// Local forms a_j, s_j of coarse element j over its closed node box.
inline LocalForms element_forms(const Grid& grid, const MaterialField& medium, const KappaField& kappa, int j)
{
  return assemble_local(grid, medium, kappa, grid.fineCellsOf(j), grid.nodeBoxOf(j));
}

/// Nodal interpolant of a vector field.
inline Vector interpolate(const Grid& grid, const VectorField& fn)
{
  Vector v(grid.numDofs());
  for (int n = 0; n < grid.numFineNodes(); ++n) {
    const auto val = fn(grid.nodeCoord(n));
    v(2 * n) = val[0];
    v(2 * n + 1) = val[1];
  }
  return v;
}

/// Volume term int f . phi_a with 2x2 Gauss per cell.
inline Vector body_load(const Grid& grid, const VectorField& f)
{
  Vector b = Vector::Zero(grid.numDofs());
  const double w = 0.25 * grid.hx() * grid.hy();
  for (int c = 0; c < grid.numFineCells(); ++c) {
    const auto o = grid.fineCellOrigin(c);
    const auto nodes = grid.fineCellNodes(c);
    for (int q = 0; q < 4; ++q) {
      const auto [s, t] = unit_qp(q);
      const auto fv = f({o.x + s * grid.hx(), o.y + t * grid.hy()});
      const auto N = q1_values(s, t);
      for (int a = 0; a < 4; ++a) {
        b(2 * nodes[static_cast<std::size_t>(a)]) += w * fv[0] * N[static_cast<std::size_t>(a)];
        b(2 * nodes[static_cast<std::size_t>(a)] + 1) += w * fv[1] * N[static_cast<std::size_t>(a)];
      }
    }
  }
  return b;
}

/// Adds int_facet g . phi_a (2-point Gauss) for one boundary facet.
inline void add_facet_traction(const Facet& f, const VectorField& g, Vector& b)
{
  const double len = f.length();
  for (double t : quad::kPoints) {
    const Point p{f.a.x + t * (f.b.x - f.a.x), f.a.y + t * (f.b.y - f.a.y)};
    const auto gv = g(p);
    const double w = 0.5 * len;
    b(2 * f.node0) += w * (1 - t) * gv[0];
    b(2 * f.node0 + 1) += w * (1 - t) * gv[1];
    b(2 * f.node1) += w * t * gv[0];
    b(2 * f.node1 + 1) += w * t * gv[1];
  }
}

/// Boundary term int_{Gamma_b} g . phi_a.
inline Vector traction_load(const Grid& grid, const BoundarySpec& bc)
{
  Vector b = Vector::Zero(grid.numDofs());
  for (const auto& f : grid.boundaryFacets())
    if (!bc.isDirichlet(f.id)) add_facet_traction(f, bc.g, b);
  return b;
}

/// l(phi) = int f.phi + int_{Gamma_b} g.phi - a(I_h h, phi).
inline Vector load_vector(const Grid& grid, const SparseMatrix& A, const BoundarySpec& bc, const VectorField& f)
{
  const Vector hI = interpolate(grid, bc.h);
  return body_load(grid, f) + traction_load(grid, bc) - A * hI;
}

/// Global DOFs fixed by Gamma_a, as a per-DOF flag.
inline std::vector<char> essential_dofs(const Grid& grid, const BoundarySpec& bc)
{
  const auto nodes = dirichlet_nodes(grid, bc);
  std::vector<char> e(static_cast<std::size_t>(grid.numDofs()), 0);
  for (std::size_t n = 0; n < nodes.size(); ++n)
    if (nodes[n]) e[2 * n] = e[2 * n + 1] = 1;
  return e;
}

/// Extracts rows/cols `idx` of a sparse matrix.
inline SparseMatrix restrict_sparse(const SparseMatrix& A, const std::vector<int>& idx, int fullSize)
{
  std::vector<int> map(static_cast<std::size_t>(fullSize), -1);
  for (std::size_t i = 0; i < idx.size(); ++i) map[static_cast<std::size_t>(idx[i])] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t jj = 0; jj < idx.size(); ++jj)
    for (SparseMatrix::InnerIterator it(A, idx[jj]); it; ++it) {
      const int r = map[static_cast<std::size_t>(it.row())];
      if (r >= 0) t.emplace_back(r, static_cast<int>(jj), it.value());
    }
  SparseMatrix out(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

struct FineSolution {
  Vector u;          ///< u_h = utilde + h_interp
  Vector utilde;     ///< homogeneous part, zero on Gamma_a
  Vector hInterp;
  double relResidual = 0.0;
};

/// Solves A utilde = load on the free DOFs (utilde = 0 on essential DOFs).
inline FineSolution fine_solve(const SparseMatrix& A, const Vector& load, const std::vector<char>& essential,
                               const Vector& hInterp)
{
  std::vector<int> freeDofs;
  for (std::size_t i = 0; i < essential.size(); ++i)
    if (!essential[i]) freeDofs.push_back(static_cast<int>(i));
  if (freeDofs.size() == essential.size())
    throw std::runtime_error("fine_solve: no essential DOFs (empty Gamma_a leaves rigid motions)");
  const SparseMatrix Af = restrict_sparse(A, freeDofs, static_cast<int>(A.rows()));
  Vector bf(static_cast<Eigen::Index>(freeDofs.size()));
  for (std::size_t i = 0; i < freeDofs.size(); ++i) bf(static_cast<Eigen::Index>(i)) = load(freeDofs[i]);

  Eigen::SimplicialLDLT<SparseMatrix> solver(Af);
  if (solver.info() != Eigen::Success) throw std::runtime_error("fine_solve: factorization failed");
  Vector xf = solver.solve(bf);
  const double bn = bf.norm();
  double res = (Af * xf - bf).norm();
  // iterative refinement
  for (int it = 0; it < 3 && res > 1e-13 * bn; ++it) {
    const Vector next = xf + solver.solve(Vector(bf - Af * xf));
    const double r = (Af * next - bf).norm();
    if (!(r < res)) break;
    xf = next;
    res = r;
  }
  FineSolution sol;
  sol.relResidual = bn > 0 ? res / bn : res;
  if (!(sol.relResidual <= 1e-10)) throw std::runtime_error("fine_solve: residual above 1e-10 (singular system?)");
  sol.utilde = Vector::Zero(A.rows());
  for (std::size_t i = 0; i < freeDofs.size(); ++i) sol.utilde(freeDofs[i]) = xf(static_cast<Eigen::Index>(i));
  sol.hInterp = hInterp;
  sol.u = sol.utilde + hInterp;
  return sol;
}

struct Norms {
  double energy = 0.0;
  double s = 0.0;
  double l2 = 0.0;
};

inline double quad_norm(const SparseMatrix& Q, const Vector& v)
{
  const double q = v.dot(Q * v);
  if (q < 0.0 && q < -1e-12 * std::max(1.0, v.squaredNorm() * Q.norm()))
    throw std::runtime_error("norm: negative quadratic form (assembly bug)");
  return std::sqrt(std::max(0.0, q));
}

inline Norms norms(const Vector& v, const FineOperators& ops)
{
  return {quad_norm(ops.A, v), quad_norm(ops.S, v), quad_norm(ops.M, v)};
}

/// L2 norm of a vector field by 2x2 Gauss per fine cell.
inline double l2_norm(const Grid& grid, const VectorField& f)
{
  double s = 0.0;
  const double w = 0.25 * grid.hx() * grid.hy();
  for (int c = 0; c < grid.numFineCells(); ++c) {
    const auto o = grid.fineCellOrigin(c);
    for (int q = 0; q < 4; ++q) {
      const auto [a, b] = unit_qp(q);
      const auto v = f({o.x + a * grid.hx(), o.y + b * grid.hy()});
      s += w * (v[0] * v[0] + v[1] * v[1]);
    }
  }
  return std::sqrt(s);
}

}  // namespace cemgms
