#pragma once

// Independent dense reference computations used by the test suite.

#include <cemgms/cemgms.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using cemgms::Matrix;
using cemgms::Vector;

/// Gauss-Legendre points and weights on [0,1] (5 points).
inline const std::array<std::pair<double, double>, 5>& gauss5()
{
  static const std::array<std::pair<double, double>, 5> pw = [] {
    const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
    const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
    const double x[5] = {-b, -a, 0.0, a, b};
    const double w[5] = {wb, wa, 128.0 / 225.0, wa, wb};
    std::array<std::pair<double, double>, 5> out{};
    for (int i = 0; i < 5; ++i) out[static_cast<std::size_t>(i)] = {0.5 * (x[i] + 1.0), 0.5 * w[i]};
    return out;
  }();
  return pw;
}

/// Element stiffness by 5x5 Gauss with the full elasticity tensor written out (plane strain).
inline Matrix element_stiffness(double hx, double hy, double lambda, double mu)
{
  Matrix K = Matrix::Zero(8, 8);
  // node order: (0,0) (1,0) (1,1) (0,1)
  const double sx[4] = {0, 1, 1, 0}, sy[4] = {0, 0, 1, 1};
  for (const auto& [s, ws] : gauss5())
    for (const auto& [t, wt] : gauss5()) {
      double dNdx[4], dNdy[4];
      for (int a = 0; a < 4; ++a) {
        const double fx = sx[a] ? s : 1 - s, fy = sy[a] ? t : 1 - t;
        dNdx[a] = (sx[a] ? 1.0 : -1.0) * fy / hx;
        dNdy[a] = (sy[a] ? 1.0 : -1.0) * fx / hy;
      }
      const double w = ws * wt * hx * hy;
      for (int a = 0; a < 4; ++a)
        for (int i = 0; i < 2; ++i)
          for (int b = 0; b < 4; ++b)
            for (int k = 0; k < 2; ++k) {
              // grad of phi_{a,i}: row i has gradient of N_a
              double ga[2][2] = {{0, 0}, {0, 0}}, gb[2][2] = {{0, 0}, {0, 0}};
              ga[i][0] = dNdx[a];
              ga[i][1] = dNdy[a];
              gb[k][0] = dNdx[b];
              gb[k][1] = dNdy[b];
              double ea[2][2], eb[2][2];
              for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) {
                  ea[p][q] = 0.5 * (ga[p][q] + ga[q][p]);
                  eb[p][q] = 0.5 * (gb[p][q] + gb[q][p]);
                }
              const double tra = ea[0][0] + ea[1][1], trb = eb[0][0] + eb[1][1];
              double dd = 0.0;
              for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) dd += ea[p][q] * eb[p][q];
              K(2 * a + i, 2 * b + k) += w * (lambda * tra * trb + 2.0 * mu * dd);
            }
    }
  return K;
}

/// Dense Dirichlet solve by LU on the reduced system.
inline Vector dense_solve(const cemgms::SparseMatrix& A, const Vector& load, const std::vector<char>& essential,
                          const Vector& hInterp)
{
  std::vector<int> fr;
  for (int i = 0; i < A.rows(); ++i)
    if (!essential[static_cast<std::size_t>(i)]) fr.push_back(i);
  const Matrix Ad(A);
  Matrix Aff(fr.size(), fr.size());
  Vector b(fr.size());
  for (std::size_t r = 0; r < fr.size(); ++r) {
    b(static_cast<Eigen::Index>(r)) = load(fr[r]);
    for (std::size_t c = 0; c < fr.size(); ++c)
      Aff(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = Ad(fr[r], fr[c]);
  }
  const Vector x = Aff.partialPivLu().solve(b);
  Vector u = hInterp;
  for (std::size_t r = 0; r < fr.size(); ++r) u(fr[r]) += x(static_cast<Eigen::Index>(r));
  return u;
}

/// Full generalized spectrum of (A, S) via the nonsymmetric eigensolver on S^{-1} A.
inline std::vector<double> full_spectrum(const Matrix& A, const Matrix& S)
{
  const Matrix T = S.fullPivLu().solve(A);
  Eigen::EigenSolver<Matrix> es(T, false);
  std::vector<double> ev;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()(i).real());
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Constrained minimizer on a region as one dense saddle-point (KKT) solve.
/// Returns the global field of the basis function targeting (element j, mode i).
inline Vector kkt_basis(const cemgms::Grid& grid, const cemgms::SparseMatrix& A, const cemgms::AuxSpace& aux,
                        const cemgms::OversampleRegion& region, int j, int i)
{
  std::vector<int> fr;
  for (std::size_t l = 0; l < region.localDofs.size(); ++l)
    if (!region.essentialMask[l]) fr.push_back(region.localDofs[l]);
  std::vector<int> where(static_cast<std::size_t>(grid.numDofs()), -1);
  for (std::size_t r = 0; r < fr.size(); ++r) where[static_cast<std::size_t>(fr[r])] = static_cast<int>(r);
  int nc = 0;
  for (int k : region.members) nc += aux[k].count();
  const auto n = static_cast<Eigen::Index>(fr.size());
  Matrix K = Matrix::Zero(n + nc, n + nc);
  const Matrix Ad(A);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) K(r, c) = Ad(fr[static_cast<std::size_t>(r)], fr[static_cast<std::size_t>(c)]);
  Vector rhs = Vector::Zero(n + nc);
  int row = 0;
  for (int k : region.members) {
    const auto& b = aux[k];
    // s_k(v, phi) computed from S_k and the eigenvectors directly
    const Matrix Sphi = b.forms.S * b.vectors;
    for (std::size_t l = 0; l < b.dofs.size(); ++l) {
      const int f = where[static_cast<std::size_t>(b.dofs[l])];
      if (f < 0) continue;
      for (int q = 0; q < b.count(); ++q) {
        K(n + row + q, f) = Sphi(static_cast<Eigen::Index>(l), q);
        K(f, n + row + q) = Sphi(static_cast<Eigen::Index>(l), q);
      }
    }
    if (k == j) rhs(n + row + i) = 1.0;
    row += b.count();
  }
  const Vector x = K.fullPivLu().solve(rhs);
  Vector u = Vector::Zero(grid.numDofs());
  for (Eigen::Index r = 0; r < n; ++r) u(fr[static_cast<std::size_t>(r)]) = x(r);
  return u;
}

/// Relaxed minimizer: a(x, v) + sum s(pi x - phi, pi v) -> dense normal equations.
inline Vector relaxed_dense(const cemgms::Grid& grid, const cemgms::SparseMatrix& A, const cemgms::AuxSpace& aux,
                            const cemgms::OversampleRegion& region, int j, int i)
{
  std::vector<int> fr;
  for (std::size_t l = 0; l < region.localDofs.size(); ++l)
    if (!region.essentialMask[l]) fr.push_back(region.localDofs[l]);
  std::vector<int> where(static_cast<std::size_t>(grid.numDofs()), -1);
  for (std::size_t r = 0; r < fr.size(); ++r) where[static_cast<std::size_t>(fr[r])] = static_cast<int>(r);
  const auto n = static_cast<Eigen::Index>(fr.size());
  const Matrix Ad(A);
  Matrix K(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) K(r, c) = Ad(fr[static_cast<std::size_t>(r)], fr[static_cast<std::size_t>(c)]);
  Vector rhs = Vector::Zero(n);
  for (int k : region.members) {
    const auto& b = aux[k];
    const Matrix Sphi = b.forms.S * b.vectors;
    Matrix P = Matrix::Zero(b.count(), n);
    for (std::size_t l = 0; l < b.dofs.size(); ++l) {
      const int f = where[static_cast<std::size_t>(b.dofs[l])];
      if (f >= 0) P.col(f) = Sphi.row(static_cast<Eigen::Index>(l)).transpose();
    }
    K += P.transpose() * P;
    if (k == j) rhs += P.row(i).transpose();
  }
  const Vector x = K.ldlt().solve(rhs);
  Vector u = Vector::Zero(grid.numDofs());
  for (Eigen::Index r = 0; r < n; ++r) u(fr[static_cast<std::size_t>(r)]) = x(r);
  return u;
}

inline double energy(const cemgms::SparseMatrix& A, const Vector& v) { return std::sqrt(std::max(0.0, v.dot(A * v))); }

/// Fine-scale setup shared by many tests.
struct Setup {
  cemgms::Grid grid;
  cemgms::ModelProblem model;
  cemgms::MaterialField medium;
  cemgms::KappaField kappa;
  cemgms::FineOperators ops;
  cemgms::AuxSpace aux;
  Vector hInterp;
  Vector load;

  Setup(cemgms::GridSpec spec, const std::string& modelName, const std::string& mediumName, double Eincl, int nbf)
      : grid(spec), model(cemgms::models::by_name(modelName, grid))
  {
    medium = cemgms::inclusion_medium(grid, cemgms::presets::by_name(mediumName), {1.0, 0.25}, {Eincl, 0.45});
    kappa = cemgms::kappa_tilde(grid, medium, cemgms::PartitionOfUnity(grid));
    ops = cemgms::assemble(grid, medium, kappa);
    aux = cemgms::build_aux_space(grid, medium, kappa, nbf);
    hInterp = cemgms::interpolate(grid, model.bc.h);
    load = cemgms::load_vector(grid, ops.A, model.bc, model.f);
  }
};

}  // namespace oracle
