#pragma once

/** @file aux_space.hpp
    @brief Per-element spectral problems a_j(phi, v) = theta s_j(phi, v) and the
    s-orthogonal projection onto the resulting auxiliary space.

    Auxiliary functions are discontinuous across coarse elements, so they are
    stored per element over the element's closed node box and every inner
    product uses the element-local forms.
*/

#include "fem.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cemgms {

struct AuxBasis {
  int element = 0;
  NodeBox box;
  std::vector<int> dofs;  ///< local -> global DOF
  LocalForms forms;       ///< a_j, s_j over the closed element
  Vector eigenvalues;     ///< the retained theta_j^1..g_j, ascending
  Vector spectrum;        ///< all local eigenvalues, ascending
  Matrix vectors;         ///< local DOFs x g_j, s_j-orthonormal
  Matrix sVectors;        ///< s_j * vectors; row functional v -> s_j(v, phi)

  int count() const { return static_cast<int>(vectors.cols()); }
  /// theta_j^{g_j + 1}; infinity when the whole spectrum is retained.
  double nextEigenvalue() const
  {
    return count() < spectrum.size() ? spectrum(count()) : std::numeric_limits<double>::infinity();
  }
  Vector restrictGlobal(const Vector& v) const
  {
    Vector out(static_cast<Eigen::Index>(dofs.size()));
    for (std::size_t i = 0; i < dofs.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(dofs[i]);
    return out;
  }
};

/// Flips each column so that its largest-magnitude entry is positive.
inline void fix_signs(Matrix& V)
{
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    Eigen::Index imax = 0;
    V.col(c).cwiseAbs().maxCoeff(&imax);
    if (V(imax, c) < 0) V.col(c) *= -1.0;
  }
}

/// Smallest `count` eigenpairs of the natural (unconstrained) local problem on element j.
inline AuxBasis local_eigenproblem(const Grid& grid, const MaterialField& medium, const KappaField& kappa, int j,
                                   int count)
{
  AuxBasis b;
  b.element = j;
  b.box = grid.nodeBoxOf(j);
  b.dofs = grid.dofsOf(b.box);
  b.forms = element_forms(grid, medium, kappa, j);
  const auto n = static_cast<int>(b.dofs.size());
  if (count < 1 || count > n)
    throw std::invalid_argument("local_eigenproblem: mode count must lie in [1, " + std::to_string(n) + "]");

  Eigen::LLT<Matrix> sChol(b.forms.S);
  if (sChol.info() != Eigen::Success)
    throw std::runtime_error("local_eigenproblem: weighted mass on element " + std::to_string(j) +
                             " is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(b.forms.A, b.forms.S, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw std::runtime_error("local_eigenproblem: eigensolver failed");
  b.spectrum = es.eigenvalues();
  b.eigenvalues = b.spectrum.head(count);
  b.vectors = es.eigenvectors().leftCols(count);
  fix_signs(b.vectors);
  b.sVectors = b.forms.S * b.vectors;
  return b;
}

/// The auxiliary bases of all coarse elements, with a flat (element, mode) column numbering.
class AuxSpace {
public:
  AuxSpace() = default;
  explicit AuxSpace(std::vector<AuxBasis> bases) : bases_(std::move(bases))
  {
    offsets_.reserve(bases_.size() + 1);
    for (const auto& b : bases_) offsets_.push_back(offsets_.back() + b.count());
  }

  const std::vector<AuxBasis>& bases() const { return bases_; }
  const AuxBasis& operator[](int j) const { return bases_[static_cast<std::size_t>(j)]; }
  int numElements() const { return static_cast<int>(bases_.size()); }
  int totalCount() const { return offsets_.back(); }
  int column(int j, int i) const { return offsets_[static_cast<std::size_t>(j)] + i; }

  /// Lambda = min_j theta_j^{g_j+1}.
  double lambdaMin() const
  {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : bases_) m = std::min(m, b.nextEigenvalue());
    return m;
  }
  /// min_j theta_j^{g_j}, the largest retained eigenvalue.
  double lambdaRetained() const
  {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : bases_) m = std::min(m, b.eigenvalues(b.count() - 1));
    return m;
  }

private:
  std::vector<AuxBasis> bases_;
  std::vector<int> offsets_{0};
};

template <class ParallelFor>
AuxSpace build_aux_space(const Grid& grid, const MaterialField& medium, const KappaField& kappa, int count,
                         ParallelFor&& pfor)
{
  std::vector<AuxBasis> bases(static_cast<std::size_t>(grid.numCoarseCells()));
  pfor(grid.numCoarseCells(),
       [&](int j) { bases[static_cast<std::size_t>(j)] = local_eigenproblem(grid, medium, kappa, j, count); });
  return AuxSpace(std::move(bases));
}

inline AuxSpace build_aux_space(const Grid& grid, const MaterialField& medium, const KappaField& kappa, int count)
{
  return build_aux_space(grid, medium, kappa, count, [](int n, const auto& fn) {
    for (int i = 0; i < n; ++i) fn(i);
  });
}

/// Field given element by element over closed element boxes (discontinuous across elements).
using PiecewiseField = std::vector<Vector>;

inline PiecewiseField restrict_piecewise(const AuxSpace& aux, const Vector& v)
{
  PiecewiseField out;
  out.reserve(static_cast<std::size_t>(aux.numElements()));
  for (const auto& b : aux.bases()) out.push_back(b.restrictGlobal(v));
  return out;
}

/// pi_j applied element-wise.
inline PiecewiseField project_pi(const AuxSpace& aux, const PiecewiseField& v)
{
  PiecewiseField out;
  out.reserve(v.size());
  for (int j = 0; j < aux.numElements(); ++j) {
    const auto& b = aux[j];
    const Vector coeff = b.sVectors.transpose() * v[static_cast<std::size_t>(j)];
    out.push_back(b.vectors * coeff);
  }
  return out;
}

inline PiecewiseField project_pi(const AuxSpace& aux, const Vector& v) { return project_pi(aux, restrict_piecewise(aux, v)); }

/// s(v, v) summed element-wise.
inline double s_norm(const AuxSpace& aux, const PiecewiseField& v)
{
  double s = 0.0;
  for (int j = 0; j < aux.numElements(); ++j) {
    const auto& x = v[static_cast<std::size_t>(j)];
    s += x.dot(aux[j].forms.S * x);
  }
  return std::sqrt(std::max(0.0, s));
}

/// Coefficients s_j(v, phi_j^i) of a global field in the flat column numbering.
inline Vector aux_coefficients(const AuxSpace& aux, const Vector& v)
{
  Vector c(aux.totalCount());
  for (int j = 0; j < aux.numElements(); ++j) {
    const auto& b = aux[j];
    c.segment(aux.column(j, 0), b.count()) = b.sVectors.transpose() * b.restrictGlobal(v);
  }
  return c;
}

}  // namespace cemgms
