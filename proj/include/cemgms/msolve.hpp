#pragma once

/** @file msolve.hpp
    @brief Coarse Galerkin system on V_cem, reconstruction of the multiscale
    solution and the error metrics used in reports.
*/

#include "correctors.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace cemgms {

/// Basis set and correctors sharing one factorization per oversampling region.
struct MultiscaleOperators {
  CemBasisSet basis;
  Corrector H;
  Corrector G;
};

inline MultiscaleOperators build_operators(const Grid& grid, const SparseMatrix& A, const AuxSpace& aux,
                                           const BoundarySpec& bc, const Vector& hInterp, std::optional<int> layers,
                                           Variant v, const ParallelFor& pfor = ParallelFor{})
{
  const int n = grid.numCoarseCells();
  MultiscaleOperators out;
  out.basis.variant = v;
  out.basis.layers = layers;
  out.basis.numDofs = grid.numDofs();
  out.basis.functions.resize(static_cast<std::size_t>(aux.totalCount()));
  out.H = {CorrectorKind::Dirichlet, v, layers, Vector::Zero(grid.numDofs()), 0};
  out.G = {CorrectorKind::Neumann, v, layers, Vector::Zero(grid.numDofs()), 0};

  std::vector<LocalField> hp(static_cast<std::size_t>(n)), gp(static_cast<std::size_t>(n));
  std::vector<ElementLoad> hl(static_cast<std::size_t>(n)), gl(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    hl[static_cast<std::size_t>(j)] = dirichlet_element_load(aux, j, hInterp);
    gl[static_cast<std::size_t>(j)] = neumann_element_load(grid, aux, bc, j);
  }

  auto work = [&](const RegionSystem& sys, int j) {
    const auto s = static_cast<std::size_t>(j);
    auto fns = element_basis(sys, aux, v, j);
    for (int i = 0; i < static_cast<int>(fns.size()); ++i)
      out.basis.functions[static_cast<std::size_t>(aux.column(j, i))] = std::move(fns[static_cast<std::size_t>(i)]);
    if (hl[s].active) hp[s] = sys.toField(solve_element_corrector(grid, sys, aux, hl[s], v));
    if (gl[s].active) gp[s] = sys.toField(solve_element_corrector(grid, sys, aux, gl[s], v));
  };
  if (!layers) {
    const RegionSystem sys(grid, A, aux, whole_domain(grid, bc));
    pfor(n, [&](int j) { work(sys, j); });
  } else {
    pfor(n, [&](int j) { work(RegionSystem(grid, A, aux, oversample(grid, bc, j, *layers)), j); });
  }
  for (int j = 0; j < n; ++j) {
    const auto s = static_cast<std::size_t>(j);
    if (hl[s].active) {
      hp[s].addTo(out.H.field);
      ++out.H.elementsSolved;
    }
    if (gl[s].active) {
      gp[s].addTo(out.G.field);
      ++out.G.elementsSolved;
    }
  }
  return out;
}

struct CoarseSystem {
  Matrix gram;  ///< a(xi_a, xi_b)
  Vector rhs;
};

/// rhs(v) = l(v) + a(H h, v) - a(G g, v), where `load` already holds l = F + T - A h_interp.
inline CoarseSystem assemble_coarse(const SparseMatrix& B, const SparseMatrix& A, const Vector& load,
                                    const Vector& Hfield, const Vector& Gfield)
{
  if (B.rows() != A.rows() || load.size() != A.rows() || Hfield.size() != A.rows() || Gfield.size() != A.rows())
    throw std::invalid_argument("assemble_coarse: dimension mismatch");
  const SparseMatrix AB = A * B;
  CoarseSystem sys;
  sys.gram = Matrix(SparseMatrix(B.transpose() * AB));
  sys.gram = 0.5 * (sys.gram + sys.gram.transpose());
  sys.rhs = B.transpose() * (load + A * (Hfield - Gfield));
  return sys;
}

struct MultiscaleSolution {
  Vector coefficients;  ///< coordinates of l_cem in the basis
  Vector l;             ///< l_cem on fine DOFs
  Vector u;             ///< u_cem = l - H h + G g + h_interp
};

inline MultiscaleSolution solve_multiscale(const CoarseSystem& sys, const SparseMatrix& B, const Vector& Hfield,
                                           const Vector& Gfield, const Vector& hInterp)
{
  MultiscaleSolution s;
  if (sys.gram.rows() == 0) {
    s.coefficients = Vector();
    s.l = Vector::Zero(B.rows());
  } else {
    Eigen::LLT<Matrix> llt(sys.gram);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("solve_multiscale: coarse Gram matrix is not positive definite");
    s.coefficients = llt.solve(sys.rhs);
    s.l = B * s.coefficients;
  }
  s.u = s.l - Hfield + Gfield + hInterp;
  return s;
}

/// Ratio with an explicit flag for a vanishing reference.
struct RelativeError {
  double value = 0.0;      ///< relative error, or the absolute norm when undefined
  double absolute = 0.0;
  double reference = 0.0;
  bool defined = true;
};

inline RelativeError relative(double diff, double ref)
{
  RelativeError r;
  r.absolute = diff;
  r.reference = ref;
  if (ref > 0.0 && std::isfinite(ref)) {
    r.value = diff / ref;
  } else {
    r.defined = false;
    r.value = diff;
  }
  return r;
}

struct ErrorReport {
  RelativeError relEnergy;
  RelativeError relL2;
  std::optional<RelativeError> relH, relHL2;
  std::optional<RelativeError> relG, relGL2;
  double lambdaMin = 0.0;       ///< min_j theta_j^{g_j+1}
  double lambdaRetained = 0.0;  ///< min_j theta_j^{g_j}
  double forceL2 = 0.0;
  double theoremBound = 0.0;    ///< lambdaMin^{-1/2} ||f||_{L2}
};

struct CorrectorComparison {
  const Vector* local = nullptr;
  const Vector* global = nullptr;
};

inline ErrorReport compute_errors(const Vector& uCem, const Vector& uH, const FineOperators& ops, const AuxSpace& aux,
                                  double forceL2, CorrectorComparison H = {}, CorrectorComparison G = {})
{
  ErrorReport r;
  const Vector d = uCem - uH;
  r.relEnergy = relative(quad_norm(ops.A, d), quad_norm(ops.A, uH));
  r.relL2 = relative(quad_norm(ops.M, d), quad_norm(ops.M, uH));
  auto cmp = [&](const CorrectorComparison& c, std::optional<RelativeError>& en, std::optional<RelativeError>& l2) {
    if (!c.local || !c.global) return;
    const Vector e = *c.local - *c.global;
    en = relative(quad_norm(ops.A, e), quad_norm(ops.A, *c.global));
    l2 = relative(quad_norm(ops.M, e), quad_norm(ops.M, *c.global));
  };
  cmp(H, r.relH, r.relHL2);
  cmp(G, r.relG, r.relGL2);
  r.lambdaMin = aux.lambdaMin();
  r.lambdaRetained = aux.lambdaRetained();
  r.forceL2 = forceL2;
  r.theoremBound = forceL2 / std::sqrt(r.lambdaMin);
  return r;
}

}  // namespace cemgms
