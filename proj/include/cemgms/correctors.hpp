#pragma once

/** @file correctors.hpp
    @brief Dirichlet (H) and Neumann (G) boundary correctors, localized to
    oversampling regions or posed on the whole domain.

    Element j contributes a local problem whose load lives on K_j only:
    int_{K_j} sigma(h) : eps(z) for H and int_{dK_j cap Gamma_b} g . z for G.
    In the constrained variant the constraint values are the same functionals
    applied to the auxiliary functions of the region; only element j's own
    auxiliary functions can be nonzero there.
*/

#include "cem_basis.hpp"

#include <optional>
#include <vector>

namespace cemgms {

enum class CorrectorKind { Dirichlet, Neumann };

struct Corrector {
  CorrectorKind kind = CorrectorKind::Dirichlet;
  Variant variant = Variant::Relaxed;
  std::optional<int> layers;  ///< empty for the global operator
  Vector field;               ///< sum of element contributions
  int elementsSolved = 0;
};

/// Element load for one corrector, over the closed element's local DOFs (AuxBasis ordering).
struct ElementLoad {
  int element = 0;
  Vector local;
  bool active = false;
};

/// int_{K_j} sigma(h_interp) : eps(phi) for every local DOF of K_j; inactive when h_interp is
/// a rigid motion on K_j up to roundoff.
inline ElementLoad dirichlet_element_load(const AuxSpace& aux, int j, const Vector& hInterp)
{
  const auto& b = aux[j];
  const Vector h = b.restrictGlobal(hInterp);
  ElementLoad e{j, b.forms.A * h, false};
  e.active = e.local.norm() > 1e-13 * b.forms.A.norm() * h.norm();
  if (!e.active) e.local.setZero();
  return e;
}

/// int_{dK_j cap Gamma_b} g . phi for every local DOF of K_j; inactive if K_j has no Neumann facet.
inline ElementLoad neumann_element_load(const Grid& grid, const AuxSpace& aux, const BoundarySpec& bc, int j)
{
  const auto& b = aux[j];
  ElementLoad e{j, Vector::Zero(static_cast<Eigen::Index>(b.dofs.size())), false};
  Vector global;
  for (int fid : grid.facetsOfCoarseCell(j)) {
    if (bc.isDirichlet(fid)) continue;
    if (!e.active) global = Vector::Zero(grid.numDofs());
    e.active = true;
    add_facet_traction(grid.boundaryFacets()[static_cast<std::size_t>(fid)], bc.g, global);
  }
  if (e.active) e.local = b.restrictGlobal(global);
  return e;
}

/// Solves one element's corrector problem on a region system; returns free-DOF values.
inline Vector solve_element_corrector(const Grid& grid, const RegionSystem& sys, const AuxSpace& aux,
                                      const ElementLoad& load, Variant v)
{
  const auto& b = aux[load.element];
  Vector rhs = Vector::Zero(sys.numFree());
  for (std::size_t l = 0; l < b.dofs.size(); ++l) {
    const int f = sys.freeIndex(grid, b.dofs[l]);
    if (f >= 0) rhs(f) += load.local(static_cast<Eigen::Index>(l));
  }
  Vector c = Vector::Zero(sys.numConstraints());
  if (v == Variant::Constrained) {
    const Vector own = b.vectors.transpose() * load.local;
    for (int i = 0; i < b.count(); ++i) c(sys.row(load.element, i)) = own(i);
  }
  return sys.solve(v, rhs, c);
}

namespace detail {

template <class LoadFn>
Corrector build_corrector(const Grid& grid, const SparseMatrix& A, const AuxSpace& aux, const BoundarySpec& bc,
                          std::optional<int> layers, Variant v, CorrectorKind kind, const LoadFn& loadOf,
                          const ParallelFor& pfor)
{
  Corrector out;
  out.kind = kind;
  out.variant = v;
  out.layers = layers;
  out.field = Vector::Zero(grid.numDofs());
  const int n = grid.numCoarseCells();
  std::vector<ElementLoad> loads(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) loads[static_cast<std::size_t>(j)] = loadOf(j);
  std::vector<LocalField> parts(static_cast<std::size_t>(n));

  if (!layers) {
    bool any = false;
    for (const auto& l : loads) any = any || l.active;
    if (any) {
      const RegionSystem sys(grid, A, aux, whole_domain(grid, bc));
      pfor(n, [&](int j) {
        const auto& l = loads[static_cast<std::size_t>(j)];
        if (l.active) parts[static_cast<std::size_t>(j)] = sys.toField(solve_element_corrector(grid, sys, aux, l, v));
      });
    }
  } else {
    pfor(n, [&](int j) {
      const auto& l = loads[static_cast<std::size_t>(j)];
      if (!l.active) return;
      const RegionSystem sys(grid, A, aux, oversample(grid, bc, j, *layers));
      parts[static_cast<std::size_t>(j)] = sys.toField(solve_element_corrector(grid, sys, aux, l, v));
    });
  }
  // fixed summation order keeps results independent of the schedule
  for (int j = 0; j < n; ++j)
    if (loads[static_cast<std::size_t>(j)].active) {
      parts[static_cast<std::size_t>(j)].addTo(out.field);
      ++out.elementsSolved;
    }
  return out;
}

}  // namespace detail

/// H^m h (or H_glo h when `layers` is empty) for the interpolated Dirichlet data.
inline Corrector dirichlet_corrector(const Grid& grid, const SparseMatrix& A, const AuxSpace& aux,
                                     const BoundarySpec& bc, const Vector& hInterp, std::optional<int> layers,
                                     Variant v, const ParallelFor& pfor = ParallelFor{})
{
  return detail::build_corrector(grid, A, aux, bc, layers, v, CorrectorKind::Dirichlet,
                                 [&](int j) { return dirichlet_element_load(aux, j, hInterp); }, pfor);
}

/// G^m g (or G_glo g when `layers` is empty) for the traction data on Gamma_b.
inline Corrector neumann_corrector(const Grid& grid, const SparseMatrix& A, const AuxSpace& aux, const BoundarySpec& bc,
                                   std::optional<int> layers, Variant v, const ParallelFor& pfor = ParallelFor{})
{
  return detail::build_corrector(grid, A, aux, bc, layers, v, CorrectorKind::Neumann,
                                 [&](int j) { return neumann_element_load(grid, aux, bc, j); }, pfor);
}

struct CorrectorPair {
  Corrector H;
  Corrector G;
};

/// Whole-domain correctors; both share one factorization.
inline CorrectorPair global_corrector_pair(const Grid& grid, const SparseMatrix& A, const AuxSpace& aux,
                                           const BoundarySpec& bc, const Vector& hInterp, Variant v,
                                           const ParallelFor& pfor = ParallelFor{})
{
  CorrectorPair p;
  p.H = {CorrectorKind::Dirichlet, v, std::nullopt, Vector::Zero(grid.numDofs()), 0};
  p.G = {CorrectorKind::Neumann, v, std::nullopt, Vector::Zero(grid.numDofs()), 0};
  const int n = grid.numCoarseCells();
  std::vector<ElementLoad> hl(static_cast<std::size_t>(n)), gl(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    hl[static_cast<std::size_t>(j)] = dirichlet_element_load(aux, j, hInterp);
    gl[static_cast<std::size_t>(j)] = neumann_element_load(grid, aux, bc, j);
  }
  const RegionSystem sys(grid, A, aux, whole_domain(grid, bc));
  std::vector<LocalField> hp(static_cast<std::size_t>(n)), gp(static_cast<std::size_t>(n));
  pfor(n, [&](int j) {
    const auto s = static_cast<std::size_t>(j);
    if (hl[s].active) hp[s] = sys.toField(solve_element_corrector(grid, sys, aux, hl[s], v));
    if (gl[s].active) gp[s] = sys.toField(solve_element_corrector(grid, sys, aux, gl[s], v));
  });
  for (int j = 0; j < n; ++j) {
    const auto s = static_cast<std::size_t>(j);
    if (hl[s].active) {
      hp[s].addTo(p.H.field);
      ++p.H.elementsSolved;
    }
    if (gl[s].active) {
      gp[s].addTo(p.G.field);
      ++p.G.elementsSolved;
    }
  }
  return p;
}

}  // namespace cemgms
