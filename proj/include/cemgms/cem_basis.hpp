#pragma once

/** @file cem_basis.hpp
    @brief Multiscale basis functions from relaxed or constrained energy
    minimization on oversampling regions (or on the whole domain).
*/

#include "local_solver.hpp"
#include "parallel.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace cemgms {

/// One basis function per auxiliary function, in the AuxSpace column numbering.
struct CemBasisSet {
  Variant variant = Variant::Relaxed;
  std::optional<int> layers;  ///< empty for the global (whole-domain) basis
  int numDofs = 0;
  std::vector<LocalField> functions;

  int numColumns() const { return static_cast<int>(functions.size()); }

  /// Basis matrix B (fine DOFs x columns).
  SparseMatrix matrix() const
  {
    std::vector<Eigen::Triplet<double>> t;
    for (int c = 0; c < numColumns(); ++c) {
      const auto& f = functions[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < f.dofs.size(); ++i)
        if (f.values(static_cast<Eigen::Index>(i)) != 0.0)
          t.emplace_back(f.dofs[i], c, f.values(static_cast<Eigen::Index>(i)));
    }
    SparseMatrix B(numDofs, numColumns());
    B.setFromTriplets(t.begin(), t.end());
    return B;
  }

  Vector column(int c) const { return functions[static_cast<std::size_t>(c)].toGlobal(numDofs); }
};

/// Region used for a given layer count; empty layers means the whole domain.
inline OversampleRegion region_for(const Grid& grid, const BoundarySpec& bc, int j, std::optional<int> layers)
{
  return layers ? oversample(grid, bc, j, *layers) : whole_domain(grid, bc);
}

namespace detail {
inline Vector target_basis(const RegionSystem& sys, Variant v, int j, int i)
{
  const int r = sys.row(j, i);
  if (r < 0) throw std::invalid_argument("basis: target element lies outside the region");
  return sys.basis(v, r);
}
}  // namespace detail

/// Relaxed basis function for mode i of element j on `region`.
inline Vector relaxed_basis(const Grid& grid, const SparseMatrix& A, const AuxSpace& aux, const OversampleRegion& region,
                            int j, int i)
{
  const RegionSystem sys(grid, A, aux, region);
  return sys.toField(detail::target_basis(sys, Variant::Relaxed, j, i)).toGlobal(grid.numDofs());
}

/// Constrained basis function for mode i of element j on `region`.
inline Vector constrained_basis(const Grid& grid, const SparseMatrix& A, const AuxSpace& aux,
                                const OversampleRegion& region, int j, int i)
{
  const RegionSystem sys(grid, A, aux, region);
  return sys.toField(detail::target_basis(sys, Variant::Constrained, j, i)).toGlobal(grid.numDofs());
}

/// Basis functions of element j computed from an existing region system.
inline std::vector<LocalField> element_basis(const RegionSystem& sys, const AuxSpace& aux, Variant v, int j)
{
  std::vector<LocalField> out;
  for (int i = 0; i < aux[j].count(); ++i) out.push_back(sys.toField(detail::target_basis(sys, v, j, i)));
  return out;
}

/// V_cem for `layers` oversampling layers (or the whole domain when empty).
inline CemBasisSet build_space(const Grid& grid, const SparseMatrix& A, const AuxSpace& aux, const BoundarySpec& bc,
                               std::optional<int> layers, Variant v, const ParallelFor& pfor = ParallelFor{})
{
  CemBasisSet set;
  set.variant = v;
  set.layers = layers;
  set.numDofs = grid.numDofs();
  set.functions.resize(static_cast<std::size_t>(aux.totalCount()));
  auto store = [&](int j, std::vector<LocalField> fns) {
    for (int i = 0; i < static_cast<int>(fns.size()); ++i)
      set.functions[static_cast<std::size_t>(aux.column(j, i))] = std::move(fns[static_cast<std::size_t>(i)]);
  };
  if (!layers) {
    const RegionSystem sys(grid, A, aux, whole_domain(grid, bc));
    pfor(grid.numCoarseCells(), [&](int j) { store(j, element_basis(sys, aux, v, j)); });
  } else {
    pfor(grid.numCoarseCells(), [&](int j) {
      const RegionSystem sys(grid, A, aux, oversample(grid, bc, j, *layers));
      store(j, element_basis(sys, aux, v, j));
    });
  }
  return set;
}

}  // namespace cemgms
