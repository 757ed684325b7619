#pragma once

/** @file local_solver.hpp
    @brief Energy-minimization problems posed on one oversampling region.

    With P the matrix of functionals v -> s_k(v, phi_k^i) over all auxiliary
    functions of elements in the region (rows) and A the stiffness on the
    region's free DOFs, the two variants are

      relaxed:      (A + P^T P) x = b + P^T r
      constrained:  [A  P^T; P  0] [x; t] = [b; c]

    Both are reduced to solves with A plus a dense system on the small
    constraint space: with Y = A^{-1} P^T and C = P Y,

      relaxed:      x = w - Y (I + C)^{-1} (P w - r),  w = A^{-1} b
      constrained:  x = w - Y C^{-1} (P w - c).
*/

#include "aux_space.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include <stdexcept>
#include <string>
#include <vector>

namespace cemgms {

enum class Variant { Relaxed, Constrained };

inline const char* to_string(Variant v) { return v == Variant::Relaxed ? "relaxed" : "constrained"; }

inline Variant variant_from_string(const std::string& s)
{
  if (s == "relaxed") return Variant::Relaxed;
  if (s == "constrained") return Variant::Constrained;
  throw std::invalid_argument("unknown variant: " + s);
}

/// Field supported on a subset of global DOFs.
struct LocalField {
  std::vector<int> dofs;
  Vector values;

  void addTo(Vector& global, double scale = 1.0) const
  {
    for (std::size_t i = 0; i < dofs.size(); ++i) global(dofs[i]) += scale * values(static_cast<Eigen::Index>(i));
  }
  Vector toGlobal(int n) const
  {
    Vector g = Vector::Zero(n);
    addTo(g);
    return g;
  }
};

class RegionSystem {
public:
  RegionSystem(const Grid& grid, const SparseMatrix& A, const AuxSpace& aux, OversampleRegion region)
      : region_(std::move(region))
  {
    const int nLocal = static_cast<int>(region_.localDofs.size());
    freeOfLocal_.assign(static_cast<std::size_t>(nLocal), -1);
    for (int l = 0; l < nLocal; ++l)
      if (!region_.essentialMask[static_cast<std::size_t>(l)]) {
        freeOfLocal_[static_cast<std::size_t>(l)] = static_cast<int>(freeGlobal_.size());
        freeGlobal_.push_back(region_.localDofs[static_cast<std::size_t>(l)]);
      }
    if (freeGlobal_.empty()) throw std::runtime_error("region: no free DOFs");

    Af_ = restrict_sparse(A, freeGlobal_, static_cast<int>(A.rows()));
    chol_.compute(Af_);
    if (chol_.info() != Eigen::Success)
      throw std::runtime_error("region: stiffness factorization failed for element " + std::to_string(region_.center));

    // constraint rows, ordered by member element then mode
    std::vector<Eigen::Triplet<double>> t;
    int row = 0;
    for (int k : region_.members) {
      const auto& b = aux[k];
      rowOffset_.emplace_back(k, row);
      for (std::size_t l = 0; l < b.dofs.size(); ++l) {
        const int loc = region_.localIndex(grid, b.dofs[l]);
        const int f = freeOfLocal_[static_cast<std::size_t>(loc)];
        if (f < 0) continue;
        for (int i = 0; i < b.count(); ++i) {
          const double v = b.sVectors(static_cast<Eigen::Index>(l), i);
          if (v != 0.0) t.emplace_back(row + i, f, v);
        }
      }
      row += b.count();
    }
    P_.resize(row, static_cast<Eigen::Index>(freeGlobal_.size()));
    P_.setFromTriplets(t.begin(), t.end());

    Y_ = chol_.solve(Matrix(P_.transpose()));
    C_ = P_ * Y_;
    C_ = 0.5 * (C_ + C_.transpose());
    relaxedFactor_.compute(Matrix::Identity(row, row) + C_);
    constrainedFactor_.compute(C_);
  }

  const OversampleRegion& region() const { return region_; }
  const std::vector<int>& freeGlobal() const { return freeGlobal_; }
  const SparseMatrix& stiffness() const { return Af_; }
  const SparseMatrix& constraints() const { return P_; }
  int numConstraints() const { return static_cast<int>(P_.rows()); }
  int numFree() const { return static_cast<int>(freeGlobal_.size()); }

  /// Row of auxiliary function (element k, mode i), or -1 when k is not in the region.
  int row(int k, int i) const
  {
    for (const auto& [e, off] : rowOffset_)
      if (e == k) return off + i;
    return -1;
  }

  /// Free-DOF index of a global DOF, or -1.
  int freeIndex(const Grid& grid, int globalDof) const
  {
    const int l = region_.localIndex(grid, globalDof);
    return l < 0 ? -1 : freeOfLocal_[static_cast<std::size_t>(l)];
  }

  /// Multiscale basis function targeting constraint row r.
  Vector basis(Variant v, int r) const
  {
    Vector e = Vector::Zero(numConstraints());
    e(r) = 1.0;
    if (v == Variant::Relaxed) return Y_ * relaxedFactor_.solve(e);
    checkConstraintRank();
    return Y_ * constrainedFactor_.solve(e);
  }

  /// Solves with load b on free DOFs; c gives the constraint values (constrained variant only).
  Vector solve(Variant v, const Vector& b, const Vector& c) const
  {
    const Vector w = chol_.solve(b);
    const Vector Pw = P_ * w;
    if (v == Variant::Relaxed) return w - Y_ * relaxedFactor_.solve(Pw);
    checkConstraintRank();
    return w - Y_ * constrainedFactor_.solve(Pw - c);
  }

  /// Constraint multipliers t of the saddle system for a computed constrained solution x and load b.
  Vector multipliers(const Vector& x, const Vector& b) const
  {
    // A x + P^T t = b  =>  C t = P A^{-1} (b - A x)
    return constrainedFactor_.solve(P_ * chol_.solve(b - Af_ * x));
  }

  LocalField toField(const Vector& freeValues) const { return {freeGlobal_, freeValues}; }

  Vector gatherFree(const Vector& global) const
  {
    Vector out(numFree());
    for (int i = 0; i < numFree(); ++i) out(i) = global(freeGlobal_[static_cast<std::size_t>(i)]);
    return out;
  }

private:
  void checkConstraintRank() const
  {
    if (constrainedFactor_.info() != Eigen::Success)
      throw std::runtime_error("region: constraint block is rank deficient (duplicated auxiliary functions?)");
  }

  OversampleRegion region_;
  std::vector<int> freeGlobal_;
  std::vector<int> freeOfLocal_;
  std::vector<std::pair<int, int>> rowOffset_;
  SparseMatrix Af_;
  SparseMatrix P_;
  Eigen::SimplicialLLT<SparseMatrix> chol_;
  Matrix Y_;
  Matrix C_;
  Eigen::LLT<Matrix> relaxedFactor_;
  Eigen::LLT<Matrix> constrainedFactor_;
};

}  // namespace cemgms
