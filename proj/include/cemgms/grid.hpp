#pragma once

/** @file grid.hpp
    @brief Nested coarse/fine structured quadrilateral grids, boundary facets,
    oversampling regions and the coarse partition of unity.

    Fine nodes are numbered lexicographically (x fastest). Every node carries
    two displacement DOFs, numbered 2*node + component.
*/

#include <algorithm>
#include <cmath>
#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cemgms {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Two-component vector value (displacement, traction, body force).
using Vec2 = std::array<double, 2>;

using VectorField = std::function<Vec2(const Point&)>;

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  bool contains(const Point& p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }
};

struct GridSpec {
  int Nx = 1;  ///< coarse cells in x
  int Ny = 1;  ///< coarse cells in y
  int nx = 1;  ///< fine cells per coarse cell in x
  int ny = 1;  ///< fine cells per coarse cell in y
  Rect domain{};
};

/// Closed rectangle of fine nodes [ix0, ix1] x [iy0, iy1] with a compact local numbering.
struct NodeBox {
  int ix0 = 0, ix1 = 0, iy0 = 0, iy1 = 0;

  int width() const { return ix1 - ix0 + 1; }
  int height() const { return iy1 - iy0 + 1; }
  int numNodes() const { return width() * height(); }
  int numDofs() const { return 2 * numNodes(); }
  bool containsNode(int ix, int iy) const { return ix >= ix0 && ix <= ix1 && iy >= iy0 && iy <= iy1; }
  int localNode(int ix, int iy) const { return (iy - iy0) * width() + (ix - ix0); }
};

enum class Side { Bottom = 0, Right = 1, Top = 2, Left = 3 };

/// A fine boundary edge. Nodes are ordered counter-clockwise along the boundary.
struct Facet {
  int id = 0;
  Side side = Side::Bottom;
  int node0 = 0;
  int node1 = 0;
  Point a{};
  Point b{};

  Point midpoint() const { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }
  double length() const;
};

class Grid {
public:
  explicit Grid(const GridSpec& spec) : spec_(spec)
  {
    if (spec.Nx < 1 || spec.Ny < 1 || spec.nx < 1 || spec.ny < 1)
      throw std::invalid_argument("grid: all cell counts must be >= 1");
    if (!(spec.domain.x1 > spec.domain.x0) || !(spec.domain.y1 > spec.domain.y0))
      throw std::invalid_argument("grid: degenerate domain");
    hx_ = (spec.domain.x1 - spec.domain.x0) / fineCellsX();
    hy_ = (spec.domain.y1 - spec.domain.y0) / fineCellsY();
    buildFacets();
  }

  const GridSpec& spec() const { return spec_; }

  int fineCellsX() const { return spec_.Nx * spec_.nx; }
  int fineCellsY() const { return spec_.Ny * spec_.ny; }
  int nodesX() const { return fineCellsX() + 1; }
  int nodesY() const { return fineCellsY() + 1; }
  int numFineNodes() const { return nodesX() * nodesY(); }
  int numFineCells() const { return fineCellsX() * fineCellsY(); }
  int numCoarseCells() const { return spec_.Nx * spec_.Ny; }
  int numCoarseNodes() const { return (spec_.Nx + 1) * (spec_.Ny + 1); }
  int numDofs() const { return 2 * numFineNodes(); }

  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double Hx() const { return hx_ * spec_.nx; }
  double Hy() const { return hy_ * spec_.ny; }

  int node(int ix, int iy) const { return iy * nodesX() + ix; }
  int nodeIx(int n) const { return n % nodesX(); }
  int nodeIy(int n) const { return n / nodesX(); }
  Point nodeCoord(int n) const { return {spec_.domain.x0 + nodeIx(n) * hx_, spec_.domain.y0 + nodeIy(n) * hy_}; }

  int fineCell(int cx, int cy) const { return cy * fineCellsX() + cx; }
  int fineCellX(int c) const { return c % fineCellsX(); }
  int fineCellY(int c) const { return c / fineCellsX(); }
  Point fineCellOrigin(int c) const
  {
    return {spec_.domain.x0 + fineCellX(c) * hx_, spec_.domain.y0 + fineCellY(c) * hy_};
  }
  Point fineCellCenter(int c) const
  {
    const auto o = fineCellOrigin(c);
    return {o.x + 0.5 * hx_, o.y + 0.5 * hy_};
  }
  /// Counter-clockwise node list of a fine cell: (0,0), (1,0), (1,1), (0,1).
  std::array<int, 4> fineCellNodes(int c) const
  {
    const int cx = fineCellX(c), cy = fineCellY(c);
    return {node(cx, cy), node(cx + 1, cy), node(cx + 1, cy + 1), node(cx, cy + 1)};
  }

  int coarseCell(int I, int J) const { return J * spec_.Nx + I; }
  int coarseX(int j) const { return j % spec_.Nx; }
  int coarseY(int j) const { return j / spec_.Nx; }
  int coarseOfFineCell(int c) const { return coarseCell(fineCellX(c) / spec_.nx, fineCellY(c) / spec_.ny); }

  /// Fine cells contained in coarse cell j.
  std::vector<int> fineCellsOf(int j) const { return fineCellsOfBlock(coarseX(j), coarseX(j), coarseY(j), coarseY(j)); }

  /// Fine cells inside the coarse block [I0, I1] x [J0, J1].
  std::vector<int> fineCellsOfBlock(int I0, int I1, int J0, int J1) const
  {
    std::vector<int> cells;
    cells.reserve(static_cast<std::size_t>((I1 - I0 + 1) * spec_.nx * (J1 - J0 + 1) * spec_.ny));
    for (int cy = J0 * spec_.ny; cy < (J1 + 1) * spec_.ny; ++cy)
      for (int cx = I0 * spec_.nx; cx < (I1 + 1) * spec_.nx; ++cx) cells.push_back(fineCell(cx, cy));
    return cells;
  }

  /// Fine nodes of the closed coarse block [I0, I1] x [J0, J1].
  NodeBox nodeBoxOfBlock(int I0, int I1, int J0, int J1) const
  {
    return {I0 * spec_.nx, (I1 + 1) * spec_.nx, J0 * spec_.ny, (J1 + 1) * spec_.ny};
  }
  NodeBox nodeBoxOf(int j) const { return nodeBoxOfBlock(coarseX(j), coarseX(j), coarseY(j), coarseY(j)); }

  /// Global DOFs of a node box in its local order (node-major, component-minor).
  std::vector<int> dofsOf(const NodeBox& box) const
  {
    std::vector<int> dofs;
    dofs.reserve(static_cast<std::size_t>(box.numDofs()));
    for (int iy = box.iy0; iy <= box.iy1; ++iy)
      for (int ix = box.ix0; ix <= box.ix1; ++ix) {
        dofs.push_back(2 * node(ix, iy));
        dofs.push_back(2 * node(ix, iy) + 1);
      }
    return dofs;
  }

  int coarseNode(int I, int J) const { return J * (spec_.Nx + 1) + I; }
  Point coarseNodeCoord(int k) const
  {
    const int I = k % (spec_.Nx + 1), J = k / (spec_.Nx + 1);
    return {spec_.domain.x0 + I * Hx(), spec_.domain.y0 + J * Hy()};
  }
  /// The four coarse nodes of coarse cell j, counter-clockwise from the lower-left corner.
  std::array<int, 4> coarseCellNodes(int j) const
  {
    const int I = coarseX(j), J = coarseY(j);
    return {coarseNode(I, J), coarseNode(I + 1, J), coarseNode(I + 1, J + 1), coarseNode(I, J + 1)};
  }

  const std::vector<Facet>& boundaryFacets() const { return facets_; }

  /// Boundary facets lying on the boundary of coarse cell j.
  std::vector<int> facetsOfCoarseCell(int j) const
  {
    const NodeBox box = nodeBoxOf(j);
    std::vector<int> out;
    for (const auto& f : facets_) {
      const int ax = nodeIx(f.node0), ay = nodeIy(f.node0), bx = nodeIx(f.node1), by = nodeIy(f.node1);
      if (box.containsNode(ax, ay) && box.containsNode(bx, by)) out.push_back(f.id);
    }
    return out;
  }

private:
  void buildFacets()
  {
    const int fx = fineCellsX(), fy = fineCellsY();
    auto add = [&](Side s, int n0, int n1) {
      Facet f;
      f.id = static_cast<int>(facets_.size());
      f.side = s;
      f.node0 = n0;
      f.node1 = n1;
      f.a = nodeCoord(n0);
      f.b = nodeCoord(n1);
      facets_.push_back(f);
    };
    for (int k = 0; k < fx; ++k) add(Side::Bottom, node(k, 0), node(k + 1, 0));
    for (int k = 0; k < fy; ++k) add(Side::Right, node(fx, k), node(fx, k + 1));
    for (int k = fx; k > 0; --k) add(Side::Top, node(k, fy), node(k - 1, fy));
    for (int k = fy; k > 0; --k) add(Side::Left, node(0, k), node(0, k - 1));
  }

  GridSpec spec_;
  double hx_ = 0.0, hy_ = 0.0;
  std::vector<Facet> facets_;
};

inline Grid build_grid(const GridSpec& spec) { return Grid(spec); }

inline double Facet::length() const
{
  const double dx = b.x - a.x, dy = b.y - a.y;
  return std::sqrt(dx * dx + dy * dy);
}

/// Mixed boundary data. Facets not flagged Dirichlet carry the traction g.
struct BoundarySpec {
  std::vector<char> dirichlet;  ///< per boundary facet id
  VectorField h;                ///< displacement on Gamma_a (and its extension into the domain)
  VectorField g;                ///< traction on Gamma_b

  bool isDirichlet(int facet) const { return dirichlet[static_cast<std::size_t>(facet)] != 0; }
  bool hasNeumann() const { return std::any_of(dirichlet.begin(), dirichlet.end(), [](char c) { return c == 0; }); }
};

inline const VectorField kZeroField = [](const Point&) { return Vec2{0.0, 0.0}; };

/// Classifies facets by a predicate on their midpoint and validates the result.
inline BoundarySpec make_boundary(const Grid& grid, const std::function<bool(const Facet&)>& isDirichlet,
                                  VectorField h = kZeroField, VectorField g = kZeroField)
{
  BoundarySpec b;
  b.dirichlet.reserve(grid.boundaryFacets().size());
  for (const auto& f : grid.boundaryFacets()) b.dirichlet.push_back(isDirichlet(f) ? 1 : 0);
  if (std::none_of(b.dirichlet.begin(), b.dirichlet.end(), [](char c) { return c != 0; }))
    throw std::invalid_argument("boundary: Gamma_a must contain at least one facet");
  b.h = h ? std::move(h) : kZeroField;
  b.g = g ? std::move(g) : kZeroField;
  return b;
}

/// Nodes touched by Dirichlet facets, as a per-node flag.
inline std::vector<char> dirichlet_nodes(const Grid& grid, const BoundarySpec& bc)
{
  std::vector<char> flag(static_cast<std::size_t>(grid.numFineNodes()), 0);
  for (const auto& f : grid.boundaryFacets())
    if (bc.isDirichlet(f.id)) {
      flag[static_cast<std::size_t>(f.node0)] = 1;
      flag[static_cast<std::size_t>(f.node1)] = 1;
    }
  return flag;
}

/// Coarse cells within Chebyshev distance `layers` of a center cell, with the
/// local DOF numbering of the closed region and its essential (zero) DOFs.
struct OversampleRegion {
  int center = 0;
  int layers = 0;
  int I0 = 0, I1 = 0, J0 = 0, J1 = 0;  ///< coarse block, inclusive
  std::vector<int> members;
  NodeBox box;
  std::vector<int> localDofs;        ///< local index -> global DOF
  std::vector<char> essentialMask;   ///< per local DOF

  bool coversDomain(const Grid& g) const { return I0 == 0 && J0 == 0 && I1 == g.spec().Nx - 1 && J1 == g.spec().Ny - 1; }
  bool containsCoarse(int I, int J) const { return I >= I0 && I <= I1 && J >= J0 && J <= J1; }

  /// Global DOF -> local index, or -1 when outside the closed region.
  int localIndex(const Grid& g, int globalDof) const
  {
    const int n = globalDof / 2;
    const int ix = g.nodeIx(n), iy = g.nodeIy(n);
    if (!box.containsNode(ix, iy)) return -1;
    return 2 * box.localNode(ix, iy) + (globalDof % 2);
  }

  /// Local indices of free (non-essential) DOFs, ascending.
  std::vector<int> freeLocal() const
  {
    std::vector<int> out;
    for (std::size_t i = 0; i < essentialMask.size(); ++i)
      if (!essentialMask[i]) out.push_back(static_cast<int>(i));
    return out;
  }
};

/// Builds K_{j,m}. Zero data is imposed on the artificial boundary (region
/// boundary interior to the domain) and on Gamma_a; Gamma_b stays free.
inline OversampleRegion oversample(const Grid& grid, const BoundarySpec& bc, int j, int m)
{
  if (j < 0 || j >= grid.numCoarseCells()) throw std::out_of_range("oversample: coarse index out of range");
  if (m < 0) throw std::invalid_argument("oversample: layers must be >= 0");
  const auto& s = grid.spec();
  OversampleRegion r;
  r.center = j;
  r.layers = m;
  const int I = grid.coarseX(j), J = grid.coarseY(j);
  r.I0 = std::max(0, I - m);
  r.I1 = std::min(s.Nx - 1, I + m);
  r.J0 = std::max(0, J - m);
  r.J1 = std::min(s.Ny - 1, J + m);
  for (int b = r.J0; b <= r.J1; ++b)
    for (int a = r.I0; a <= r.I1; ++a) r.members.push_back(grid.coarseCell(a, b));
  r.box = grid.nodeBoxOfBlock(r.I0, r.I1, r.J0, r.J1);
  r.localDofs = grid.dofsOf(r.box);
  r.essentialMask.assign(r.localDofs.size(), 0);

  auto markNode = [&](int ix, int iy) {
    const int l = r.box.localNode(ix, iy);
    r.essentialMask[static_cast<std::size_t>(2 * l)] = 1;
    r.essentialMask[static_cast<std::size_t>(2 * l + 1)] = 1;
  };
  const auto& box = r.box;
  if (box.ix0 > 0)
    for (int iy = box.iy0; iy <= box.iy1; ++iy) markNode(box.ix0, iy);
  if (box.ix1 < grid.nodesX() - 1)
    for (int iy = box.iy0; iy <= box.iy1; ++iy) markNode(box.ix1, iy);
  if (box.iy0 > 0)
    for (int ix = box.ix0; ix <= box.ix1; ++ix) markNode(ix, box.iy0);
  if (box.iy1 < grid.nodesY() - 1)
    for (int ix = box.ix0; ix <= box.ix1; ++ix) markNode(ix, box.iy1);

  for (const auto& f : grid.boundaryFacets()) {
    if (!bc.isDirichlet(f.id)) continue;
    for (int n : {f.node0, f.node1}) {
      const int ix = grid.nodeIx(n), iy = grid.nodeIy(n);
      if (box.containsNode(ix, iy)) markNode(ix, iy);
    }
  }
  return r;
}

/// Region covering the whole domain (the global problems).
inline OversampleRegion whole_domain(const Grid& grid, const BoundarySpec& bc)
{
  return oversample(grid, bc, 0, std::max(grid.spec().Nx, grid.spec().Ny));
}

/// Bilinear hat functions on the coarse mesh.
class PartitionOfUnity {
public:
  explicit PartitionOfUnity(const Grid& grid) : grid_(&grid) {}

  int size() const { return grid_->numCoarseNodes(); }

  double value(int k, const Point& p) const
  {
    const auto [wx, wy] = factors(k, p);
    return wx[0] * wy[0];
  }

  Vec2 gradient(int k, const Point& p) const
  {
    const auto [wx, wy] = factors(k, p);
    return {wx[1] * wy[0], wx[0] * wy[1]};
  }

  /// Nodal values of hat k on all fine nodes.
  std::vector<double> nodalValues(int k) const
  {
    std::vector<double> v(static_cast<std::size_t>(grid_->numFineNodes()));
    for (int n = 0; n < grid_->numFineNodes(); ++n) v[static_cast<std::size_t>(n)] = value(k, grid_->nodeCoord(n));
    return v;
  }

  /// Sum over all hats of |grad chi|^2 at p, using only the hats of the coarse cell holding p.
  double sumGradSquared(const Point& p, int coarseCell) const
  {
    double s = 0.0;
    for (int k : grid_->coarseCellNodes(coarseCell)) {
      const auto g = gradientIn(k, p, coarseCell);
      s += g[0] * g[0] + g[1] * g[1];
    }
    return s;
  }

  /// Gradient of hat k restricted to coarse cell `cell` (one-sided at cell edges).
  Vec2 gradientIn(int k, const Point& p, int cell) const
  {
    const auto& g = *grid_;
    const auto c0 = g.coarseNodeCoord(g.coarseCellNodes(cell)[0]);
    const auto ck = g.coarseNodeCoord(k);
    const double H = g.Hx(), Hy = g.Hy();
    const double sx = (ck.x > c0.x + 0.5 * H) ? 1.0 : -1.0;
    const double sy = (ck.y > c0.y + 0.5 * Hy) ? 1.0 : -1.0;
    const double tx = (p.x - c0.x) / H, ty = (p.y - c0.y) / Hy;
    const double fx = sx > 0 ? tx : 1.0 - tx;
    const double fy = sy > 0 ? ty : 1.0 - ty;
    return {sx / H * fy, sy / Hy * fx};
  }

private:
  // (value, derivative) of the 1D hat factors in x and y.
  std::pair<std::array<double, 2>, std::array<double, 2>> factors(int k, const Point& p) const
  {
    const auto c = grid_->coarseNodeCoord(k);
    auto hat = [](double t, double H) -> std::array<double, 2> {
      const double a = std::abs(t) / H;
      if (a >= 1.0) return {0.0, 0.0};
      return {1.0 - a, (t > 0 ? -1.0 : 1.0) / H};
    };
    return {hat(p.x - c.x, grid_->Hx()), hat(p.y - c.y, grid_->Hy())};
  }

  const Grid* grid_;
};

inline PartitionOfUnity partition_of_unity(const Grid& grid) { return PartitionOfUnity(grid); }

}  // namespace cemgms
