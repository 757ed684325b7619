#include "catch_amalgamated.hpp"

#include <cemgms/grid.hpp>

#include <set>

using namespace cemgms;

TEST_CASE("grid counts")
{
  const Grid a({2, 2, 2, 2});
  CHECK(a.numFineNodes() == 25);
  CHECK(a.numFineCells() == 16);
  CHECK(a.numCoarseCells() == 4);
  CHECK(Grid({20, 20, 4, 4}).numFineNodes() == 81 * 81);
  const Grid b({1, 1, 1, 1});
  CHECK(b.numFineNodes() == 4);
  CHECK(b.numFineCells() == 1);
  CHECK_THROWS_AS(Grid({0, 1, 1, 1}), std::invalid_argument);
}

TEST_CASE("fine cells belong to their coarse cell")
{
  const Grid g({3, 2, 4, 3});
  for (int j = 0; j < g.numCoarseCells(); ++j) {
    const auto cells = g.fineCellsOf(j);
    CHECK(cells.size() == 12u);
    for (int c : cells) CHECK(g.coarseOfFineCell(c) == j);
  }
  // node coordinates lie on the uniform lattice
  for (int n = 0; n < g.numFineNodes(); ++n) {
    const auto p = g.nodeCoord(n);
    CHECK(p.x == Catch::Approx(g.nodeIx(n) / 12.0).margin(1e-15));
    CHECK(p.y == Catch::Approx(g.nodeIy(n) / 6.0).margin(1e-15));
  }
}

TEST_CASE("boundary facets cover the boundary once")
{
  const Grid g({2, 3, 2, 2});
  const auto& f = g.boundaryFacets();
  CHECK(f.size() == static_cast<std::size_t>(2 * (g.fineCellsX() + g.fineCellsY())));
  double len = 0.0;
  for (const auto& e : f) len += e.length();
  CHECK(len == Catch::Approx(4.0).epsilon(1e-14));
  int perCell = 0;
  for (int j = 0; j < g.numCoarseCells(); ++j) perCell += static_cast<int>(g.facetsOfCoarseCell(j).size());
  CHECK(perCell == static_cast<int>(f.size()));
}

TEST_CASE("oversampling regions")
{
  const Grid g({5, 5, 2, 2});
  const auto bc = make_boundary(g, [](const Facet&) { return true; });
  CHECK(oversample(g, bc, g.coarseCell(2, 2), 1).members.size() == 9u);
  CHECK(oversample(g, bc, g.coarseCell(0, 0), 1).members.size() == 4u);
  CHECK(oversample(g, bc, g.coarseCell(4, 0), 1).members.size() == 4u);
  CHECK(oversample(g, bc, g.coarseCell(2, 0), 1).members.size() == 6u);
  for (int j = 0; j < g.numCoarseCells(); ++j) {
    const auto r = oversample(g, bc, j, 5);
    CHECK(r.members.size() == 25u);
    CHECK(r.coversDomain(g));
  }
  CHECK(oversample(g, bc, 7, 0).members == std::vector<int>{7});
  CHECK_THROWS_AS(oversample(g, bc, 25, 1), std::out_of_range);
  CHECK_THROWS(oversample(g, bc, 0, -1));
}

TEST_CASE("regions grow monotonically with m")
{
  const Grid g({6, 4, 1, 1});
  const auto bc = make_boundary(g, [](const Facet&) { return true; });
  for (int j = 0; j < g.numCoarseCells(); ++j)
    for (int m = 0; m < 6; ++m) {
      const auto a = oversample(g, bc, j, m).members;
      const auto b = oversample(g, bc, j, m + 1).members;
      const std::set<int> sb(b.begin(), b.end());
      for (int k : a) CHECK(sb.count(k) == 1);
      CHECK(b.size() >= a.size());
    }
}

TEST_CASE("region DOF map round-trip")
{
  const Grid g({4, 3, 3, 2});
  const auto bc = make_boundary(g, [](const Facet& f) { return f.side == Side::Top; });
  for (int j = 0; j < g.numCoarseCells(); ++j)
    for (int m = 0; m < 4; ++m) {
      const auto r = oversample(g, bc, j, m);
      for (std::size_t l = 0; l < r.localDofs.size(); ++l) CHECK(r.localIndex(g, r.localDofs[l]) == static_cast<int>(l));
    }
}

TEST_CASE("region essential DOFs: artificial boundary and Gamma_a only")
{
  const Grid g({4, 4, 2, 2});
  const auto bc = make_boundary(g, [](const Facet& f) { return f.side == Side::Top; });
  const auto r = oversample(g, bc, g.coarseCell(0, 0), 1);
  for (std::size_t l = 0; l < r.localDofs.size(); ++l) {
    const auto p = g.nodeCoord(r.localDofs[l] / 2);
    const bool artificial = std::abs(p.x - 0.5) < 1e-12 || std::abs(p.y - 0.5) < 1e-12;
    CHECK(static_cast<bool>(r.essentialMask[l]) == artificial);
  }
  // a region touching the top edge fixes it
  const auto t = oversample(g, bc, g.coarseCell(1, 3), 0);
  for (std::size_t l = 0; l < t.localDofs.size(); ++l) {
    const auto p = g.nodeCoord(t.localDofs[l] / 2);
    if (std::abs(p.y - 1.0) < 1e-12) CHECK(t.essentialMask[l]);
  }
}

TEST_CASE("Gamma_a must be nonempty")
{
  const Grid g({2, 2, 1, 1});
  CHECK_THROWS_AS(make_boundary(g, [](const Facet&) { return false; }), std::invalid_argument);
}

TEST_CASE("partition of unity")
{
  const Grid g({4, 3, 3, 2});
  const PartitionOfUnity pou(g);
  std::vector<double> sum(static_cast<std::size_t>(g.numFineNodes()), 0.0);
  for (int k = 0; k < pou.size(); ++k) {
    const auto v = pou.nodalValues(k);
    for (std::size_t n = 0; n < v.size(); ++n) sum[n] += v[n];
  }
  for (double s : sum) CHECK(std::abs(s - 1.0) <= 1e-14);

  // Lagrange property
  for (int k = 0; k < pou.size(); ++k)
    for (int l = 0; l < pou.size(); ++l)
      CHECK(pou.value(k, g.coarseNodeCoord(l)) == (k == l ? 1.0 : 0.0));

  // gradients sum to zero inside every coarse cell
  for (int j = 0; j < g.numCoarseCells(); ++j)
    for (int c : g.fineCellsOf(j)) {
      const Point p = g.fineCellCenter(c);
      Vec2 s{0.0, 0.0};
      for (int k : g.coarseCellNodes(j)) {
        const auto d = pou.gradientIn(k, p, j);
        s[0] += d[0];
        s[1] += d[1];
      }
      CHECK(std::abs(s[0]) <= 1e-12);
      CHECK(std::abs(s[1]) <= 1e-12);
    }
}

TEST_CASE("hat gradient matches symbolic bilinear derivative")
{
  const Grid g({4, 4, 2, 2});
  const PartitionOfUnity pou(g);
  const double H = 0.25;
  // chi_(0,0) = (1 - x/H)(1 - y/H) on cell (0,0)
  for (double x : {0.03, 0.11, 0.2})
    for (double y : {0.01, 0.125, 0.24}) {
      const auto d = pou.gradient(g.coarseNode(0, 0), {x, y});
      CHECK(d[0] == Catch::Approx(-(1 - y / H) / H).epsilon(1e-14));
      CHECK(d[1] == Catch::Approx(-(1 - x / H) / H).epsilon(1e-14));
      const auto e = pou.gradientIn(g.coarseNode(0, 0), {x, y}, 0);
      CHECK(e[0] == Catch::Approx(d[0]).epsilon(1e-14));
      CHECK(e[1] == Catch::Approx(d[1]).epsilon(1e-14));
    }
}
