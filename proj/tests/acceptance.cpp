// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

using namespace cemgms;
using oracle::energy;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

template <class Fn>
void criterion(int id, const char* name, double limitSeconds, Fn&& fn)
{
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double t = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool inTime = t < limitSeconds;
  const bool pass = o.ok && inTime;
  if (!pass) ++failures;
  char timing[96];
  std::snprintf(timing, sizeof timing, "%.2f s of %.0f s%s", t, limitSeconds, inTime ? "" : " exceeded");
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << name << " [" << o.detail << "; " << timing << "]"
            << std::endl;
}

std::string fmt(double v)
{
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", v);
  return b;
}

RunConfig decay_config()
{
  RunConfig c;
  c.model = "3";
  c.grid = {10, 10, 8, 8, {}};
  c.medium = "cross_blob";
  c.contrasts = {1e4};
  c.layers = {1, 2, 3, 4};
  c.timing = false;
  return c;
}

Outcome patch_test()
{
  const Grid g({10, 10, 8, 8});
  const MaterialField m(g.numFineCells(), {1.0, 0.25});
  const auto ops = assemble(g, m, kappa_tilde(g, m, PartitionOfUnity(g)));
  const VectorField lin = [](const Point& p) { return Vec2{0.2 + 0.7 * p.x - 0.3 * p.y, -0.1 + 0.4 * p.x + 0.9 * p.y}; };
  const auto bc = make_boundary(g, [](const Facet&) { return true; }, lin);
  const Vector hI = interpolate(g, lin);
  const auto sol = fine_solve(ops.A, load_vector(g, ops.A, bc, kZeroField), essential_dofs(g, bc), hI);
  const double rel = energy(ops.A, sol.u - hI) / energy(ops.A, hI);
  return {rel <= 1e-10, "relEnergy " + fmt(rel)};
}

Outcome aux_space()
{
  const Grid g({5, 5, 4, 4});
  const auto medium = inclusion_medium(g, presets::model1(), {1.0, 0.25}, {1e4, 0.45});
  const auto kappa = kappa_tilde(g, medium, PartitionOfUnity(g));
  const auto aux = build_aux_space(g, medium, kappa, 3);
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> N(0.0, 1.0);
  double orth = 0.0, res = 0.0, excess = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.numCoarseCells(); ++j) {
    const auto& b = aux[j];
    const Matrix G = b.vectors.transpose() * b.forms.S * b.vectors;
    orth = std::max(orth, (G - Matrix::Identity(b.count(), b.count())).cwiseAbs().maxCoeff());
    for (int i = 0; i < b.count(); ++i) {
      const Vector r = b.forms.A * b.vectors.col(i) - b.eigenvalues(i) * b.forms.S * b.vectors.col(i);
      const double scale = (b.forms.A.norm() + std::abs(b.eigenvalues(i)) * b.forms.S.norm()) * b.vectors.col(i).norm();
      res = std::max(res, r.norm() / scale);
    }
    const double next = b.nextEigenvalue();
    for (int t = 0; t < 100; ++t) {
      Vector v(static_cast<Eigen::Index>(b.dofs.size()));
      for (auto& x : v) x = N(rng);
      v /= std::sqrt(v.dot(b.forms.S * v));
      const Vector proj = b.vectors * (b.vectors.transpose() * (b.forms.S * v));
      const Vector r = v - proj;
      excess = std::max(excess, r.dot(b.forms.S * r) - v.dot(b.forms.A * v) / next);
    }
  }
  const bool ok = orth <= 1e-10 && res <= 1e-9 && excess <= 1e-10;
  return {ok, "orthonormality " + fmt(orth) + ", residual " + fmt(res) + ", worst approximation-bound excess " + fmt(excess)};
}

Outcome localization_oracle()
{
  const oracle::Setup s({4, 4, 2, 2}, "1", "model1", 1e4, 3);
  double worstGlobal = 0.0, worstKkt = 0.0;
  for (auto v : {Variant::Relaxed, Variant::Constrained}) {
    const Matrix glo(build_space(s.grid, s.ops.A, s.aux, s.model.bc, std::nullopt, v).matrix());
    for (int m : {4, 5}) {
      const Matrix loc(build_space(s.grid, s.ops.A, s.aux, s.model.bc, m, v).matrix());
      for (Eigen::Index c = 0; c < glo.cols(); ++c)
        worstGlobal = std::max(worstGlobal, energy(s.ops.A, loc.col(c) - glo.col(c)) / energy(s.ops.A, glo.col(c)));
      if (v != Variant::Constrained) continue;
      for (int j = 0; j < s.grid.numCoarseCells(); ++j) {
        const auto region = oversample(s.grid, s.model.bc, j, m);
        for (int i = 0; i < s.aux[j].count(); ++i) {
          const Vector ref = oracle::kkt_basis(s.grid, s.ops.A, s.aux, region, j, i);
          const Vector col = loc.col(s.aux.column(j, i));
          worstKkt = std::max(worstKkt, energy(s.ops.A, col - ref) / energy(s.ops.A, ref));
        }
      }
    }
  }
  return {worstGlobal <= 1e-8 && worstKkt <= 1e-8,
          "localized vs global " + fmt(worstGlobal) + ", constrained vs dense KKT " + fmt(worstKkt)};
}

bool strictly_decaying(const std::vector<double>& v, double ratio, std::string& text)
{
  bool ok = true;
  for (std::size_t i = 0; i < v.size(); ++i) {
    text += " " + fmt(v[i]);
    if (i > 0) ok = ok && v[i] < v[i - 1] && v[i] <= ratio * v[i - 1];
  }
  return ok;
}

std::vector<ReportRow> criterion4Rows;

Outcome corrector_decay()
{
  criterion4Rows = decay_study(decay_config());
  std::vector<double> h, g;
  for (const auto& r : criterion4Rows) {
    h.push_back(r.relH);
    g.push_back(r.relG);
  }
  std::string th = "relH", tg = "relG";
  const bool ok = strictly_decaying(h, 0.6, th) & strictly_decaying(g, 0.6, tg);
  return {ok, th + "; " + tg};
}

Outcome contrast_independence()
{
  auto cfg = decay_config();
  cfg.contrasts = {1e4, 1e5, 1e6};
  cfg.layers = {1, 2, 3};
  const auto rows = decay_study(cfg);
  bool ok = true;
  std::string text;
  for (std::size_t mi = 0; mi < 3; ++mi) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t e = 0; e < 3; ++e) {
      const double v = rows[e * 3 + mi].relH;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double spread = (hi - lo) / lo;
    ok = ok && spread <= 0.05;
    text += (mi ? ", " : "") + std::string("m=") + std::to_string(mi + 1) + " spread " + fmt(spread);
  }
  return {ok, text};
}

Outcome theorem_bound()
{
  RunConfig cfg;
  cfg.model = "1";
  cfg.grid = {10, 10, 8, 8, {}};
  const Problem p(cfg, 1e4);
  const auto fine = fine_solve(p.ops.A, p.load, essential_dofs(p.grid, p.model.bc), p.hInterp);
  const auto aux = build_aux_space(p.grid, p.medium, p.kappa, cfg.nbf);
  const auto mo = build_operators(p.grid, p.ops.A, aux, p.model.bc, p.hInterp, std::nullopt, cfg.variant);
  const SparseMatrix B = mo.basis.matrix();
  const auto sys = assemble_coarse(B, p.ops.A, p.load, mo.H.field, mo.G.field);
  const auto sol = solve_multiscale(sys, B, mo.H.field, mo.G.field, p.hInterp);
  const auto err = compute_errors(sol.u, fine.u, p.ops, aux, p.forceL2);
  const double lhs = err.relEnergy.absolute;
  return {lhs <= err.theoremBound + 1e-9,
          "||u_glo - u_h||_a " + fmt(lhs) + " <= " + fmt(err.theoremBound) + " (Lambda " + fmt(err.lambdaMin) + ")"};
}

Outcome end_to_end()
{
  RunConfig cfg;
  cfg.model = "3";
  cfg.grid = {10, 10, 8, 8, {}};
  cfg.layers = {2, 3, 4, 5};
  cfg.timing = false;
  const auto rows = run(cfg);
  bool ok = true;
  std::string text = "relEnergy";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    text += " " + fmt(rows[i].relEnergy);
    if (i > 0) ok = ok && rows[i].relEnergy < rows[i - 1].relEnergy;
  }
  const double ratio = rows.back().relEnergy / rows.front().relEnergy;
  ok = ok && ratio <= 0.1;
  return {ok, text + ", ratio " + fmt(ratio)};
}

std::vector<std::vector<double>> numeric_fields(const std::vector<ReportRow>& rows)
{
  std::ostringstream out;
  write_csv(out, rows);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> t;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    for (int c = 0; c < 11 && std::getline(ls, cell, ','); ++c)
      if (c != 4) row.push_back(cell == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
    t.push_back(row);
  }
  return t;
}

Outcome determinism()
{
  auto cfg = decay_config();
  if (criterion4Rows.empty()) criterion4Rows = decay_study(cfg);
  cfg.threads = 8;
  const auto a = numeric_fields(criterion4Rows), b = numeric_fields(decay_study(cfg));
  if (a.size() != b.size()) return {false, "row counts differ"};
  double worst = 0.0;
  bool ok = true;
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < a[r].size(); ++c) {
      const double x = a[r][c], y = b[r][c];
      if (std::isnan(x) || std::isnan(y)) {
        ok = ok && std::isnan(x) && std::isnan(y);
        continue;
      }
      const double d = std::abs(x - y) / std::max(std::abs(x), std::abs(y));
      if (x != y) worst = std::max(worst, d);
    }
  ok = ok && worst <= 1e-12;
  return {ok, "max relative difference (threads 1 vs 8) " + fmt(worst)};
}

}  // namespace

int main()
{
  criterion(1, "patch test on an 80x80 fine grid", 5, patch_test);
  criterion(2, "auxiliary eigenpairs and approximation property", 30, aux_space);
  criterion(3, "saturated localization matches global and dense KKT", 20, localization_oracle);
  criterion(4, "corrector decay, per-layer ratio <= 0.6", 120, corrector_decay);
  criterion(5, "relH within 5% across E in {1e4, 1e5, 1e6}", 240, contrast_independence);
  criterion(6, "a priori bound for the global solution", 60, theorem_bound);
  criterion(7, "end-to-end convergence of the mixed problem", 180, end_to_end);
  criterion(8, "thread-count independence of the report", 240, determinism);
  return failures == 0 ? 0 : 1;
}
