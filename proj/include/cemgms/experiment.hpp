#pragma once

/** @file experiment.hpp
    @brief Run configuration, experiment drivers (full run, corrector decay
    study, fine reference), CSV/JSON reports and the binary basis cache.
*/

#include "models.hpp"
#include "msolve.hpp"

#include "json.hpp"

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cemgms {

struct RunConfig {
  std::string model = "1";
  GridSpec grid{10, 10, 8, 8, {}};
  std::vector<double> contrasts{1e4};  ///< inclusion Young's moduli (E sweep)
  Phase matrix{1.0, 0.25};
  double inclusionNu = 0.45;
  int nbf = 3;
  std::vector<int> layers{1, 2, 3, 4};
  Variant variant = Variant::Relaxed;
  std::optional<Variant> correctorVariant;  ///< defaults to `variant`
  std::string medium;                       ///< preset name; empty selects the model default
  std::string rasterPath;                   ///< when set, overrides `medium`
  Legend legend;
  std::string output;                       ///< empty writes to stdout
  std::string format = "csv";
  std::uint64_t seed = 0;
  int threads = 1;
  bool timing = true;                       ///< false writes wallTimeSeconds = 0
  std::function<ModelProblem(const Grid&)> customModel;  ///< replaces the `model` preset when set

  Variant correctors() const { return correctorVariant.value_or(variant); }

  void validate() const
  {
    if (contrasts.empty()) throw std::invalid_argument("config: contrast list is empty");
    if (layers.empty()) throw std::invalid_argument("config: layer list is empty");
    for (int m : layers)
      if (m < 0) throw std::invalid_argument("config: layers must be >= 0");
    if (nbf < 1) throw std::invalid_argument("config: nbf must be >= 1");
    if (format != "csv" && format != "json") throw std::invalid_argument("config: format must be csv or json");
    if (!rasterPath.empty()) {
      std::ifstream probe(rasterPath);
      if (!probe) throw std::invalid_argument("config: raster file not found: " + rasterPath);
      if (legend.empty()) throw std::invalid_argument("config: raster medium needs a legend");
    }
  }
};

inline void from_json(const nlohmann::json& j, RunConfig& c)
{
  if (j.contains("model")) c.model = j["model"].is_string() ? j["model"].get<std::string>() : std::to_string(j["model"].get<int>());
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    c.grid.Nx = g.value("Nx", c.grid.Nx);
    c.grid.Ny = g.value("Ny", c.grid.Ny);
    c.grid.nx = g.value("nx", c.grid.nx);
    c.grid.ny = g.value("ny", c.grid.ny);
  }
  if (j.contains("contrast")) {
    const auto& e = j["contrast"];
    c.contrasts = e.is_array() ? e.get<std::vector<double>>() : std::vector<double>{e.get<double>()};
  }
  if (j.contains("matrix")) {
    c.matrix.E = j["matrix"].value("E", c.matrix.E);
    c.matrix.nu = j["matrix"].value("nu", c.matrix.nu);
  }
  c.inclusionNu = j.value("inclusionNu", c.inclusionNu);
  c.nbf = j.value("nbf", c.nbf);
  if (j.contains("m")) {
    const auto& m = j["m"];
    c.layers = m.is_array() ? m.get<std::vector<int>>() : std::vector<int>{m.get<int>()};
  }
  if (j.contains("variant")) c.variant = variant_from_string(j["variant"].get<std::string>());
  if (j.contains("correctorVariant")) c.correctorVariant = variant_from_string(j["correctorVariant"].get<std::string>());
  if (j.contains("medium")) {
    const auto& m = j["medium"];
    if (m.is_string()) {
      c.medium = m.get<std::string>();
    } else {
      c.rasterPath = m.value("raster", std::string{});
      c.medium = m.value("preset", std::string{});
      if (m.contains("legend"))
        for (const auto& [key, val] : m["legend"].items())
          c.legend[std::stoi(key)] = Phase{val.at("E").get<double>(), val.at("nu").get<double>()};
    }
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    if (o.is_string()) {
      c.output = o.get<std::string>();
    } else {
      c.output = o.value("path", c.output);
      c.format = o.value("format", c.format);
    }
  }
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  c.timing = j.value("timing", c.timing);
}

/// One line of a report.
struct ReportRow {
  double E = 0.0;
  int Noc = 0;
  int Nbf = 0;
  double H = 0.0;
  std::string variant;
  double relEnergy = std::numeric_limits<double>::quiet_NaN();
  double relL2 = std::numeric_limits<double>::quiet_NaN();
  double relH = std::numeric_limits<double>::quiet_NaN();
  double relG = std::numeric_limits<double>::quiet_NaN();
  double lambdaMin = std::numeric_limits<double>::quiet_NaN();
  double wallTimeSeconds = 0.0;
  std::vector<std::string> flags;  ///< e.g. "relH-undefined" when a reference norm vanishes
};

inline std::string format_number(double v)
{
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline const std::vector<std::string>& report_columns()
{
  static const std::vector<std::string> cols{"E",    "Noc",  "Nbf",       "H",         "variant",         "relEnergy",
                                             "relL2", "relH", "relG",      "lambdaMin", "wallTimeSeconds", "flags"};
  return cols;
}

inline void write_csv(std::ostream& out, const std::vector<ReportRow>& rows)
{
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : rows) {
    std::string flags;
    for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + f;
    out << format_number(r.E) << ',' << r.Noc << ',' << r.Nbf << ',' << format_number(r.H) << ',' << r.variant << ','
        << format_number(r.relEnergy) << ',' << format_number(r.relL2) << ',' << format_number(r.relH) << ','
        << format_number(r.relG) << ',' << format_number(r.lambdaMin) << ',' << format_number(r.wallTimeSeconds) << ','
        << flags << '\n';
  }
}

inline nlohmann::json to_json(const std::vector<ReportRow>& rows)
{
  auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"E", num(r.E)},
                   {"Noc", r.Noc},
                   {"Nbf", r.Nbf},
                   {"H", num(r.H)},
                   {"variant", r.variant},
                   {"relEnergy", num(r.relEnergy)},
                   {"relL2", num(r.relL2)},
                   {"relH", num(r.relH)},
                   {"relG", num(r.relG)},
                   {"lambdaMin", num(r.lambdaMin)},
                   {"wallTimeSeconds", num(r.wallTimeSeconds)},
                   {"flags", r.flags}});
  return arr;
}

inline void write_report(const RunConfig& cfg, const std::vector<ReportRow>& rows)
{
  std::ofstream file;
  if (!cfg.output.empty()) {
    file.open(cfg.output);
    if (!file) throw std::runtime_error("cannot open output file " + cfg.output);
  }
  std::ostream& out = cfg.output.empty() ? std::cout : file;
  if (cfg.format == "json")
    out << to_json(rows).dump(2) << '\n';
  else
    write_csv(out, rows);
}

/// Everything derived from (grid, model, medium) that all layer counts share.
struct Problem {
  Grid grid;
  ModelProblem model;
  MaterialField medium;
  KappaField kappa;
  FineOperators ops;
  Vector hInterp;
  Vector load;
  double forceL2 = 0.0;
  double contrast = 0.0;

  Problem(const RunConfig& cfg, double Eincl)
      : grid(cfg.grid), model(cfg.customModel ? cfg.customModel(grid) : models::by_name(cfg.model, grid))
  {
    if (!cfg.rasterPath.empty()) {
      medium = load_raster(cfg.rasterPath, grid, cfg.legend);
    } else {
      const std::string preset = cfg.medium.empty() ? model.defaultMedium : cfg.medium;
      medium = inclusion_medium(grid, presets::by_name(preset), cfg.matrix, {Eincl, cfg.inclusionNu});
    }
    double emin = std::numeric_limits<double>::infinity(), emax = 0.0;
    for (int c = 0; c < medium.size(); ++c) {
      emin = std::min(emin, medium.E(c));
      emax = std::max(emax, medium.E(c));
    }
    contrast = cfg.rasterPath.empty() ? Eincl : emax / emin;
    const PartitionOfUnity pou(grid);
    kappa = kappa_tilde(grid, medium, pou);
    ops = assemble(grid, medium, kappa);
    hInterp = interpolate(grid, model.bc.h);
    load = load_vector(grid, ops.A, model.bc, model.f);
    forceL2 = l2_norm(grid, model.f);
  }
};

namespace detail {

inline void fill_corrector_metric(ReportRow& row, const std::optional<RelativeError>& e, const char* name)
{
  if (!e) return;
  const double v = e->value;
  if (std::string(name) == "relH")
    row.relH = v;
  else
    row.relG = v;
  if (!e->defined) row.flags.push_back(std::string(name) + "-undefined");
}

inline ReportRow base_row(const RunConfig& cfg, const Problem& p, int m, Variant v)
{
  ReportRow r;
  r.E = p.contrast;
  r.Noc = m;
  r.Nbf = cfg.nbf;
  r.H = p.grid.Hx();
  r.variant = to_string(v);
  return r;
}

class Stopwatch {
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Full pipeline for every (E, m): fine reference, auxiliary space, basis,
/// correctors, coarse solve and errors.
inline std::vector<ReportRow> run(const RunConfig& cfg)
{
  cfg.validate();
  const ParallelFor pfor(cfg.threads);
  std::vector<ReportRow> rows;
  const auto contrasts = cfg.rasterPath.empty() ? cfg.contrasts : std::vector<double>{0.0};
  for (double E : contrasts) {
    const detail::Stopwatch setupClock;
    const Problem p(cfg, E);
    const auto fine = fine_solve(p.ops.A, p.load, essential_dofs(p.grid, p.model.bc), p.hInterp);
    const AuxSpace aux = build_aux_space(p.grid, p.medium, p.kappa, cfg.nbf, pfor);
    const auto glo = global_corrector_pair(p.grid, p.ops.A, aux, p.model.bc, p.hInterp, cfg.correctors(), pfor);
    const double setup = setupClock.seconds();
    for (int m : cfg.layers) {
      const detail::Stopwatch clock;
      MultiscaleOperators mo;
      if (cfg.correctors() == cfg.variant) {
        mo = build_operators(p.grid, p.ops.A, aux, p.model.bc, p.hInterp, m, cfg.variant, pfor);
      } else {
        mo.basis = build_space(p.grid, p.ops.A, aux, p.model.bc, m, cfg.variant, pfor);
        mo.H = dirichlet_corrector(p.grid, p.ops.A, aux, p.model.bc, p.hInterp, m, cfg.correctors(), pfor);
        mo.G = neumann_corrector(p.grid, p.ops.A, aux, p.model.bc, m, cfg.correctors(), pfor);
      }
      const SparseMatrix B = mo.basis.matrix();
      const auto sys = assemble_coarse(B, p.ops.A, p.load, mo.H.field, mo.G.field);
      const auto sol = solve_multiscale(sys, B, mo.H.field, mo.G.field, p.hInterp);
      const auto err = compute_errors(sol.u, fine.u, p.ops, aux, p.forceL2, {&mo.H.field, &glo.H.field},
                                      {&mo.G.field, &glo.G.field});
      auto row = detail::base_row(cfg, p, m, cfg.variant);
      row.relEnergy = err.relEnergy.value;
      row.relL2 = err.relL2.value;
      if (!err.relEnergy.defined) row.flags.push_back("relEnergy-undefined");
      detail::fill_corrector_metric(row, err.relH, "relH");
      detail::fill_corrector_metric(row, err.relG, "relG");
      row.lambdaMin = err.lambdaMin;
      row.wallTimeSeconds = cfg.timing ? clock.seconds() + setup : 0.0;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Corrector decay: global correctors once per E, localized ones per m; only relH/relG are filled.
inline std::vector<ReportRow> decay_study(const RunConfig& cfg)
{
  cfg.validate();
  const ParallelFor pfor(cfg.threads);
  std::vector<ReportRow> rows;
  const auto contrasts = cfg.rasterPath.empty() ? cfg.contrasts : std::vector<double>{0.0};
  for (double E : contrasts) {
    const detail::Stopwatch setupClock;
    const Problem p(cfg, E);
    const AuxSpace aux = build_aux_space(p.grid, p.medium, p.kappa, cfg.nbf, pfor);
    const Variant v = cfg.correctors();
    const auto glo = global_corrector_pair(p.grid, p.ops.A, aux, p.model.bc, p.hInterp, v, pfor);
    const bool neumann = p.model.bc.hasNeumann();
    const double setup = setupClock.seconds();
    for (int m : cfg.layers) {
      const detail::Stopwatch clock;
      const auto H = dirichlet_corrector(p.grid, p.ops.A, aux, p.model.bc, p.hInterp, m, v, pfor);
      const Vector zero = Vector::Zero(p.grid.numDofs());
      ErrorReport err;
      if (neumann) {
        const auto G = neumann_corrector(p.grid, p.ops.A, aux, p.model.bc, m, v, pfor);
        err = compute_errors(zero, zero, p.ops, aux, p.forceL2, {&H.field, &glo.H.field}, {&G.field, &glo.G.field});
      } else {
        err = compute_errors(zero, zero, p.ops, aux, p.forceL2, {&H.field, &glo.H.field});
      }
      auto row = detail::base_row(cfg, p, m, v);
      detail::fill_corrector_metric(row, err.relH, "relH");
      detail::fill_corrector_metric(row, err.relG, "relG");
      row.lambdaMin = err.lambdaMin;
      row.wallTimeSeconds = cfg.timing ? clock.seconds() + setup : 0.0;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

struct FineReferenceSummary {
  double E = 0.0;
  int dofs = 0;
  double energy = 0.0;
  double l2 = 0.0;
  double relResidual = 0.0;
  double wallTimeSeconds = 0.0;
};

/// Reference-only solve for the first contrast of the configuration.
inline FineReferenceSummary fine_reference(const RunConfig& cfg, Vector* field = nullptr)
{
  cfg.validate();
  const detail::Stopwatch clock;
  const Problem p(cfg, cfg.contrasts.front());
  const auto fine = fine_solve(p.ops.A, p.load, essential_dofs(p.grid, p.model.bc), p.hInterp);
  if (field) *field = fine.u;
  const auto n = norms(fine.u, p.ops);
  return {p.contrast, p.grid.numDofs(), n.energy, n.l2, fine.relResidual, cfg.timing ? clock.seconds() : 0.0};
}

// ---------------------------------------------------------------------------
// Binary basis cache.
//
//   char[8]  magic "CEMGMSC1"
//   u32      version (1)
//   i32 x4   Nx Ny nx ny
//   u64      medium hash (MaterialField::hash)
//   i32      layers (-1 for the whole-domain basis)
//   u8       variant (0 relaxed, 1 constrained)
//   i32      nbf
//   u64      fine DOF count
//   u64      column count
//   per column: i32 x4 node box ix0 ix1 iy0 iy1, then 2*(box nodes) f64 values
//               in node-major, component-minor order
//
// All values little-endian as laid out by the host.
// ---------------------------------------------------------------------------

struct CacheKey {
  GridSpec grid;
  std::uint64_t mediumHash = 0;
  int layers = -1;
  Variant variant = Variant::Relaxed;
  int nbf = 0;

  bool operator==(const CacheKey& o) const
  {
    return grid.Nx == o.grid.Nx && grid.Ny == o.grid.Ny && grid.nx == o.grid.nx && grid.ny == o.grid.ny &&
           mediumHash == o.mediumHash && layers == o.layers && variant == o.variant && nbf == o.nbf;
  }
};

namespace detail {
template <class T>
void put(std::ostream& out, T v)
{
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& in)
{
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("cache: truncated file");
  return v;
}
inline constexpr char kCacheMagic[8] = {'C', 'E', 'M', 'G', 'M', 'S', 'C', '1'};
}  // namespace detail

inline void write_cache(std::ostream& out, const Grid& grid, const CacheKey& key, const CemBasisSet& set)
{
  out.write(detail::kCacheMagic, 8);
  detail::put<std::uint32_t>(out, 1);
  for (int v : {key.grid.Nx, key.grid.Ny, key.grid.nx, key.grid.ny}) detail::put<std::int32_t>(out, v);
  detail::put<std::uint64_t>(out, key.mediumHash);
  detail::put<std::int32_t>(out, key.layers);
  detail::put<std::uint8_t>(out, key.variant == Variant::Relaxed ? 0 : 1);
  detail::put<std::int32_t>(out, key.nbf);
  detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(set.numDofs));
  detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(set.numColumns()));
  for (const auto& f : set.functions) {
    NodeBox box{grid.nodesX(), -1, grid.nodesY(), -1};
    for (int d : f.dofs) {
      const int n = d / 2;
      box.ix0 = std::min(box.ix0, grid.nodeIx(n));
      box.ix1 = std::max(box.ix1, grid.nodeIx(n));
      box.iy0 = std::min(box.iy0, grid.nodeIy(n));
      box.iy1 = std::max(box.iy1, grid.nodeIy(n));
    }
    if (f.dofs.empty()) box = NodeBox{0, 0, 0, 0};
    for (int v : {box.ix0, box.ix1, box.iy0, box.iy1}) detail::put<std::int32_t>(out, v);
    std::vector<double> block(static_cast<std::size_t>(box.numDofs()), 0.0);
    for (std::size_t i = 0; i < f.dofs.size(); ++i) {
      const int n = f.dofs[i] / 2;
      block[static_cast<std::size_t>(2 * box.localNode(grid.nodeIx(n), grid.nodeIy(n)) + f.dofs[i] % 2)] =
          f.values(static_cast<Eigen::Index>(i));
    }
    out.write(reinterpret_cast<const char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("cache: write failed");
}

struct CacheContents {
  CacheKey key;
  CemBasisSet set;
};

inline CacheContents read_cache(std::istream& in, const Grid& grid)
{
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, detail::kCacheMagic, 8) != 0)
    throw std::runtime_error("cache: bad magic");
  if (detail::get<std::uint32_t>(in) != 1) throw std::runtime_error("cache: unsupported version");
  CacheContents c;
  c.key.grid.Nx = detail::get<std::int32_t>(in);
  c.key.grid.Ny = detail::get<std::int32_t>(in);
  c.key.grid.nx = detail::get<std::int32_t>(in);
  c.key.grid.ny = detail::get<std::int32_t>(in);
  c.key.mediumHash = detail::get<std::uint64_t>(in);
  c.key.layers = detail::get<std::int32_t>(in);
  c.key.variant = detail::get<std::uint8_t>(in) == 0 ? Variant::Relaxed : Variant::Constrained;
  c.key.nbf = detail::get<std::int32_t>(in);
  const auto& g = grid.spec();
  if (c.key.grid.Nx != g.Nx || c.key.grid.Ny != g.Ny || c.key.grid.nx != g.nx || c.key.grid.ny != g.ny)
    throw std::runtime_error("cache: grid does not match");
  const auto ndofs = detail::get<std::uint64_t>(in);
  const auto ncols = detail::get<std::uint64_t>(in);
  if (ndofs != static_cast<std::uint64_t>(grid.numDofs())) throw std::runtime_error("cache: DOF count mismatch");
  c.set.variant = c.key.variant;
  if (c.key.layers >= 0) c.set.layers = c.key.layers;
  c.set.numDofs = grid.numDofs();
  c.set.functions.resize(ncols);
  for (auto& f : c.set.functions) {
    NodeBox box;
    box.ix0 = detail::get<std::int32_t>(in);
    box.ix1 = detail::get<std::int32_t>(in);
    box.iy0 = detail::get<std::int32_t>(in);
    box.iy1 = detail::get<std::int32_t>(in);
    if (box.ix0 < 0 || box.iy0 < 0 || box.ix1 >= grid.nodesX() || box.iy1 >= grid.nodesY() || box.ix1 < box.ix0 ||
        box.iy1 < box.iy0)
      throw std::runtime_error("cache: invalid column box");
    f.dofs = grid.dofsOf(box);
    f.values.resize(static_cast<Eigen::Index>(f.dofs.size()));
    if (!in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.dofs.size() * sizeof(double))))
      throw std::runtime_error("cache: truncated column data");
  }
  return c;
}

inline CacheKey cache_key(const RunConfig& cfg, const Problem& p, int layers)
{
  return {cfg.grid, p.medium.hash(), layers, cfg.variant, cfg.nbf};
}

}  // namespace cemgms
