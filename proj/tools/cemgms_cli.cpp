// Command-line experiment runner.

#include <cemgms/cemgms.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace cemgms;

namespace {

struct Overrides {
  std::string config;
  std::string model;
  std::vector<double> contrast;
  std::vector<int> noc;
  int nbf = 0;
  std::vector<int> coarse;
  std::vector<int> fine;
  std::string variant;
  std::string correctorVariant;
  std::string medium;
  std::string out;
  std::string format;
  int threads = 0;
  bool noTiming = false;
  long long seed = -1;
};

void add_common(CLI::App* app, Overrides& o)
{
  app->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--model", o.model, "1, 2, 3 or custom");
  app->add_option("--contrast", o.contrast, "inclusion Young's modulus (repeatable)");
  app->add_option("--noc", o.noc, "oversampling layers (repeatable)");
  app->add_option("--nbf", o.nbf, "auxiliary functions per coarse element");
  app->add_option("--coarse", o.coarse, "coarse cells NX NY")->expected(2);
  app->add_option("--fine", o.fine, "fine cells per coarse cell nx ny")->expected(2);
  app->add_option("--variant", o.variant, "relaxed or constrained");
  app->add_option("--corrector-variant", o.correctorVariant, "variant used for the boundary correctors");
  app->add_option("--medium", o.medium, "preset name or raster file (legend from --config)");
  app->add_option("--out", o.out, "output path; .json selects JSON");
  app->add_option("--format", o.format, "csv or json");
  app->add_option("--threads", o.threads, "worker thread cap");
  app->add_flag("--no-timing", o.noTiming, "write wallTimeSeconds = 0 for byte-identical reports");
  app->add_option("--seed", o.seed, "seed for randomized checks");
}

RunConfig make_config(const Overrides& o)
{
  RunConfig c;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    nlohmann::json j = nlohmann::json::parse(in);
    from_json(j, c);
  }
  if (!o.model.empty()) c.model = o.model;
  if (!o.contrast.empty()) c.contrasts = o.contrast;
  if (!o.noc.empty()) c.layers = o.noc;
  if (o.nbf > 0) c.nbf = o.nbf;
  if (o.coarse.size() == 2) {
    c.grid.Nx = o.coarse[0];
    c.grid.Ny = o.coarse[1];
  }
  if (o.fine.size() == 2) {
    c.grid.nx = o.fine[0];
    c.grid.ny = o.fine[1];
  }
  if (!o.variant.empty()) c.variant = variant_from_string(o.variant);
  if (!o.correctorVariant.empty()) c.correctorVariant = variant_from_string(o.correctorVariant);
  if (!o.medium.empty()) {
    if (std::ifstream(o.medium)) {
      c.rasterPath = o.medium;
    } else {
      c.medium = o.medium;
      c.rasterPath.clear();
    }
  }
  if (!o.out.empty()) {
    c.output = o.out;
    if (o.format.empty() && o.out.size() >= 5 && o.out.substr(o.out.size() - 5) == ".json") c.format = "json";
  }
  if (!o.format.empty()) c.format = o.format;
  if (o.threads > 0) c.threads = o.threads;
  if (o.noTiming) c.timing = false;
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  return c;
}

int fail(const std::string& kind, const std::string& message, int code)
{
  nlohmann::json rec = {{"status", "error"}, {"kind", kind}, {"message", message}};
  std::cerr << rec.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"CEM-GMsFEM for 2D linear elasticity"};
  app.require_subcommand(1);

  Overrides runOpt, decayOpt, fineOpt, cacheOpt;
  auto* run = app.add_subcommand("run", "full multiscale pipeline and error report");
  add_common(run, runOpt);
  auto* decay = app.add_subcommand("decay-study", "localized vs global corrector decay");
  add_common(decay, decayOpt);
  auto* fine = app.add_subcommand("fine-reference", "fine-scale reference solve only");
  add_common(fine, fineOpt);
  std::string fieldOut;
  fine->add_option("--field", fieldOut, "write the fine solution vector (one value per line)");

  auto* cache = app.add_subcommand("cache", "binary basis cache");
  cache->require_subcommand(1);
  auto* cacheWrite = cache->add_subcommand("write", "compute a basis and store it");
  add_common(cacheWrite, cacheOpt);
  auto* cacheRead = cache->add_subcommand("read", "load a cache file and check it against the configuration");
  std::string cacheIn;
  add_common(cacheRead, cacheOpt);
  cacheRead->add_option("--in", cacheIn, "cache file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*run) {
      const auto cfg = make_config(runOpt);
      write_report(cfg, cemgms::run(cfg));
    } else if (*decay) {
      const auto cfg = make_config(decayOpt);
      write_report(cfg, decay_study(cfg));
    } else if (*fine) {
      const auto cfg = make_config(fineOpt);
      Vector u;
      const auto s = fine_reference(cfg, fieldOut.empty() ? nullptr : &u);
      nlohmann::json rec = {{"E", s.E},          {"dofs", s.dofs},
                            {"energyNorm", s.energy}, {"l2Norm", s.l2},
                            {"relResidual", s.relResidual}, {"wallTimeSeconds", s.wallTimeSeconds}};
      if (!fieldOut.empty()) {
        std::ofstream f(fieldOut);
        for (Eigen::Index i = 0; i < u.size(); ++i) f << format_number(u(i)) << '\n';
        if (!f) throw std::runtime_error("cannot write " + fieldOut);
      }
      if (cfg.output.empty()) {
        std::cout << rec.dump(2) << '\n';
      } else {
        std::ofstream f(cfg.output);
        f << rec.dump(2) << '\n';
      }
    } else if (*cacheWrite) {
      auto cfg = make_config(cacheOpt);
      if (cfg.output.empty()) throw std::invalid_argument("cache write: --out is required");
      cfg.validate();
      const Problem p(cfg, cfg.contrasts.front());
      const ParallelFor pfor(cfg.threads);
      const AuxSpace aux = build_aux_space(p.grid, p.medium, p.kappa, cfg.nbf, pfor);
      const int m = cfg.layers.front();
      const auto set = build_space(p.grid, p.ops.A, aux, p.model.bc, m, cfg.variant, pfor);
      std::ofstream f(cfg.output, std::ios::binary);
      if (!f) throw std::runtime_error("cannot open " + cfg.output);
      write_cache(f, p.grid, cache_key(cfg, p, m), set);
    } else if (*cacheRead) {
      const auto cfg = make_config(cacheOpt);
      cfg.validate();
      const Problem p(cfg, cfg.contrasts.front());
      std::ifstream f(cacheIn, std::ios::binary);
      const auto c = read_cache(f, p.grid);
      const bool mediumMatches = c.key.mediumHash == p.medium.hash();
      nlohmann::json rec = {{"status", "ok"},
                            {"columns", c.set.numColumns()},
                            {"layers", c.key.layers},
                            {"variant", to_string(c.key.variant)},
                            {"nbf", c.key.nbf},
                            {"mediumMatches", mediumMatches}};
      std::cout << rec.dump(2) << '\n';
      if (!mediumMatches) return fail("cache", "medium hash differs from the configured medium", 3);
    }
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
