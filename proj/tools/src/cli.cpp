#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "bishop/baseline.hpp"
#include "bishop/cohort.hpp"
#include "bishop/diagnostics.hpp"
#include "bishop/errors.hpp"
#include "bishop/fit.hpp"
#include "bishop/posterior_io.hpp"
#include "bishop/ppc.hpp"
#include "bishop/simulate.hpp"
#include "bishop/text.hpp"

#ifndef BISHOP_VERSION
#define BISHOP_VERSION "unknown"
#endif

namespace bishop::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Everything a subcommand reports back for its manifest.
struct RunRecord {
  Json config = Json::object();
  Json seeds = Json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Json divergences;  // null when the subcommand has no sampler output
  std::vector<std::string> warnings;
  fs::path manifest;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::string& subcommand, const RunRecord& rec, const std::string& started,
                    double elapsed) {
  Json j;
  j["tool"] = "bishop";
  j["version"] = BISHOP_VERSION;
  j["subcommand"] = subcommand;
  j["config"] = rec.config;
  j["seeds"] = rec.seeds;
  j["inputs"] = rec.inputs;
  j["outputs"] = rec.outputs;
  j["divergences"] = rec.divergences;
  j["warnings"] = rec.warnings;
  j["wall_clock"] = {{"started_utc", started}, {"elapsed_seconds", elapsed}};
  write_text_file(rec.manifest, j.dump(2) + "\n");
}

/// Writes `text` to `path` and lists it as an output.
void emit(RunRecord& rec, const fs::path& path, std::string_view text) {
  write_text_file(path, text);
  rec.outputs.push_back(path.string());
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  return p.replace_extension(suffix);
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ValidationError("cannot create output directory " + dir.string());
  }
}

Cohort read_cohort(const std::string& path, RunRecord& rec) {
  rec.inputs.push_back(path);
  return load_cohort(path).to_cohort();
}

Json divergence_summary(const PosteriorDraws& draws, int max_depth) {
  const std::size_t div = draws.divergences();
  Json j;
  j["divergent"] = div;
  j["total_draws"] = draws.total_draws();
  j["rate"] = static_cast<double>(div) / static_cast<double>(draws.total_draws());
  j["tree_depth_hits"] = draws.depth_hits(max_depth);
  return j;
}

void add_sampler_warnings(RunRecord& rec, const FitReport& report) {
  if (report.divergences > 0) {
    rec.warnings.push_back(std::to_string(report.divergences) +
                           " divergent transitions after warmup");
  }
  if (report.depth_hits > 0) {
    rec.warnings.push_back(std::to_string(report.depth_hits) + " transitions hit max tree depth " +
                           std::to_string(report.max_tree_depth));
  }
  if (const auto r = report.max_rhat()) {
    if (*r > 1.01) rec.warnings.push_back("max split R-hat " + format_real(*r) + " exceeds 1.01");
  } else {
    rec.warnings.push_back("split R-hat unavailable (needs at least 2 chains)");
  }
}

// ---- simulate ----

struct SimulateArgs {
  std::size_t n = 82;
  std::uint64_t seed = 0;
  std::string truth = "default";
  std::string out = "cohort.csv";
};

RunRecord cmd_simulate(const SimulateArgs& a) {
  RunRecord rec;
  rec.config = {{"n", a.n}, {"seed", a.seed}, {"truth", a.truth}, {"out", a.out}};
  rec.seeds = {{"seed", a.seed}};
  SimTruth truth = default_truth();
  if (a.truth != "default") {
    rec.inputs.push_back(a.truth);
    truth = SimTruth::from_json(read_text_file(a.truth));
  }
  const SimResult sim = simulate_cohort(truth, a.n, a.seed);
  const fs::path out = a.out;
  emit(rec, out, format_cohort_csv(sim.cohort));
  emit(rec, sibling(out, ".truth.json"), truth.to_json());
  emit(rec, sibling(out, ".hidden.csv"), sim.hidden_csv());
  if (sim.redraws > 0) {
    rec.warnings.push_back(std::to_string(sim.redraws) +
                           " outcome draws fell outside the Box-Cox range and were redrawn");
  }
  rec.manifest = sibling(out, ".manifest.json");
  return rec;
}

// ---- fit ----

struct FitArgs {
  std::string data;
  std::size_t chains = 4;
  std::size_t warmup = 600;
  std::size_t samples = 900;
  double target_accept = 0.8;
  int max_depth = 10;
  std::uint64_t seed = 0;
  std::string out = "fit";
};

RunRecord cmd_fit(const FitArgs& a) {
  RunRecord rec;
  rec.config = {{"data", a.data},       {"chains", a.chains},
                {"warmup", a.warmup},   {"samples", a.samples},
                {"target-accept", a.target_accept}, {"max-depth", a.max_depth},
                {"seed", a.seed},       {"out", a.out}};
  rec.seeds = {{"seed", a.seed}};

  FitOptions options;
  options.nuts.chains = a.chains;
  options.nuts.warmup = a.warmup;
  options.nuts.samples = a.samples;
  options.nuts.target_accept = a.target_accept;
  options.nuts.max_tree_depth = a.max_depth;
  options.nuts.seed = a.seed;
  options.nuts.validate();

  const Cohort cohort = read_cohort(a.data, rec);
  const FitResult fit = fit_cohort(cohort, options);

  const fs::path dir = a.out;
  ensure_directory(dir);
  emit(rec, dir / "posterior.ndjson", posterior_to_ndjson(fit.draws));
  emit(rec, dir / "posterior.csv", posterior_to_csv(fit.draws));
  emit(rec, dir / "model_spec.json", fit.spec.to_json());
  emit(rec, dir / "transforms.json", transforms_to_json(fit.preprocessed.transforms));
  emit(rec, dir / "diagnostics.json", fit.report.to_json());
  emit(rec, dir / "forest.csv", forest_csv(fit.report));
  emit(rec, dir / "imputation.csv", fit.imputation_csv(cohort));

  rec.divergences = divergence_summary(fit.draws, a.max_depth);
  std::size_t warmup_div = 0;
  for (const auto& c : fit.draws.chains()) warmup_div += c.warmup_divergences;
  rec.divergences["warmup_divergent"] = warmup_div;
  const auto rhat = fit.report.max_rhat();
  rec.divergences["max_rhat"] = rhat ? Json(*rhat) : Json(nullptr);
  const auto ess = fit.report.min_ess();
  rec.divergences["min_ess_bulk"] = ess ? Json(*ess) : Json(nullptr);
  add_sampler_warnings(rec, fit.report);
  rec.manifest = dir / "manifest.json";
  return rec;
}

// ---- summarize ----

struct SummarizeArgs {
  std::string posterior;
  double hdr = 0.95;
  int max_depth = 10;
  std::string out = "forest.csv";
};

RunRecord cmd_summarize(const SummarizeArgs& a) {
  RunRecord rec;
  rec.config = {{"posterior", a.posterior}, {"hdr", a.hdr}, {"max-depth", a.max_depth},
                {"out", a.out}};
  if (!(a.hdr > 0.0 && a.hdr < 1.0)) throw ValidationError("--hdr must lie strictly between 0 and 1");
  rec.inputs.push_back(a.posterior);
  const PosteriorDraws draws = posterior_from_ndjson(read_text_file(a.posterior));
  const FitReport report = build_report(draws, a.hdr, a.max_depth);
  const fs::path out = a.out;
  emit(rec, out, forest_csv(report));
  emit(rec, sibling(out, ".summary.json"), report.to_json());
  rec.divergences = divergence_summary(draws, a.max_depth);
  add_sampler_warnings(rec, report);
  rec.manifest = sibling(out, ".manifest.json");
  return rec;
}

// ---- ppc ----

struct PpcArgs {
  std::string posterior;
  std::string data;
  std::size_t draws = 200;
  std::uint64_t seed = 0;
  std::string transforms;  // empty: refit on --data
  std::string out = "ppc.csv";
};

RunRecord cmd_ppc(const PpcArgs& a) {
  RunRecord rec;
  rec.config = {{"posterior", a.posterior}, {"data", a.data}, {"draws", a.draws},
                {"seed", a.seed},
                {"transforms", a.transforms.empty() ? Json(nullptr) : Json(a.transforms)},
                {"out", a.out}};
  rec.seeds = {{"seed", a.seed}};
  const Cohort cohort = read_cohort(a.data, rec);
  rec.inputs.push_back(a.posterior);
  const PosteriorDraws draws = posterior_from_ndjson(read_text_file(a.posterior));

  PreprocessOptions pre_opts;
  if (!a.transforms.empty()) {
    rec.inputs.push_back(a.transforms);
    const auto given = transforms_from_json(read_text_file(a.transforms));
    if (given.size() != kTimeOutcomes) throw ValidationError("expected four outcome transforms");
    std::array<double, kTimeOutcomes> lambdas{};
    for (std::size_t o = 0; o < kTimeOutcomes; ++o) lambdas[o] = given[o].lambda;
    pre_opts.lambdas = lambdas;
  }
  const Preprocessed pre = preprocess_outcomes(cohort, pre_opts);
  const Model model = build_model(pre);
  const PpcResult ppc = posterior_predictive(draws, model, cohort, pre.transforms, a.draws, a.seed);

  const fs::path out = a.out;
  emit(rec, out, ppc.to_csv());
  emit(rec, sibling(out, ".summary.json"), ppc.summary_json());
  if (ppc.clamped > 0) {
    rec.warnings.push_back(std::to_string(ppc.clamped) +
                           " replicated times clamped at the Box-Cox boundary");
  }
  rec.manifest = sibling(out, ".manifest.json");
  return rec;
}

// ---- baseline ----

struct BaselineArgs {
  std::string data;
  std::string out = "baseline.json";
};

RunRecord cmd_baseline(const BaselineArgs& a) {
  RunRecord rec;
  rec.config = {{"data", a.data}, {"out", a.out}};
  const Cohort cohort = read_cohort(a.data, rec);
  const BaselineResult result = run_baseline(cohort);
  const fs::path out = a.out;
  emit(rec, out, result.to_json());
  rec.manifest = sibling(out, ".manifest.json");
  return rec;
}

/// Flag list that re-runs a manifest's recorded config.
std::vector<std::string> replay_args(const std::string& manifest_path) {
  Json j;
  try {
    j = Json::parse(read_text_file(manifest_path));
  } catch (const Json::exception& e) {
    throw ValidationError("malformed manifest " + manifest_path + ": " + e.what());
  }
  if (!j.contains("subcommand") || !j["subcommand"].is_string() || !j.contains("config") ||
      !j["config"].is_object()) {
    throw ValidationError("manifest " + manifest_path + " lacks subcommand or config");
  }
  const std::string sub = j["subcommand"].get<std::string>();
  if (sub == "replay") throw ValidationError("a manifest cannot replay another replay");
  std::vector<std::string> args{sub};
  for (const auto& [key, value] : j["config"].items()) {
    if (value.is_null()) continue;
    args.push_back("--" + key);
    args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }
  return args;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical Bayesian analysis of labor-induction outcomes", "bishop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(BISHOP_VERSION));

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a synthetic cohort with known truth");
  s->add_option("--n", sim.n, "Cohort size")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed, "Random seed")->required();
  s->add_option("--truth", sim.truth, "Truth JSON path, or 'default'")->capture_default_str();
  s->add_option("--out", sim.out, "Cohort CSV path")->capture_default_str();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Sample the posterior for a cohort");
  f->add_option("--data", fit.data, "Cohort CSV")->required();
  f->add_option("--chains", fit.chains)->capture_default_str();
  f->add_option("--warmup", fit.warmup)->capture_default_str();
  f->add_option("--samples", fit.samples)->capture_default_str();
  f->add_option("--target-accept", fit.target_accept)->capture_default_str();
  f->add_option("--max-depth", fit.max_depth)->capture_default_str();
  f->add_option("--seed", fit.seed, "Random seed")->required();
  f->add_option("--out", fit.out, "Output directory")->capture_default_str();

  SummarizeArgs sum;
  auto* m = app.add_subcommand("summarize", "Forest-plot table from posterior draws");
  m->add_option("--posterior", sum.posterior, "Posterior NDJSON")->required();
  m->add_option("--hdr", sum.hdr, "HDR probability mass")->capture_default_str();
  m->add_option("--max-depth", sum.max_depth, "Tree depth limit used by the fit")
      ->capture_default_str();
  m->add_option("--out", sum.out, "Forest CSV path")->capture_default_str();

  PpcArgs ppc;
  auto* p = app.add_subcommand("ppc", "Posterior predictive histograms");
  p->add_option("--posterior", ppc.posterior, "Posterior NDJSON")->required();
  p->add_option("--data", ppc.data, "Cohort CSV")->required();
  p->add_option("--draws", ppc.draws, "Replicated datasets")->capture_default_str();
  p->add_option("--seed", ppc.seed, "Random seed")->required();
  p->add_option("--transforms", ppc.transforms, "Transforms JSON from fit");
  p->add_option("--out", ppc.out, "Histogram CSV path")->capture_default_str();

  BaselineArgs base;
  auto* b = app.add_subcommand("baseline", "Unadjusted two-arm tests");
  b->add_option("--data", base.data, "Cohort CSV")->required();
  b->add_option("--out", base.out, "Result JSON path")->capture_default_str();

  std::string manifest_path;
  auto* r = app.add_subcommand("replay", "Re-run the config recorded in a manifest");
  r->add_option("--manifest", manifest_path, "Manifest JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInput;
  }

  if (r->parsed()) return dispatch(replay_args(manifest_path), out, err);

  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  std::string name;
  if (s->parsed()) {
    name = "simulate";
    rec = cmd_simulate(sim);
  } else if (f->parsed()) {
    name = "fit";
    rec = cmd_fit(fit);
  } else if (m->parsed()) {
    name = "summarize";
    rec = cmd_summarize(sum);
  } else if (p->parsed()) {
    name = "ppc";
    rec = cmd_ppc(ppc);
  } else {
    name = "baseline";
    rec = cmd_baseline(base);
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(name, rec, started, elapsed);
  for (const auto& w : rec.warnings) err << "warning: " << w << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace bishop::cli
