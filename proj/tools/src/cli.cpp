#include "reachlab/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "reachlab/errors.hpp"
#include "reachlab/estimators.hpp"
#include "reachlab/experiments.hpp"
#include "reachlab/model_io.hpp"
#include "reachlab/oracle.hpp"
#include "reachlab/table.hpp"

namespace reachlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

namespace {

constexpr std::size_t kInlineSubValueLimit = 100'000;

struct Options {
  std::string model_path;
  std::string spec_path;
  std::string kind = "mc";
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::optional<unsigned> workers;
  std::string out;
  std::string format = "csv";
  std::string clip = "none";
  std::string dump_trajectories;
  std::string sidecar;

  // oracle
  std::size_t dispersion_n = 100;
  double p_base = 1e-4;
  double p_elev = 1e-3;
  double p = 0.5;
  int precision = 4;
  std::optional<double> counterexample_p;
  std::size_t max_leaves = kDefaultLeafBudget;

  // sweep
  std::string axis = "probability";
  std::vector<double> grid;
  std::optional<std::size_t> replications;
  std::optional<std::size_t> samples;

  // cohort
  std::size_t patients = 2000;
  std::size_t timelines = 100;
  std::size_t rounds = 40;
  std::size_t equivalence_rounds = 1000;
  std::optional<std::size_t> reference_n;
  std::size_t calibration_bins = 10;
  double risk_low = 0.005;
  double risk_high = 0.5;

  // distribution
  std::size_t estimates = 2000;
  std::size_t per_estimate = 10;
  std::size_t bins = 50;
};

std::string full(double x) { return format_double(x); }

unsigned resolve_worker_flag(const Options& o) {
  if (o.workers) return *o.workers;
  if (const char* env = std::getenv(kWorkersEnv); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0')
      throw InvalidArgument(std::string(kWorkersEnv) + " must be a non-negative integer");
    return static_cast<unsigned>(v);
  }
  return 0;
}

// Writes every artifact atomically and a manifest describing them.
class Artifacts {
 public:
  Artifacts(std::string command, json config, std::uint64_t seed)
      : command_(std::move(command)), config_(std::move(config)), seed_(seed),
        start_(std::chrono::steady_clock::now()) {}

  void write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path() && !fs::exists(path.parent_path())) {
      std::error_code ec;
      fs::create_directories(path.parent_path(), ec);
      if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "'");
    }
    write_file_atomic(path, content);
    entries_.push_back({{"path", path.string()},
                        {"bytes", content.size()},
                        {"sha256", sha256_hex(content)}});
  }

  void finish(const fs::path& primary, std::ostream& err) {
    if (entries_.empty()) return;
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json manifest{{"command", command_},
                  {"seed", seed_},
                  {"config", config_},
                  {"artifacts", entries_},
                  {"duration_seconds", seconds}};
    auto path = primary;
    path += ".manifest.json";
    write_file_atomic(path, manifest.dump(2) + "\n");
    err << "wrote " << entries_.size() << " artifact(s); manifest " << path.string() << "\n";
  }

 private:
  std::string command_;
  json config_;
  std::uint64_t seed_;
  std::chrono::steady_clock::time_point start_;
  json entries_ = json::array();
};

fs::path sibling(const fs::path& out, const std::string& suffix) {
  auto p = out;
  p.replace_extension();
  p += suffix;
  return p;
}

json model_config(const Options& o) {
  json cfg;
  if (!o.model_path.empty()) {
    cfg["model_path"] = o.model_path;
    cfg["model"] = json::parse(read_text_file(o.model_path), nullptr, false);
  }
  if (!o.spec_path.empty()) {
    cfg["spec_path"] = o.spec_path;
    cfg["spec"] = json::parse(read_text_file(o.spec_path), nullptr, false);
  }
  return cfg;
}

MarkovModel load_model(const Options& o) {
  if (!o.model_path.empty() && !o.spec_path.empty())
    throw InvalidArgument("give either --model or --spec, not both");
  if (!o.model_path.empty()) return parse_markov_model(read_text_file(o.model_path));
  if (!o.spec_path.empty()) return random_chain(parse_chain_spec(read_text_file(o.spec_path)));
  throw InvalidArgument("a model is required: pass --model <file.json> or --spec <chain.json>");
}

ChainSpec load_spec(const Options& o, ChainSpec base) {
  if (o.spec_path.empty()) return base;
  return parse_chain_spec(read_text_file(o.spec_path), std::move(base));
}

void require_out(const Options& o, const char* command) {
  if (o.out.empty()) throw InvalidArgument(std::string(command) + " writes files; pass --out <path>");
  if (o.format != "csv" && o.format != "json" && o.format != "svg")
    throw InvalidArgument("--format must be csv, json or svg");
}

// Table plus plots in the requested format; returns nothing, records artifacts.
void write_table(Artifacts& a, const Options& o, const ExperimentTable& table,
                 const std::vector<std::pair<std::string, LinePlot>>& plots) {
  const fs::path out(o.out);
  if (o.format == "svg") {
    for (std::size_t i = 0; i < plots.size(); ++i)
      a.write(i == 0 ? out : sibling(out, plots[i].first + ".svg"), plots[i].second.render());
    return;
  }
  a.write(out, o.format == "json" ? table.to_json() : table.to_csv());
  for (std::size_t i = 0; i < plots.size(); ++i)
    a.write(sibling(out, (i == 0 ? std::string() : plots[i].first) + ".svg"),
            plots[i].second.render());
}

json base_config(const Options& o, const std::string& command) {
  json cfg = model_config(o);
  cfg["command"] = command;
  cfg["seed"] = o.seed;
  cfg["format"] = o.format;
  cfg["out"] = o.out;
  return cfg;
}

// --- commands --------------------------------------------------------------

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.model_path.empty()) throw InvalidArgument("validate needs --model <file.json>");
  try {
    const auto model = parse_markov_model(read_text_file(o.model_path));
    out << "ok: " << model.n_states() << " states, outcome " << model.outcome_state()
        << ", horizon " << model.steps() << "\n";
    return kOk;
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) {
      err << o.model_path << ": " << v.message << "\n";
    }
    return kValidationError;
  }
}

int cmd_estimate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = load_model(o);
  const auto kind = parse_estimator_kind(o.kind);
  const EstimateOptions opts{parse_clip_policy(o.clip), resolve_worker_flag(o)};
  const RandomSource source(o.seed);
  const auto report = estimate(model, kind, o.n, source, opts);

  out << "kind=" << to_string(kind) << " n=" << report.n << " mean=" << full(report.mean)
      << " std_error=" << full(report.std_error)
      << " sample_variance=" << full(report.sample_variance) << " n_clipped=" << report.n_clipped
      << " seed=" << o.seed << "\n";

  if (o.out.empty() && o.dump_trajectories.empty() && o.sidecar.empty()) return kOk;
  json cfg = base_config(o, "estimate");
  cfg["kind"] = std::string(to_string(kind));
  cfg["n"] = o.n;
  cfg["clip"] = std::string(to_string(opts.clip));
  Artifacts a("estimate", cfg, o.seed);
  fs::path primary = o.out;

  std::string sidecar = o.sidecar;
  if (!o.out.empty()) {
    if (o.format != "csv" && o.format != "json") throw InvalidArgument("estimate writes csv or json");
    if (o.format == "json") {
      json doc{{"kind", std::string(to_string(kind))},
               {"n", report.n},
               {"mean", report.mean},
               {"sample_variance", report.sample_variance},
               {"std_error", report.std_error},
               {"clip_policy", std::string(to_string(report.clip_policy))},
               {"n_clipped", report.n_clipped},
               {"seed", report.seed}};
      if (report.n <= kInlineSubValueLimit && sidecar.empty()) {
        doc["sub_values"] = report.sub_values;
      } else {
        if (sidecar.empty()) sidecar = sibling(o.out, ".sub_values.f64").string();
        doc["sub_values_file"] = sidecar;
      }
      a.write(primary, doc.dump(2) + "\n");
    } else {
      ExperimentTable t;
      const std::string task = "estimate";
      const auto name = std::string(to_string(kind));
      auto add = [&](const char* stat, double v) {
        MetricRow r;
        r.task = task;
        r.kind = name;
        r.n = report.n;
        r.statistic = stat;
        r.value = v;
        r.seed = o.seed;
        t.add(r);
      };
      add("mean", report.mean);
      add("sample_variance", report.sample_variance);
      add("std_error", report.std_error);
      add("n_clipped", static_cast<double>(report.n_clipped));
      a.write(primary, t.to_csv());
    }
  }
  if (!sidecar.empty()) {
    a.write(sidecar, encode_f64_le(report.sub_values));
    if (primary.empty()) primary = sidecar;
  }
  if (!o.dump_trajectories.empty()) {
    const auto mode = required_mode(kind);
    const auto pool = pool_source(source, mode);
    std::string lines;
    for (std::size_t i = 0; i < o.n; ++i)
      lines += trajectory_json_line(sample_trajectory(model, mode, pool, i), o.seed, i) + "\n";
    a.write(o.dump_trajectories, lines);
    if (primary.empty()) primary = o.dump_trajectories;
  }
  a.finish(primary, err);
  return kOk;
}

int cmd_oracle_dispersion(const Options& o, std::ostream& out) {
  const double v = dispersion_probability(o.dispersion_n, o.p_base, o.p_elev);
  std::ostringstream os;
  os << std::fixed << std::setprecision(o.precision) << v;
  out << os.str() << "\n";
  return kOk;
}

MarkovModel oracle_model(const Options& o) {
  if (o.counterexample_p) return counterexample_chain(*o.counterexample_p);
  return load_model(o);
}

int cmd_oracle_exact(const Options& o, std::ostream& out) {
  const auto m = exact_moments(oracle_model(o));
  out << "probability=" << full(m.probability) << "\n"
      << "var_mc=" << full(m.var_mc) << "\n"
      << "var_scope=" << full(m.var_scope) << "\n"
      << "var_reach=" << full(m.var_reach) << "\n";
  return kOk;
}

int cmd_oracle_enumerate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto kind = parse_estimator_kind(o.kind);
  ValueDistribution dist;
  if (o.counterexample_p) {
    const auto cm = counterexample_model(*o.counterexample_p);
    dist = enumerate_sub_distribution(cm, cm.vocabulary(), cm.horizon(), kind, o.max_leaves);
  } else {
    dist = enumerate_sub_distribution(load_model(o), kind, o.max_leaves);
  }
  out << "kind=" << to_string(kind) << " atoms=" << dist.atoms().size()
      << " mean=" << full(dist.mean()) << " second_moment=" << full(dist.second_moment())
      << " variance=" << full(dist.variance()) << "\n";
  if (!o.out.empty()) {
    json cfg = base_config(o, "oracle enumerate");
    cfg["kind"] = std::string(to_string(kind));
    if (o.counterexample_p) cfg["counterexample_p"] = *o.counterexample_p;
    Artifacts a("oracle enumerate", cfg, o.seed);
    a.write(o.out, dist.to_csv());
    a.finish(o.out, err);
  }
  return kOk;
}

int cmd_oracle_counterexample(const Options& o, std::ostream& out) {
  const auto cm = counterexample_model(o.p);
  const auto mc = enumerate_sub_distribution(cm, cm.vocabulary(), cm.horizon(), EstimatorKind::mc);
  const auto sc =
      enumerate_sub_distribution(cm, cm.vocabulary(), cm.horizon(), EstimatorKind::scope);
  out << "p=" << full(o.p) << "\n"
      << "probability=" << full(mc.mean()) << "\n"
      << "mc_second_moment=" << full(mc.second_moment()) << "\n"
      << "scope_second_moment=" << full(sc.second_moment()) << "\n"
      << "var_scope_minus_var_mc=" << full(sc.variance() - mc.variance()) << "\n";
  return kOk;
}

int cmd_oracle_bijection(const Options& o, std::ostream& out) {
  BijectionCheck b;
  if (o.counterexample_p) {
    const auto cm = counterexample_model(*o.counterexample_p);
    b = exact_bijection_check(cm, cm.vocabulary(), cm.horizon(), o.max_leaves);
  } else {
    b = exact_bijection_check(load_model(o), o.max_leaves);
  }
  out << "p_a=" << full(b.p_a) << "\n"
      << "p_b=" << full(b.p_b) << "\n"
      << "abs_diff=" << full(std::abs(b.p_a - b.p_b)) << "\n";
  return kOk;
}

int cmd_sweep(const Options& o, std::ostream& err) {
  require_out(o, "sweep");
  auto config = SweepConfig::defaults(parse_sweep_axis(o.axis));
  config.base = load_spec(o, config.base);
  config.grid = o.grid;
  if (o.replications) config.replications = *o.replications;
  if (o.samples) config.samples_per_estimate = *o.samples;
  config.workers = resolve_worker_flag(o);

  const auto grid = config.resolved_grid();
  err << "sweep: axis " << to_string(config.axis) << ", " << grid.size() << " points, "
      << config.replications << " replications\n";
  const auto result = variance_sweep(config, RandomSource(o.seed));

  json cfg = base_config(o, "sweep");
  cfg["axis"] = std::string(to_string(config.axis));
  cfg["grid"] = grid;
  cfg["replications"] = config.replications;
  cfg["samples_per_estimate"] = config.samples_per_estimate;
  cfg["base_spec"] = json::parse(chain_spec_json(config.base));
  Artifacts a("sweep", cfg, o.seed);
  write_table(a, o, result.table, {{"", sweep_plot(result.table, config.axis)}});
  a.finish(o.out, err);
  for (const auto& f : result.failures) err << "failed point: " << f << "\n";
  return result.failures.empty() ? kOk : kInfeasiblePoint;
}

int cmd_distribution(const Options& o, std::ostream& err) {
  require_out(o, "distribution");
  DistributionConfig config;
  ChainSpec base;
  base.target_probability = 0.5;
  config.spec = load_spec(o, base);
  config.n_estimates = o.estimates;
  config.samples_per_estimate = o.per_estimate;
  config.bins = o.bins;
  config.workers = resolve_worker_flag(o);
  err << "distribution: " << config.n_estimates << " estimates of " << config.samples_per_estimate
      << " timelines each\n";
  const auto result = estimate_distribution_experiment(config, RandomSource(o.seed));

  json cfg = base_config(o, "distribution");
  cfg["n_estimates"] = config.n_estimates;
  cfg["samples_per_estimate"] = config.samples_per_estimate;
  cfg["bins"] = config.bins;
  cfg["spec"] = json::parse(chain_spec_json(config.spec));
  Artifacts a("distribution", cfg, o.seed);
  write_table(a, o, result.summary(), {{"", result.plot()}});
  if (o.format != "svg") a.write(sibling(o.out, ".histogram.csv"), result.histogram_csv());
  a.finish(o.out, err);
  return kOk;
}

int cmd_cohort(const Options& o, std::ostream& err) {
  require_out(o, "cohort");
  CohortSpec spec;
  spec.chains = load_spec(o, ChainSpec{});
  spec.n_patients = o.patients;
  spec.n_timelines = o.timelines;
  spec.bootstrap_rounds = o.rounds;
  spec.equivalence_rounds = o.equivalence_rounds;
  spec.reference_n = o.reference_n.value_or(o.timelines);
  spec.calibration_bins = o.calibration_bins;
  spec.risk = {o.risk_low, o.risk_high};
  spec.workers = resolve_worker_flag(o);
  err << "cohort: " << spec.n_patients << " patients x " << spec.n_timelines << " timelines, "
      << spec.bootstrap_rounds << " rounds\n";
  const auto result = synthetic_cohort_eval(spec, RandomSource(o.seed));

  for (auto alt : {EstimatorKind::scope, EstimatorKind::reach}) {
    if (const auto* e = result.find_equivalence(alt, spec.reference_n)) {
      err << to_string(alt) << " matches MC@" << spec.reference_n << " at m=" << full(e->m.value)
          << " (95% CI " << (e->m.ci_low ? full(*e->m.ci_low) : "-") << ".."
          << (e->m.ci_high ? full(*e->m.ci_high) : "-") << "), not reached in "
          << e->not_reached << "/" << e->rounds << " rounds\n";
    }
  }

  json cfg = base_config(o, "cohort");
  cfg["n_patients"] = spec.n_patients;
  cfg["n_timelines"] = spec.n_timelines;
  cfg["bootstrap_rounds"] = spec.bootstrap_rounds;
  cfg["equivalence_rounds"] = spec.equivalence_rounds;
  cfg["reference_n"] = spec.reference_n;
  cfg["calibration_bins"] = spec.calibration_bins;
  cfg["risk_prior"] = {{"distribution", "log-uniform"}, {"low", spec.risk.low}, {"high", spec.risk.high}};
  cfg["chains"] = json::parse(chain_spec_json(spec.chains));
  Artifacts a("cohort", cfg, o.seed);
  write_table(a, o, result.table,
              {{"", cohort_auc_plot(result)}, {".equivalence", equivalence_plot(result)}});
  a.finish(o.out, err);
  return kOk;
}

void add_model_flags(CLI::App* app, Options& o) {
  app->add_option("--model", o.model_path, "Markov model JSON file");
  app->add_option("--spec", o.spec_path, "random chain spec JSON file");
}

void add_run_flags(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "64-bit seed");
  app->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  app->add_option("--out", o.out, "output path");
  app->add_option("--format", o.format, "csv | json | svg")->check(CLI::IsMember({"csv", "json", "svg"}));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"reachlab: outcome-probability estimators for sequence models"};
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "check a Markov model file");
  validate->add_option("--model", o.model_path, "Markov model JSON file")->required();

  auto* est = app.add_subcommand("estimate", "estimate P(outcome) by sampling");
  add_model_flags(est, o);
  add_run_flags(est, o);
  est->add_option("--kind", o.kind, "mc | scope | reach");
  est->add_option("--n", o.n, "number of timelines");
  est->add_option("--clip", o.clip, "SCOPE clip policy: none | unit");
  est->add_option("--dump-trajectories", o.dump_trajectories, "write sampled timelines as JSON lines");
  est->add_option("--sidecar", o.sidecar, "write sub-estimates as little-endian float64");

  auto* oracle = app.add_subcommand("oracle", "exact computations");
  oracle->require_subcommand(1);
  auto* disp = oracle->add_subcommand("dispersion", "P(MC ranks the elevated-risk patient strictly higher)");
  disp->add_option("--n", o.dispersion_n, "timelines per patient");
  disp->add_option("--p-base", o.p_base, "baseline risk");
  disp->add_option("--p-elev", o.p_elev, "elevated risk");
  disp->add_option("--precision", o.precision, "decimal places printed");
  auto* exact = oracle->add_subcommand("exact", "DP probability and single-sample variances");
  add_model_flags(exact, o);
  exact->add_option("--counterexample", o.counterexample_p, "use the coin-flip chain with this p");
  auto* enumerate = oracle->add_subcommand("enumerate", "full distribution of a sub-estimator");
  add_model_flags(enumerate, o);
  add_run_flags(enumerate, o);
  enumerate->add_option("--kind", o.kind, "mc | scope | reach");
  enumerate->add_option("--counterexample", o.counterexample_p, "use the coin-flip model with this p");
  enumerate->add_option("--max-leaves", o.max_leaves, "enumeration budget");
  auto* counter = oracle->add_subcommand("counterexample", "coin-flip model moments");
  counter->add_option("--p", o.p, "probability of the early terminal token");
  auto* bij = oracle->add_subcommand("bijection", "P(A) vs P(B) by enumeration");
  add_model_flags(bij, o);
  bij->add_option("--counterexample", o.counterexample_p, "use the coin-flip model with this p");
  bij->add_option("--max-leaves", o.max_leaves, "enumeration budget");

  auto* sweep = app.add_subcommand("sweep", "variance sweep over one axis");
  add_run_flags(sweep, o);
  sweep->add_option("--spec", o.spec_path, "base chain spec JSON (overrides axis defaults)");
  sweep->add_option("--axis", o.axis, "probability | spontaneity | sample_count");
  sweep->add_option("--grid", o.grid, "comma-separated grid values")->delimiter(',');
  sweep->add_option("--replications", o.replications, "estimates per grid point");
  sweep->add_option("--samples", o.samples, "timelines per estimate (ignored on sample_count)");

  auto* dist = app.add_subcommand("distribution", "histograms of repeated estimates");
  add_run_flags(dist, o);
  dist->add_option("--spec", o.spec_path, "chain spec JSON");
  dist->add_option("--estimates", o.estimates, "number of estimates per estimator");
  dist->add_option("--samples", o.per_estimate, "timelines per estimate");
  dist->add_option("--bins", o.bins, "histogram bins");

  auto* cohort = app.add_subcommand("cohort", "synthetic cohort AUROC / calibration / equivalence");
  add_run_flags(cohort, o);
  cohort->add_option("--spec", o.spec_path, "per-patient chain template JSON");
  cohort->add_option("--patients", o.patients, "cohort size");
  cohort->add_option("--timelines", o.timelines, "timelines per patient");
  cohort->add_option("--rounds", o.rounds, "subsampling rounds");
  cohort->add_option("--equivalence-rounds", o.equivalence_rounds, "equivalence bootstrap rounds");
  cohort->add_option("--reference-n", o.reference_n, "largest MC count compared (default: --timelines)");
  cohort->add_option("--calibration-bins", o.calibration_bins, "equal-width calibration bins");
  cohort->add_option("--risk-low", o.risk_low, "smallest per-patient risk (log-uniform)");
  cohort->add_option("--risk-high", o.risk_high, "largest per-patient risk (log-uniform)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (*validate) return cmd_validate(o, out, err);
    if (*est) return cmd_estimate(o, out, err);
    if (*disp) return cmd_oracle_dispersion(o, out);
    if (*exact) return cmd_oracle_exact(o, out);
    if (*enumerate) return cmd_oracle_enumerate(o, out, err);
    if (*counter) return cmd_oracle_counterexample(o, out);
    if (*bij) return cmd_oracle_bijection(o, out);
    if (*sweep) return cmd_sweep(o, err);
    if (*dist) return cmd_distribution(o, err);
    if (*cohort) return cmd_cohort(o, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const CalibrationFailure& e) {
    err << "error: " << e.what() << "\n";
    return kInfeasiblePoint;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace reachlab::cli
