#pragma once

// Experiment runner: executes a validated config, writes CSV/JSON
// artifacts with full seed provenance, and returns a run manifest.
// Artifacts are byte-identical across re-runs of the same config; the
// manifest itself carries wall-clock timing and is excluded from that
// guarantee.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "walksum/config.hpp"

namespace walksum::cli {

struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> master_seed;
  std::optional<unsigned> threads;
};

struct RunManifest {
  std::string config_hash;
  std::string version = kVersion;
  std::string experiment;
  std::string out_dir;
  std::vector<std::string> files;
  std::vector<std::string> assumption_flags;
  std::int64_t wall_clock_ms = 0;
  unsigned threads = 1;
  json seeds;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write artifact: " + path.string());
  out << content;
}

inline json law_to_json(const walk::StepLaw& law) {
  json j;
  j["support"] = law.support();
  j["probs"] = law.probabilities();
  j["mean"] = law.mean();
  j["mean_abs"] = law.mean_abs();
  j["transient"] = law.transient();
  return j;
}

inline json report_to_json(const harness::CltReport& r) {
  json j;
  j["experiment"] = r.experiment;
  j["n"] = r.n;
  j["replicates"] = r.replicates;
  j["path_seed"] = r.path_seed;
  j["process_seed"] = r.process_seed;
  j["target_variance"] = r.target_variance;
  j["empirical_mean"] = r.empirical_mean;
  j["empirical_variance"] = r.empirical_variance;
  j["ks_statistic"] = r.normality.ks;
  j["ks_critical_1pct"] = r.normality.ks_critical_1pct;
  j["ks_studentized"] = r.ks_studentized;
  j["skewness"] = r.normality.skewness;
  j["excess_kurtosis"] = r.normality.excess_kurtosis;
  j["skewness_z"] = r.normality.skewness_z;
  j["kurtosis_z"] = r.normality.kurtosis_z;
  j["skewness_p"] = r.normality.skewness_p;
  j["kurtosis_p"] = r.normality.kurtosis_p;
  j["a1_i_ratio"] = r.a1_i_ratio;
  j["a1_ii_ratio"] = r.a1_ii_ratio;
  j["sum_weights_sq"] = r.sum_weights_sq;
  j["sigma_n2"] = r.sigma_n2;
  j["unnormalized_variance"] = r.unnormalized_variance;
  if (r.experiment == "clt-sampled") {
    j["alpha0_over_n"] = r.alpha0_over_n;
    j["max_local_time"] = r.max_local_time;
  }
  if (r.lindeberg >= 0.0) j["lindeberg"] = r.lindeberg;
  j["flags"] = r.flags;
  return j;
}

inline std::string samples_csv(const std::vector<double>& samples) {
  std::string out = "sample\n";
  for (double s : samples) {
    out += format_double(s);
    out += '\n';
  }
  return out;
}

struct SeedBlock {
  std::uint64_t master = kDefaultMasterSeed;
  std::uint64_t path = kDefaultPathSeed;
  std::uint64_t process = 0;
  bool path_explicit = false;

  static SeedBlock from(const json& doc, const RunOverrides& ov) {
    SeedBlock s;
    if (doc.contains("seeds")) {
      const auto& blk = doc["seeds"];
      if (blk.contains("master")) s.master = blk["master"].get<std::uint64_t>();
      if (blk.contains("path")) {
        s.path = blk["path"].get<std::uint64_t>();
        s.path_explicit = true;
      }
      if (blk.contains("process")) s.process = blk["process"].get<std::uint64_t>();
    }
    if (ov.master_seed) s.master = *ov.master_seed;
    if (!doc.contains("seeds") || !doc["seeds"].contains("process"))
      s.process = derive_seed(s.master, 2);
    return s;
  }

  json to_json() const {
    json j;
    j["master"] = master;
    j["path"] = path;
    j["process"] = process;
    j["derivation"] = "replicate r draws from derive_seed(process, r); sweeps use derive_seed(path, j)";
    return j;
  }
};

struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
  std::vector<std::string> assumption_flags;

  void add(std::string name, std::string content) {
    files.emplace_back(std::move(name), std::move(content));
  }
};

inline walk::GreenTable resolve_green(const walk::StepLaw& law,
                                      const variance::LagCovariance& cov,
                                      std::uint64_t seed, unsigned threads) {
  if (law.is_nearest_neighbour() || law.is_deterministic()) {
    double bound = 1.0;
    if (law.is_nearest_neighbour())
      bound = 1.0 / std::fabs(2.0 * law.up_probability() - 1.0);
    const std::int64_t trunc = variance::suggested_truncation(cov, bound);
    return walk::green_exact(law, -trunc, trunc);
  }
  const std::int64_t trunc = variance::suggested_truncation(cov, 10.0);
  return walk::green_mc(law, -trunc, trunc, 10000, 20000, seed, threads);
}

inline Artifacts run_walk_diagnostics(const json& doc, const SeedBlock& seeds) {
  const auto law = build_walk(doc["walk"]);
  const bool allow = doc["walk"].value("allow_recurrent", false);
  const std::int64_t n = doc["n"].get<std::int64_t>();
  const auto path = walk::sample_path(law, n, seeds.path, allow);
  const auto field = walk::local_time(path);
  const auto alpha0 = walk::self_intersection(field, 0);

  std::string csv = "x,count\n";
  for (const auto& [x, c] : field.sorted_counts())
    csv += std::to_string(x) + "," + std::to_string(c) + "\n";

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  json j;
  j["n"] = n;
  j["path_seed"] = seeds.path;
  j["law"] = law_to_json(law);
  j["sum_counts"] = field.total();
  j["distinct_sites"] = field.distinct_sites();
  j["min_position"] = field.min_position();
  j["max_position"] = field.max_position();
  j["max_abs_position"] = field.max_abs_position();
  j["alpha0"] = alpha0;
  j["alpha0_over_n"] = static_cast<double>(alpha0) / static_cast<double>(n);
  j["max_local_time"] = field.max_count();
  // Soft diagnostic: the maximal occupation against n^{0.05} sqrt(n).
  j["max_local_time_over_sqrt_n"] = static_cast<double>(field.max_count()) / sqrt_n;
  j["soft_bound"] = std::pow(static_cast<double>(n), 0.05);
  j["within_soft_bound"] =
      static_cast<double>(field.max_count()) / sqrt_n <=
      std::pow(static_cast<double>(n), 0.05);

  Artifacts art;
  art.add("local_time.csv", std::move(csv));
  art.add("walk_diagnostics.json", j.dump(2) + "\n");
  return art;
}

inline Artifacts run_green(const json& doc, const SeedBlock& seeds,
                           unsigned threads) {
  const auto law = build_walk(doc["walk"]);
  const std::int64_t lo = doc["range"]["min"].get<std::int64_t>();
  const std::int64_t hi = doc["range"]["max"].get<std::int64_t>();
  const std::string method = doc.value("method", "both");
  const std::int64_t k = doc.value("truncation_k", std::int64_t{10000});
  const std::int64_t r = doc.value("replicates", std::int64_t{100000});

  std::optional<walk::GreenTable> exact;
  std::optional<walk::GreenTable> mc;
  if (method == "exact" || method == "both") {
    try {
      exact = walk::green_exact(law, lo, hi);
    } catch (const UnsupportedError&) {
      if (method == "exact") throw;
    }
  }
  if (method == "mc" || method == "both")
    mc = walk::green_mc(law, lo, hi, k, r, seeds.master, threads);

  std::string csv = "x,green,std_error,exact\n";
  double max_gap = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    const double est = mc ? mc->at(x) : exact->at(x);
    const double se = mc ? mc->std_error(x) : 0.0;
    csv += std::to_string(x) + "," + format_double(est) + "," + format_double(se);
    csv += ",";
    if (exact) {
      csv += format_double(exact->at(x));
      if (mc) max_gap = std::max(max_gap, std::fabs(mc->at(x) - exact->at(x)));
    }
    csv += "\n";
  }

  json j;
  j["law"] = law_to_json(law);
  j["range"] = {{"min", lo}, {"max", hi}};
  j["method"] = method;
  j["seed"] = seeds.master;
  if (mc) {
    j["truncation_k"] = mc->truncation_k;
    j["replicates"] = mc->replicates;
    j["truncation_bound"] = mc->truncation_bound;
  }
  if (exact && mc) j["max_abs_gap_vs_exact"] = max_gap;

  Artifacts art;
  art.add("green.csv", std::move(csv));
  art.add("green.json", j.dump(2) + "\n");
  return art;
}

inline Artifacts run_variance(const json& doc, const SeedBlock& seeds,
                              unsigned threads) {
  const auto model = build_model(doc["model"]);
  const auto f = build_observable(doc["f"], model);
  const auto law = build_walk(doc["walk"]);
  if (!law.transient())
    throw TransienceError("variance: the sampling walk must be transient");
  const auto cov = variance::analytic_covariance(model, f);
  const auto green = resolve_green(law, cov, derive_seed(seeds.master, 11), threads);
  const std::int64_t trunc = std::min(green.hi, -green.lo);
  const auto report = variance::sigma2_asymptotic(green, cov, trunc);

  std::string csv = "lag,green,covariance,contribution\n";
  for (const auto& row : report.contributions)
    csv += std::to_string(row.lag) + "," + format_double(row.green) + "," +
           format_double(row.covariance) + "," + format_double(row.contribution) +
           "\n";

  json j;
  j["sigma2"] = report.sigma2;
  j["tail_estimate"] = report.tail_estimate;
  j["truncation"] = report.truncation;
  j["degenerate"] = report.degenerate;
  j["law"] = law_to_json(law);

  Artifacts art;
  if (report.degenerate) art.assumption_flags.push_back("sigma2-not-positive");
  art.add("variance_contributions.csv", std::move(csv));

  if (doc.contains("n_grid")) {
    const auto grid = doc["n_grid"].get<std::vector<std::int64_t>>();
    const auto points = variance::variance_convergence(model, f, law, grid, seeds.path);
    std::string conv = "n,sigma_n2_over_n,target\n";
    for (const auto& pt : points)
      conv += std::to_string(pt.n) + "," + format_double(pt.sigma_n2_over_n) + "," +
              format_double(report.sigma2) + "\n";
    art.add("variance_convergence.csv", std::move(conv));
    j["path_seed"] = seeds.path;
    j["final_sigma_n2_over_n"] = points.back().sigma_n2_over_n;
  }
  art.add("variance.json", j.dump(2) + "\n");
  return art;
}

inline Artifacts run_clt_triangular(const json& doc, const SeedBlock& seeds,
                                    unsigned threads) {
  harness::TriangularSpec spec{build_model(doc["model"]),
                               build_observable(doc["f"], build_model(doc["model"])),
                               build_weights(doc), build_k_rule(doc)};
  const std::int64_t n = doc["n"].get<std::int64_t>();
  const std::int64_t r = doc["replicates"].get<std::int64_t>();
  auto report = harness::run_triangular(spec, n, r, seeds.process, threads);
  if (doc.contains("epsilon"))
    report.lindeberg = harness::lindeberg_diagnostic(
        spec, n, doc["epsilon"].get<double>(), std::min<std::int64_t>(r, 2000),
        derive_seed(seeds.process, 77), threads);

  Artifacts art;
  art.add("report.json", report_to_json(report).dump(2) + "\n");
  art.add("samples.csv", samples_csv(report.samples));
  return art;
}

inline Artifacts run_clt_sampled(const json& doc, const SeedBlock& seeds,
                                 unsigned threads) {
  const auto model = build_model(doc["model"]);
  const auto f = build_observable(doc["f"], model);
  const auto law = build_walk(doc["walk"]);
  const std::int64_t n = doc["n"].get<std::int64_t>();
  const std::int64_t r = doc["replicates"].get<std::int64_t>();

  const auto report =
      harness::run_sampled(model, f, law, n, r, seeds.path, seeds.process, threads);

  Artifacts art;
  art.add("report.json", report_to_json(report).dump(2) + "\n");
  art.add("samples.csv", samples_csv(report.samples));

  if (doc.contains("path_sweep")) {
    const auto count = doc["path_sweep"].get<std::int64_t>();
    json sweep = json::array();
    for (std::int64_t jdx = 0; jdx < count; ++jdx) {
      const std::uint64_t path_seed = derive_seed(seeds.path, static_cast<std::uint64_t>(jdx));
      const auto rep = harness::run_sampled(model, f, law, n, r, path_seed,
                                            derive_seed(seeds.process, 1000 + jdx),
                                            threads);
      json entry;
      entry["path_seed"] = path_seed;
      entry["ks_statistic"] = rep.normality.ks;
      entry["ks_critical_1pct"] = rep.normality.ks_critical_1pct;
      entry["empirical_variance"] = rep.empirical_variance;
      entry["pass"] = rep.normality.ks < rep.normality.ks_critical_1pct;
      sweep.push_back(entry);
    }
    art.add("sweep.json", sweep.dump(2) + "\n");
  }
  return art;
}

inline Artifacts run_dependence_profile(const json& doc) {
  const auto profile = build_profile(doc["profile"]);
  const std::int64_t n_max = doc.value("n_max", std::int64_t{50});

  std::string csv = "n,bound\n";
  for (std::int64_t n = 1; n <= n_max; ++n)
    csv += std::to_string(n) + "," +
           format_double(dependence::theta2_upper(profile, n)) + "\n";

  json j;
  j["profile"] = doc["profile"];
  j["n_max"] = n_max;
  try {
    j["theta_series_sum"] =
        dependence::theta_series_sum(profile, doc.value("k_max", std::int64_t{1000000}));
    j["divergent"] = false;
  } catch (const DivergenceError&) {
    j["divergent"] = true;
  }
  if (doc["profile"].value("kind", "") == "power-law") {
    const auto verdict = dependence::a3_check(doc["profile"]["C"].get<double>(),
                                              doc["profile"]["a"].get<double>());
    json a3;
    a3["satisfied"] = verdict.satisfied;
    if (verdict.witness_epsilon) a3["witness_epsilon"] = *verdict.witness_epsilon;
    a3["envelope_monotone"] = verdict.envelope_monotone;
    a3["numerically_cauchy"] = verdict.numerically_cauchy;
    j["a3"] = a3;
  }

  Artifacts art;
  art.add("profile.csv", std::move(csv));
  art.add("profile.json", j.dump(2) + "\n");
  return art;
}

inline Artifacts run_estimate(const json& doc, const SeedBlock& seeds) {
  const auto model = build_model(doc["model"]);
  const double model_rho =
      model.variant() == process::ProcessModel::Variant::LinearAr1 ? model.rho() : 0.0;
  const auto design = build_design(doc["design"], model_rho);
  const std::int64_t n = doc["n"].get<std::int64_t>();
  const auto report = estimation::estimate_with_ci(model, design, n, seeds.master);

  json j;
  j["m_hat"] = report.m_hat;
  j["n"] = report.n;
  j["a_of_s"] = report.a_of_s;
  j["ci_lo"] = report.ci_lo;
  j["ci_hi"] = report.ci_hi;
  j["half_width"] = report.half_width;
  j["degenerate"] = report.degenerate;
  j["seed"] = report.seed;
  j["design"] = law_to_json(design.law);
  j["design"]["kappa"] = design.kappa;
  j["design"]["mean_step"] = design.mean_step;
  j["design"]["tie"] = design.tie;
  j["marginal_mean"] = model.marginal_mean();

  Artifacts art;
  if (report.degenerate) art.assumption_flags.push_back("a-of-s-degenerate");
  art.add("estimate.json", j.dump(2) + "\n");
  return art;
}

inline Artifacts run_optimal_design(const json& doc) {
  const double rho = doc["rho"].get<double>();
  const double kappa = doc["kappa"].get<double>();
  const std::int64_t cap = doc.value(
      "max_support", static_cast<std::int64_t>(std::ceil(kappa)) + 4);

  const auto taga = estimation::kappa_optimal_law(rho, kappa);
  const auto brute = estimation::brute_force_optimal(rho, kappa, cap);

  auto tv = [](const walk::StepLaw& a, const walk::StepLaw& b) {
    double dist = 0.0;
    for (std::int64_t x = 1; x <= 64; ++x)
      dist += std::fabs(a.probability_of(x) - b.probability_of(x));
    return 0.5 * dist;
  };
  const auto unit_cov = variance::LagCovariance::geometric(1.0, rho);

  json j;
  j["rho"] = rho;
  j["kappa"] = kappa;
  j["taga"] = law_to_json(taga.law);
  j["taga"]["mean_step"] = taga.mean_step;
  j["taga"]["tie"] = taga.tie;
  j["brute_force"] = law_to_json(brute.law);
  j["brute_force"]["mean_step"] = brute.mean_step;
  j["tv_distance"] = tv(taga.law, brute.law);
  j["a_of_s_taga_unit_variance"] = estimation::a_of_s(unit_cov, taga.law);
  j["a_of_s_brute_unit_variance"] = estimation::a_of_s(unit_cov, brute.law);

  Artifacts art;
  art.add("design.json", j.dump(2) + "\n");
  return art;
}

}  // namespace detail

// Executes one experiment. Artifacts land in the configured output
// directory; the manifest records hash, seeds and the artifact list.
inline RunManifest run_experiment(const json& doc, const std::string& config_bytes,
                                  const RunOverrides& overrides = {}) {
  const auto diagnostics = validate_config(doc);
  if (!diagnostics.empty()) {
    std::string msg = "config validation failed:";
    for (const auto& d : diagnostics) msg += "\n  " + d.field + ": " + d.message;
    throw ValidationError(msg);
  }

  const auto started = std::chrono::steady_clock::now();
  const std::string kind = doc["experiment"].get<std::string>();
  const auto seeds = detail::SeedBlock::from(doc, overrides);
  const unsigned threads =
      overrides.threads.value_or(doc.value("threads", 1u));
  const std::string out_dir =
      overrides.out_dir.value_or(doc.value("out", std::string("out")));

  detail::Artifacts art;
  if (kind == "walk-diagnostics") art = detail::run_walk_diagnostics(doc, seeds);
  else if (kind == "green") art = detail::run_green(doc, seeds, threads);
  else if (kind == "variance") art = detail::run_variance(doc, seeds, threads);
  else if (kind == "clt-triangular") art = detail::run_clt_triangular(doc, seeds, threads);
  else if (kind == "clt-sampled") art = detail::run_clt_sampled(doc, seeds, threads);
  else if (kind == "dependence-profile") art = detail::run_dependence_profile(doc);
  else if (kind == "estimate") art = detail::run_estimate(doc, seeds);
  else art = detail::run_optimal_design(doc);

  std::filesystem::create_directories(out_dir);
  RunManifest manifest;
  manifest.config_hash = detail::hex64(detail::fnv1a64(config_bytes));
  manifest.experiment = kind;
  manifest.out_dir = out_dir;
  manifest.threads = threads;
  manifest.seeds = seeds.to_json();
  manifest.assumption_flags = art.assumption_flags;
  for (auto& [name, content] : art.files) {
    detail::write_file(std::filesystem::path(out_dir) / name, content);
    manifest.files.push_back(name);
  }
  manifest.wall_clock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - started)
                               .count();

  json mj;
  mj["config_hash"] = manifest.config_hash;
  mj["version"] = manifest.version;
  mj["experiment"] = manifest.experiment;
  mj["files"] = manifest.files;
  mj["assumption_flags"] = manifest.assumption_flags;
  mj["wall_clock_ms"] = manifest.wall_clock_ms;
  mj["threads"] = manifest.threads;
  mj["seeds"] = manifest.seeds;
  detail::write_file(std::filesystem::path(out_dir) / "manifest.json",
                     mj.dump(2) + "\n");
  return manifest;
}

inline RunManifest run_config_file(const std::string& path,
                                   const RunOverrides& overrides = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  return run_experiment(doc, bytes, overrides);
}

// Exit-code contract: 0 success, 2 validation/unsupported-configuration,
// 3 assumption failure (non-transient walk, non-positive variance), 1
// anything else.
inline int run_path(const std::string& config_path, const RunOverrides& overrides,
                    std::ostream& out, std::ostream& err) {
  try {
    const auto manifest = run_config_file(config_path, overrides);
    out << "experiment: " << manifest.experiment << "\n";
    out << "out: " << manifest.out_dir << "\n";
    for (const auto& f : manifest.files) out << "  wrote " << f << "\n";
    if (!manifest.assumption_flags.empty()) {
      for (const auto& flag : manifest.assumption_flags)
        err << "assumption flag: " << flag << "\n";
      return 3;
    }
    return 0;
  } catch (const TransienceError& e) {
    err << "assumption failure: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateError& e) {
    err << "assumption failure: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    err << "assumption failure: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const UnsupportedError& e) {
    err << "unsupported configuration: " << e.what() << "\n";
    return 2;
  } catch (const ParameterError& e) {
    err << "invalid parameter: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int validate_path(const std::string& config_path, std::ostream& out,
                         std::ostream& err) {
  json doc;
  try {
    doc = load_config_file(config_path);
  } catch (const ValidationError& e) {
    err << e.what() << "\n";
    return 2;
  }
  const auto diagnostics = validate_config(doc);
  if (diagnostics.empty()) {
    out << "ok\n";
    return 0;
  }
  for (const auto& d : diagnostics) out << d.field << ": " << d.message << "\n";
  return 2;
}

}  // namespace walksum::cli
