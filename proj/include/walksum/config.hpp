#pragma once

// Declarative experiment configs: JSON schema, validation diagnostics and
// builders that turn config blocks into model/walk/observable objects.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "walksum/core.hpp"
#include "walksum/dependence.hpp"
#include "walksum/estimation.hpp"
#include "walksum/harness.hpp"
#include "walksum/process.hpp"
#include "walksum/walk.hpp"

namespace walksum::cli {

using json = nlohmann::json;

struct Diagnostic {
  std::string field;
  std::string message;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {
      "walk-diagnostics", "green",          "variance", "clt-triangular",
      "clt-sampled",      "dependence-profile", "estimate", "optimal-design"};
  return kinds;
}

namespace detail {

inline bool is_number(const json& j) { return j.is_number(); }

inline void check_number(const json& block, const std::string& prefix,
                         const std::string& key,
                         std::vector<Diagnostic>& out, bool required = true) {
  if (!block.contains(key)) {
    if (required) out.push_back({prefix + key, "missing required numeric field"});
    return;
  }
  if (!block[key].is_number()) out.push_back({prefix + key, "must be a number"});
}

// Accepts both the flat "tail_q" spelling and a nested {"tail": {"q": ...}}.
inline double tail_ratio(const json& model) {
  if (model.contains("tail") && model["tail"].is_object())
    return model["tail"].value("q", 0.0);
  return model.value("tail_q", 0.0);
}

// "kappa" with "kappa_c" accepted as an alias.
inline double contraction_factor(const json& block, double fallback = 0.0) {
  if (block.contains("kappa_c") && block["kappa_c"].is_number())
    return block["kappa_c"].get<double>();
  return block.value("kappa", fallback);
}

inline void validate_noise(const json& noise, const std::string& prefix,
                           std::vector<Diagnostic>& out) {
  if (!noise.is_object()) {
    out.push_back({prefix, "noise block must be an object"});
    return;
  }
  const std::string law = noise.is_object() && noise.contains("law") &&
                                  noise["law"].is_string()
                              ? noise["law"].get<std::string>()
                              : "";
  if (law == "gaussian") {
    check_number(noise, prefix + ".", "sd", out);
    check_number(noise, prefix + ".", "mean", out, /*required=*/false);
    if (noise.contains("sd") && noise["sd"].is_number() &&
        noise["sd"].get<double>() < 0.0)
      out.push_back({prefix + ".sd", "standard deviation must be >= 0"});
  } else if (law == "bernoulli") {
    check_number(noise, prefix + ".", "p", out);
    if (noise.contains("p") && noise["p"].is_number()) {
      const double p = noise["p"].get<double>();
      if (p < 0.0 || p > 1.0) out.push_back({prefix + ".p", "p must lie in [0,1]"});
    }
  } else if (law == "uniform") {
    check_number(noise, prefix + ".", "lo", out);
    check_number(noise, prefix + ".", "hi", out);
    if (noise.contains("lo") && noise.contains("hi") && noise["lo"].is_number() &&
        noise["hi"].is_number() &&
        noise["hi"].get<double>() < noise["lo"].get<double>())
      out.push_back({prefix + ".hi", "must be >= lo"});
  } else {
    out.push_back({prefix + ".law", "must be one of gaussian, bernoulli, uniform"});
  }
}

inline void validate_model(const json& model, std::vector<Diagnostic>& out) {
  if (!model.is_object()) {
    out.push_back({"model", "model block must be an object"});
    return;
  }
  const std::string variant = model.value("variant", "");
  if (variant == "andrews") {
    return;
  }
  if (variant == "ar1") {
    check_number(model, "model.", "rho", out);
    if (model.contains("rho") && model["rho"].is_number() &&
        std::fabs(model["rho"].get<double>()) >= 1.0)
      out.push_back({"model.rho", "|rho| must be < 1"});
    if (!model.contains("noise")) out.push_back({"model.noise", "missing noise block"});
    else validate_noise(model["noise"], "model.noise", out);
    return;
  }
  if (variant == "causal-linear") {
    if (!model.contains("coeffs") || !model["coeffs"].is_array() ||
        model["coeffs"].empty())
      out.push_back({"model.coeffs", "need a non-empty coefficient array"});
    const double q = tail_ratio(model);
    if (q < 0.0 || q >= 1.0)
      out.push_back({"model.tail_q", "tail ratio must lie in [0,1)"});
    if (!model.contains("noise")) out.push_back({"model.noise", "missing noise block"});
    else validate_noise(model["noise"], "model.noise", out);
    return;
  }
  if (variant == "iterated-contraction") {
    const bool has_kappa =
        (model.contains("kappa") && model["kappa"].is_number()) ||
        (model.contains("kappa_c") && model["kappa_c"].is_number());
    if (!has_kappa) {
      out.push_back({"model.kappa", "missing required numeric field"});
    } else {
      const double kappa = contraction_factor(model);
      if (kappa < 0.0 || kappa >= 1.0)
        out.push_back({"model.kappa", "contraction factor must lie in [0,1)"});
    }
    const std::string map = model.value("map", "affine");
    if (map != "affine" && map != "sine")
      out.push_back({"model.map", "must be affine or sine"});
    if (map == "sine" &&
        (!model.contains("marginal_mean") || !model.contains("marginal_variance")))
      out.push_back(
          {"model.marginal_mean", "sine map needs declared marginal mean and variance"});
    if (!model.contains("noise")) out.push_back({"model.noise", "missing noise block"});
    else validate_noise(model["noise"], "model.noise", out);
    return;
  }
  out.push_back({"model.variant",
                 "must be one of andrews, ar1, causal-linear, iterated-contraction"});
}

inline void validate_walk(const json& blk, const std::string& prefix,
                          std::vector<Diagnostic>& out,
                          bool positive_only = false) {
  if (!blk.is_object()) {
    out.push_back({prefix, "walk block must be an object"});
    return;
  }
  if (blk.contains("nn")) {
    if (!blk["nn"].is_number() || blk["nn"].get<double>() < 0.0 ||
        blk["nn"].get<double>() > 1.0)
      out.push_back({prefix + ".nn", "nearest-neighbour probability must lie in [0,1]"});
    if (positive_only)
      out.push_back({prefix + ".nn", "sampling designs need positive steps"});
    return;
  }
  if (blk.contains("delta")) {
    if (!blk["delta"].is_number_integer())
      out.push_back({prefix + ".delta", "step must be an integer"});
    else if (positive_only && blk["delta"].get<std::int64_t>() < 1)
      out.push_back({prefix + ".delta", "sampling designs need steps >= 1"});
    return;
  }
  if (!blk.contains("support") || !blk.contains("probs")) {
    out.push_back({prefix, "need nn, delta, or support/probs"});
    return;
  }
  if (!blk["support"].is_array() || !blk["probs"].is_array() ||
      blk["support"].size() != blk["probs"].size() || blk["support"].empty()) {
    out.push_back({prefix + ".support", "support and probs must be equal-length arrays"});
    return;
  }
  double total = 0.0;
  for (const auto& p : blk["probs"]) {
    if (!p.is_number() || p.get<double>() < 0.0) {
      out.push_back({prefix + ".probs", "probabilities must be non-negative numbers"});
      return;
    }
    total += p.get<double>();
  }
  if (std::fabs(total - 1.0) > 1e-12)
    out.push_back({prefix + ".probs", "probabilities must sum to 1"});
  if (positive_only)
    for (const auto& s : blk["support"])
      if (!s.is_number_integer() || s.get<std::int64_t>() < 1) {
        out.push_back({prefix + ".support", "sampling designs need steps >= 1"});
        break;
      }
}

inline void validate_f(const json& f, std::vector<Diagnostic>& out) {
  if (!f.is_object()) {
    out.push_back({"f", "f block must be an object"});
    return;
  }
  const std::string kind = f.value("kind", "");
  if (kind == "identity") return;
  if (kind == "cosine") {
    if (f.contains("frequency") &&
        (!f["frequency"].is_number() || f["frequency"].get<double>() < 0.0))
      out.push_back({"f.frequency", "must be a number >= 0"});
    return;
  }
  if (kind == "hinge") {
    if (f.contains("index") && !f["index"].is_number_integer())
      out.push_back({"f.index", "must be an integer"});
    return;
  }
  out.push_back({"f.kind", "must be one of identity, cosine, hinge"});
}

inline void validate_profile(const json& p, std::vector<Diagnostic>& out) {
  if (!p.is_object()) {
    out.push_back({"profile", "profile block must be an object"});
    return;
  }
  const std::string kind = p.value("kind", "");
  if (kind == "contraction") {
    const bool has_kappa = (p.contains("kappa") && p["kappa"].is_number()) ||
                           (p.contains("kappa_c") && p["kappa_c"].is_number());
    if (!has_kappa) {
      out.push_back({"profile.kappa", "missing required numeric field"});
    } else {
      const double kappa = contraction_factor(p);
      if (kappa < 0.0 || kappa >= 1.0)
        out.push_back({"profile.kappa", "must lie in [0,1)"});
    }
    check_number(p, "profile.", "distance", out);
  } else if (kind == "geometric") {
    check_number(p, "profile.", "C", out);
    check_number(p, "profile.", "rho", out);
    if (p.contains("rho") && p["rho"].is_number()) {
      const double rho = p["rho"].get<double>();
      if (rho < 0.0 || rho >= 1.0) out.push_back({"profile.rho", "must lie in [0,1)"});
    }
  } else if (kind == "power-law") {
    check_number(p, "profile.", "C", out);
    check_number(p, "profile.", "a", out);
    if (p.contains("a") && p["a"].is_number() && p["a"].get<double>() <= 0.0)
      out.push_back({"profile.a", "exponent must be > 0"});
  } else if (kind == "linear-tail") {
    if (!p.contains("coeffs") || !p["coeffs"].is_array() || p["coeffs"].empty())
      out.push_back({"profile.coeffs", "need a non-empty coefficient array"});
    check_number(p, "profile.", "distance", out);
    const double q = tail_ratio(p);
    if (q < 0.0 || q >= 1.0) out.push_back({"profile.tail_q", "must lie in [0,1)"});
  } else {
    out.push_back({"profile.kind",
                   "must be one of contraction, geometric, power-law, linear-tail"});
  }
}

}  // namespace detail

// Full schema and cross-field validation, without execution. Transience
// and variance positivity are run-time assumption checks, not schema
// diagnostics.
inline std::vector<Diagnostic> validate_config(const json& doc) {
  std::vector<Diagnostic> out;
  if (!doc.is_object()) {
    out.push_back({"", "config must be a JSON object"});
    return out;
  }
  const std::string kind = doc.value("experiment", "");
  bool known = false;
  for (const auto& k : experiment_kinds()) known = known || k == kind;
  if (!known) {
    out.push_back({"experiment", "unknown experiment kind"});
    return out;
  }

  auto need = [&](const char* key, const char* why) {
    if (!doc.contains(key)) out.push_back({key, why});
  };
  auto check_positive_int = [&](const char* key, std::int64_t lo) {
    if (doc.contains(key)) {
      if (!doc[key].is_number_integer() || doc[key].get<std::int64_t>() < lo)
        out.push_back({key, "must be an integer >= " + std::to_string(lo)});
    }
  };

  if (kind == "walk-diagnostics" || kind == "green" || kind == "variance" ||
      kind == "clt-sampled") {
    need("walk", "this experiment needs a walk block");
    if (doc.contains("walk")) detail::validate_walk(doc["walk"], "walk", out);
  }
  if (kind == "variance" || kind == "clt-triangular" || kind == "clt-sampled" ||
      kind == "estimate") {
    need("model", "this experiment needs a model block");
    if (doc.contains("model")) detail::validate_model(doc["model"], out);
  }
  if (kind == "variance" || kind == "clt-triangular" || kind == "clt-sampled") {
    need("f", "this experiment needs an f block");
    if (doc.contains("f")) detail::validate_f(doc["f"], out);
  }
  if (kind == "walk-diagnostics" || kind == "clt-triangular" ||
      kind == "clt-sampled" || kind == "estimate") {
    need("n", "this experiment needs a path length n");
    check_positive_int("n", 1);
  }
  if (kind == "clt-triangular" || kind == "clt-sampled") {
    need("replicates", "this experiment needs a replicate count");
    check_positive_int("replicates", 100);
  }
  if (kind == "green") {
    if (!doc.contains("range") || !doc["range"].is_object() ||
        !doc["range"].contains("min") || !doc["range"].contains("max") ||
        !doc["range"]["min"].is_number_integer() ||
        !doc["range"]["max"].is_number_integer())
      out.push_back({"range", "green experiments need integer range.min and range.max"});
    else if (doc["range"]["min"].get<std::int64_t>() >
             doc["range"]["max"].get<std::int64_t>())
      out.push_back({"range.min", "must be <= range.max"});
    check_positive_int("truncation_k", 1);
    check_positive_int("replicates", 1);
  }
  if (kind == "dependence-profile") {
    need("profile", "this experiment needs a profile block");
    if (doc.contains("profile")) detail::validate_profile(doc["profile"], out);
    check_positive_int("n_max", 1);
    check_positive_int("k_max", 1);
  }
  if (kind == "estimate") {
    need("design", "this experiment needs a design block");
    if (doc.contains("design") && doc["design"].is_object()) {
      const auto& d = doc["design"];
      if (d.contains("kappa") &&
          (!d["kappa"].is_number() || d["kappa"].get<double>() < 1.0))
        out.push_back({"design.kappa", "rate budget must be >= 1"});
      if (!d.contains("taga") && !d.contains("law") && !d.contains("delta"))
        out.push_back({"design", "need taga, delta, or an explicit law"});
      if (d.contains("law")) detail::validate_walk(d["law"], "design.law", out, true);
      if (d.contains("delta") && (!d["delta"].is_number_integer() ||
                                  d["delta"].get<std::int64_t>() < 1))
        out.push_back({"design.delta", "sampling steps must be >= 1"});
      if (d.contains("taga") && !d.contains("kappa"))
        out.push_back({"design.kappa", "taga designs need a rate budget"});
      if (d.contains("taga") && !d.contains("rho") && doc.contains("model") &&
          doc["model"].is_object() &&
          doc["model"].value("variant", "") != "ar1")
        out.push_back(
            {"design.rho", "taga designs need a correlation (or an ar1 model)"});
    } else if (doc.contains("design")) {
      out.push_back({"design", "design block must be an object"});
    }
  }
  if (kind == "optimal-design") {
    if (!doc.contains("rho") || !doc["rho"].is_number() ||
        std::fabs(doc["rho"].get<double>()) >= 1.0)
      out.push_back({"rho", "need |rho| < 1"});
    if (!doc.contains("kappa") || !doc["kappa"].is_number() ||
        doc["kappa"].get<double>() < 1.0)
      out.push_back({"kappa", "need a rate budget >= 1"});
  }
  if (doc.contains("n_grid")) {
    if (!doc["n_grid"].is_array() || doc["n_grid"].empty()) {
      out.push_back({"n_grid", "must be a non-empty integer array"});
    } else {
      std::int64_t prev = 0;
      for (const auto& v : doc["n_grid"]) {
        if (!v.is_number_integer() || v.get<std::int64_t>() <= prev) {
          out.push_back({"n_grid", "must be strictly increasing positive integers"});
          break;
        }
        prev = v.get<std::int64_t>();
      }
    }
  }
  if (doc.contains("seeds")) {
    if (!doc["seeds"].is_object()) {
      out.push_back({"seeds", "seeds block must be an object"});
    } else {
      for (const char* key : {"master", "path", "process"})
        if (doc["seeds"].contains(key) &&
            !doc["seeds"][key].is_number_unsigned())
          out.push_back({std::string("seeds.") + key,
                         "must be an unsigned 64-bit integer"});
    }
  }
  if (doc.contains("out") && !doc["out"].is_string())
    out.push_back({"out", "must be a string"});
  if (doc.contains("threads") &&
      (!doc["threads"].is_number_unsigned() || doc["threads"].get<unsigned>() < 1))
    out.push_back({"threads", "must be a positive integer"});
  if (doc.contains("method") && !doc["method"].is_string())
    out.push_back({"method", "must be a string"});
  if (doc.contains("max_support")) check_positive_int("max_support", 3);
  if (doc.contains("path_sweep") &&
      (!doc["path_sweep"].is_number_integer() ||
       doc["path_sweep"].get<std::int64_t>() < 1))
    out.push_back({"path_sweep", "must be a positive integer"});
  if (doc.contains("epsilon") &&
      (!doc["epsilon"].is_number() || doc["epsilon"].get<double>() <= 0.0))
    out.push_back({"epsilon", "must be a positive number"});
  return out;
}

// Builders. These assume a validated document.

inline process::NoiseSpec build_noise(const json& noise) {
  const std::string law = noise.value("law", "gaussian");
  if (law == "gaussian")
    return process::NoiseSpec::gaussian(noise.value("mean", 0.0), noise.value("sd", 1.0));
  if (law == "bernoulli") return process::NoiseSpec::bernoulli(noise.value("p", 0.5));
  return process::NoiseSpec::uniform(noise.value("lo", 0.0), noise.value("hi", 1.0));
}

inline process::ProcessModel build_model(const json& model) {
  const std::string variant = model.value("variant", "");
  if (variant == "andrews") return process::ProcessModel::andrews_bernoulli();
  if (variant == "ar1")
    return process::ProcessModel::linear_ar1(model["rho"].get<double>(),
                                             build_noise(model["noise"]));
  if (variant == "causal-linear")
    return process::ProcessModel::causal_linear(
        model["coeffs"].get<std::vector<double>>(), detail::tail_ratio(model),
        build_noise(model["noise"]));
  const auto map = model.value("map", "affine") == std::string("sine")
                       ? process::ProcessModel::Map::Sine
                       : process::ProcessModel::Map::Affine;
  std::optional<double> mean, var;
  if (model.contains("marginal_mean")) mean = model["marginal_mean"].get<double>();
  if (model.contains("marginal_variance"))
    var = model["marginal_variance"].get<double>();
  return process::ProcessModel::iterated_contraction(
      map, detail::contraction_factor(model), build_noise(model["noise"]), mean, var);
}

inline walk::StepLaw build_walk(const json& blk) {
  if (blk.contains("nn"))
    return walk::StepLaw::nearest_neighbour(blk["nn"].get<double>());
  if (blk.contains("delta"))
    return walk::StepLaw::deterministic(blk["delta"].get<std::int64_t>());
  return walk::StepLaw(blk["support"].get<std::vector<std::int64_t>>(),
                       blk["probs"].get<std::vector<double>>());
}

inline process::Observable build_observable(const json& f,
                                            const process::ProcessModel& model) {
  const std::string kind = f.value("kind", "identity");
  if (kind == "identity") return process::Observable::identity(model);
  if (kind == "cosine")
    return process::Observable::cosine(model, f.value("frequency", 1.0));
  return process::Observable::hinge(model, f.value("index", 1));
}

inline dependence::DependenceProfile build_profile(const json& p) {
  const std::string kind = p.value("kind", "");
  if (kind == "contraction")
    return dependence::DependenceProfile::contraction(
        detail::contraction_factor(p), p["distance"].get<double>());
  if (kind == "geometric")
    return dependence::DependenceProfile::geometric(p["C"].get<double>(),
                                                    p["rho"].get<double>());
  if (kind == "power-law")
    return dependence::DependenceProfile::power_law(p["C"].get<double>(),
                                                    p["a"].get<double>());
  return dependence::DependenceProfile::linear_tail(
      p["coeffs"].get<std::vector<double>>(), detail::tail_ratio(p),
      p["distance"].get<double>());
}

// model_rho supplies the correlation when the design asks for the
// rate-optimal law.
inline estimation::SamplingDesign build_design(const json& d, double model_rho) {
  const double kappa = d.value("kappa", 1.0);
  if (d.contains("taga") && d["taga"].get<bool>()) {
    const double rho = d.contains("rho") ? d["rho"].get<double>() : model_rho;
    return estimation::kappa_optimal_law(rho, kappa);
  }
  if (d.contains("delta"))
    return estimation::SamplingDesign::from_law(
        walk::StepLaw::deterministic(d["delta"].get<std::int64_t>()), kappa);
  return estimation::SamplingDesign::from_law(build_walk(d["law"]), kappa);
}

inline harness::WeightRule build_weights(const json& doc) {
  if (!doc.contains("weights")) return harness::WeightRule::equal();
  const auto& w = doc["weights"];
  if (w.is_string()) {
    if (w.get<std::string>() == "single") return harness::WeightRule::single_site();
    return harness::WeightRule::equal();
  }
  return harness::WeightRule::custom_weights(w.get<std::vector<double>>());
}

inline harness::KnRule build_k_rule(const json& doc) {
  if (!doc.contains("k_rule")) return harness::KnRule::linear();
  const auto& k = doc["k_rule"];
  const std::string kind = k.value("kind", "linear");
  if (kind == "fixed") return harness::KnRule::fixed_k(k.value("k", std::int64_t{1}));
  if (kind == "sqrt") return harness::KnRule::sqrt_rule();
  return harness::KnRule::linear();
}

inline json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  return doc;
}

}  // namespace walksum::cli
