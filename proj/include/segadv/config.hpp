#pragma once

#include <cstdlib>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "segadv/analysis.hpp"
#include "segadv/bias_lab.hpp"
#include "segadv/io.hpp"
#include "segadv/trainer.hpp"

namespace segadv {

inline std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Gae: return "gae";
    case EstimatorKind::Sae: return "sae";
    case EstimatorKind::Mc: return "mc";
    case EstimatorKind::AdaptiveLambda: return "adaptive";
    case EstimatorKind::Grpo: return "grpo";
  }
  return "?";
}

inline EstimatorKind estimator_kind_from(const std::string& s) {
  if (s == "gae") return EstimatorKind::Gae;
  if (s == "sae") return EstimatorKind::Sae;
  if (s == "mc") return EstimatorKind::Mc;
  if (s == "adaptive") return EstimatorKind::AdaptiveLambda;
  if (s == "grpo") return EstimatorKind::Grpo;
  throw ValidationError("unknown estimator '" + s +
                        "' (expected gae|sae|mc|adaptive|grpo)");
}

inline std::string to_string(SegMethod m) {
  switch (m) {
    case SegMethod::Probability: return "probability";
    case SegMethod::Uniform: return "uniform";
    case SegMethod::Delimiter: return "delimiter";
  }
  return "?";
}

inline SegMethod seg_method_from(const std::string& s) {
  if (s == "probability") return SegMethod::Probability;
  if (s == "uniform") return SegMethod::Uniform;
  if (s == "delimiter") return SegMethod::Delimiter;
  throw ValidationError("unknown segmentation method '" + s +
                        "' (expected probability|uniform|delimiter)");
}

inline SignPattern sign_pattern_from(const std::string& s) {
  if (s == "worst_case") return SignPattern::WorstCase;
  if (s == "random") return SignPattern::Random;
  if (s == "alternating") return SignPattern::Alternating;
  throw ValidationError("unknown sign pattern '" + s +
                        "' (expected worst_case|random|alternating)");
}

inline OracleKind oracle_kind_from(const std::string& s) {
  if (s == "dp") return OracleKind::ExactDp;
  if (s == "mc") return OracleKind::MonteCarlo;
  throw ValidationError("unknown oracle '" + s + "' (expected dp|mc)");
}

struct EnvConfig {
  std::size_t junctions = 6;
  std::size_t corridor_len = 20;
  std::size_t choices = 4;
  std::uint64_t correct_seed = 7;

  JunctionEnv build() const {
    return JunctionEnv::make(junctions, corridor_len, choices, correct_seed);
  }
};

// Full run configuration. Every field has a default; unknown keys are
// rejected with the offending path named; a loaded config round-trips to the
// canonical serialization produced by canonical_json().
struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_dir;  // empty = fall back to SEGADV_OUT_DIR, then "."
  EnvConfig env;
  PPOConfig ppo;                  // estimator/seed filled via ppo_config()
  EstimatorSpec estimator;        // segmentation attached from the section below
  SegmentationConfig segmentation;
  BiasGridSpec bias_lab;
  StudyConfig analysis;

  // The estimator spec with the segmentation section attached when needed.
  EstimatorSpec assembled_estimator() const {
    EstimatorSpec spec = estimator;
    if (spec.kind == EstimatorKind::Sae) spec.segmentation = segmentation;
    return spec;
  }

  PPOConfig ppo_config() const {
    PPOConfig cfg = ppo;
    cfg.estimator = assembled_estimator();
    cfg.seed = seed;
    return cfg;
  }
};

namespace detail {

inline void check_keys(const json& obj, std::initializer_list<const char*> known,
                       const std::string& path) {
  require(obj.is_object(), "config section '" + path + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ValidationError("unknown config key '" + path + "." + it.key() + "'");
  }
}

template <typename T>
void get_num(const json& obj, const char* key, T& out, const std::string& path) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ValidationError("config key '" + path + "." + key + "' must be a number");
  if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) {
      throw ValidationError("config key '" + path + "." + key +
                            "' must be a non-negative integer");
    }
  }
  out = v.get<T>();
}

inline void get_str(const json& obj, const char* key, std::string& out,
                    const std::string& path) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ValidationError("config key '" + path + "." + key + "' must be a string");
  out = v.get<std::string>();
}

inline void get_bool(const json& obj, const char* key, bool& out,
                     const std::string& path) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ValidationError("config key '" + path + "." + key + "' must be a boolean");
  out = v.get<bool>();
}

template <typename T>
void get_vec(const json& obj, const char* key, std::vector<T>& out,
             const std::string& path) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array()) throw ValidationError("config key '" + path + "." + key + "' must be an array");
  out.clear();
  for (const auto& e : v) {
    if (!e.is_number()) throw ValidationError("config key '" + path + "." + key + "' must contain numbers");
    if constexpr (std::is_unsigned_v<T>) {
      if (!e.is_number_unsigned()) {
        throw ValidationError("config key '" + path + "." + key +
                              "' must contain non-negative integers");
      }
    }
    out.push_back(e.get<T>());
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const json& root) {
  using detail::check_keys;
  using detail::get_bool;
  using detail::get_num;
  using detail::get_str;
  using detail::get_vec;

  check_keys(root,
             {"seed", "out_dir", "env", "ppo", "estimator", "segmentation",
              "bias_lab", "analysis"},
             "config");
  RunConfig cfg;
  get_num(root, "seed", cfg.seed, "config");
  get_str(root, "out_dir", cfg.out_dir, "config");

  if (root.contains("env")) {
    const json& o = root.at("env");
    check_keys(o, {"junctions", "corridor_len", "choices", "correct_seed"}, "env");
    get_num(o, "junctions", cfg.env.junctions, "env");
    get_num(o, "corridor_len", cfg.env.corridor_len, "env");
    get_num(o, "choices", cfg.env.choices, "env");
    get_num(o, "correct_seed", cfg.env.correct_seed, "env");
  }

  if (root.contains("ppo")) {
    const json& o = root.at("ppo");
    check_keys(o,
               {"clip_epsilon", "actor_lr", "critic_lr", "rollouts_per_update",
                "group_size", "epochs_per_batch", "value_warmup_updates",
                "max_updates", "value_bucket_width", "value_flag_aware",
                "stop_at_success"},
               "ppo");
    get_num(o, "clip_epsilon", cfg.ppo.clip_epsilon, "ppo");
    get_num(o, "actor_lr", cfg.ppo.actor_lr, "ppo");
    get_num(o, "critic_lr", cfg.ppo.critic_lr, "ppo");
    get_num(o, "rollouts_per_update", cfg.ppo.rollouts_per_update, "ppo");
    get_num(o, "group_size", cfg.ppo.group_size, "ppo");
    get_num(o, "epochs_per_batch", cfg.ppo.epochs_per_batch, "ppo");
    get_num(o, "value_warmup_updates", cfg.ppo.value_warmup_updates, "ppo");
    get_num(o, "max_updates", cfg.ppo.max_updates, "ppo");
    get_num(o, "value_bucket_width", cfg.ppo.value_bucket_width, "ppo");
    get_bool(o, "value_flag_aware", cfg.ppo.value_flag_aware, "ppo");
    get_num(o, "stop_at_success", cfg.ppo.stop_at_success, "ppo");
  }

  if (root.contains("estimator")) {
    const json& o = root.at("estimator");
    check_keys(o, {"kind", "lambda", "adaptive_coeff", "grpo_epsilon"}, "estimator");
    std::string kind = to_string(cfg.estimator.kind);
    get_str(o, "kind", kind, "estimator");
    cfg.estimator.kind = estimator_kind_from(kind);
    get_num(o, "lambda", cfg.estimator.lambda, "estimator");
    get_num(o, "adaptive_coeff", cfg.estimator.adaptive_coeff, "estimator");
    get_num(o, "grpo_epsilon", cfg.estimator.grpo_epsilon, "estimator");
  }

  if (root.contains("segmentation")) {
    const json& o = root.at("segmentation");
    check_keys(o, {"method", "p", "M", "delimiters"}, "segmentation");
    std::string method = to_string(cfg.segmentation.method);
    get_str(o, "method", method, "segmentation");
    cfg.segmentation.method = seg_method_from(method);
    get_num(o, "p", cfg.segmentation.p, "segmentation");
    get_num(o, "M", cfg.segmentation.uniform_len, "segmentation");
    get_vec(o, "delimiters", cfg.segmentation.delimiters, "segmentation");
  }

  if (root.contains("bias_lab")) {
    const json& o = root.at("bias_lab");
    check_keys(o, {"T", "M", "lambda", "alpha", "beta", "patterns", "seeds"},
               "bias_lab");
    get_vec(o, "T", cfg.bias_lab.T_values, "bias_lab");
    get_vec(o, "M", cfg.bias_lab.M_values, "bias_lab");
    get_vec(o, "lambda", cfg.bias_lab.lambda_values, "bias_lab");
    get_vec(o, "alpha", cfg.bias_lab.alpha_values, "bias_lab");
    get_vec(o, "beta", cfg.bias_lab.beta_values, "bias_lab");
    if (o.contains("patterns")) {
      const json& v = o.at("patterns");
      if (!v.is_array()) throw ValidationError("config key 'bias_lab.patterns' must be an array");
      cfg.bias_lab.patterns.clear();
      for (const auto& e : v) {
        if (!e.is_string()) throw ValidationError("config key 'bias_lab.patterns' must contain strings");
        cfg.bias_lab.patterns.push_back(sign_pattern_from(e.get<std::string>()));
      }
    }
    get_num(o, "seeds", cfg.bias_lab.seeds, "bias_lab");
  }

  if (root.contains("analysis")) {
    const json& o = root.at("analysis");
    check_keys(o,
               {"n_trajectories", "group_size", "segments_per_trajectory",
                "allow_overlap", "oracle", "mc_rollouts", "gae_lambdas", "sae_ps",
                "sae_lambda", "adaptive_coeff", "grpo_epsilon",
                "policy_q_min", "policy_q_max", "value_bucket_width", "value_flag_aware",
                "warmup_rollouts", "warmup_passes", "critic_lr", "seeds"},
               "analysis");
    get_num(o, "n_trajectories", cfg.analysis.n_trajectories, "analysis");
    get_num(o, "group_size", cfg.analysis.group_size, "analysis");
    get_num(o, "segments_per_trajectory", cfg.analysis.sampler.segments_per_trajectory,
            "analysis");
    get_bool(o, "allow_overlap", cfg.analysis.sampler.allow_overlap, "analysis");
    std::string oracle = to_string(cfg.analysis.oracle);
    get_str(o, "oracle", oracle, "analysis");
    cfg.analysis.oracle = oracle_kind_from(oracle);
    get_num(o, "mc_rollouts", cfg.analysis.mc_rollouts, "analysis");
    get_vec(o, "gae_lambdas", cfg.analysis.gae_lambdas, "analysis");
    get_vec(o, "sae_ps", cfg.analysis.sae_ps, "analysis");
    get_num(o, "sae_lambda", cfg.analysis.sae_lambda, "analysis");
    get_num(o, "adaptive_coeff", cfg.analysis.adaptive_coeff, "analysis");
    get_num(o, "grpo_epsilon", cfg.analysis.grpo_epsilon, "analysis");
    get_num(o, "policy_q_min", cfg.analysis.policy_q_min, "analysis");
    get_num(o, "policy_q_max", cfg.analysis.policy_q_max, "analysis");
    get_num(o, "value_bucket_width", cfg.analysis.value_bucket_width, "analysis");
    get_bool(o, "value_flag_aware", cfg.analysis.value_flag_aware, "analysis");
    get_num(o, "warmup_rollouts", cfg.analysis.warmup_rollouts, "analysis");
    get_num(o, "warmup_passes", cfg.analysis.warmup_passes, "analysis");
    get_num(o, "critic_lr", cfg.analysis.critic_lr, "analysis");
    get_num(o, "seeds", cfg.analysis.seeds, "analysis");
  }

  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return parse_run_config(root);
}

// Canonical serialization: fixed key order, every field emitted.
inline nlohmann::ordered_json canonical_json(const RunConfig& cfg) {
  nlohmann::ordered_json root;
  root["seed"] = cfg.seed;
  root["out_dir"] = cfg.out_dir;
  root["env"] = {{"junctions", cfg.env.junctions},
                 {"corridor_len", cfg.env.corridor_len},
                 {"choices", cfg.env.choices},
                 {"correct_seed", cfg.env.correct_seed}};
  root["ppo"] = {{"clip_epsilon", cfg.ppo.clip_epsilon},
                 {"actor_lr", cfg.ppo.actor_lr},
                 {"critic_lr", cfg.ppo.critic_lr},
                 {"rollouts_per_update", cfg.ppo.rollouts_per_update},
                 {"group_size", cfg.ppo.group_size},
                 {"epochs_per_batch", cfg.ppo.epochs_per_batch},
                 {"value_warmup_updates", cfg.ppo.value_warmup_updates},
                 {"max_updates", cfg.ppo.max_updates},
                 {"value_bucket_width", cfg.ppo.value_bucket_width},
                 {"value_flag_aware", cfg.ppo.value_flag_aware},
                 {"stop_at_success", cfg.ppo.stop_at_success}};
  root["estimator"] = {{"kind", to_string(cfg.estimator.kind)},
                       {"lambda", cfg.estimator.lambda},
                       {"adaptive_coeff", cfg.estimator.adaptive_coeff},
                       {"grpo_epsilon", cfg.estimator.grpo_epsilon}};
  root["segmentation"] = {{"method", to_string(cfg.segmentation.method)},
                          {"p", cfg.segmentation.p},
                          {"M", cfg.segmentation.uniform_len},
                          {"delimiters", cfg.segmentation.delimiters}};
  std::vector<std::string> patterns;
  for (SignPattern p : cfg.bias_lab.patterns) patterns.push_back(to_string(p));
  root["bias_lab"] = {{"T", cfg.bias_lab.T_values},
                      {"M", cfg.bias_lab.M_values},
                      {"lambda", cfg.bias_lab.lambda_values},
                      {"alpha", cfg.bias_lab.alpha_values},
                      {"beta", cfg.bias_lab.beta_values},
                      {"patterns", patterns},
                      {"seeds", cfg.bias_lab.seeds}};
  root["analysis"] = {{"n_trajectories", cfg.analysis.n_trajectories},
                      {"group_size", cfg.analysis.group_size},
                      {"segments_per_trajectory",
                       cfg.analysis.sampler.segments_per_trajectory},
                      {"allow_overlap", cfg.analysis.sampler.allow_overlap},
                      {"oracle", to_string(cfg.analysis.oracle)},
                      {"mc_rollouts", cfg.analysis.mc_rollouts},
                      {"gae_lambdas", cfg.analysis.gae_lambdas},
                      {"sae_ps", cfg.analysis.sae_ps},
                      {"sae_lambda", cfg.analysis.sae_lambda},
                      {"adaptive_coeff", cfg.analysis.adaptive_coeff},
                      {"grpo_epsilon", cfg.analysis.grpo_epsilon},
                      {"policy_q_min", cfg.analysis.policy_q_min},
                      {"policy_q_max", cfg.analysis.policy_q_max},
                      {"value_bucket_width", cfg.analysis.value_bucket_width},
                      {"value_flag_aware", cfg.analysis.value_flag_aware},
                      {"warmup_rollouts", cfg.analysis.warmup_rollouts},
                      {"warmup_passes", cfg.analysis.warmup_passes},
                      {"critic_lr", cfg.analysis.critic_lr},
                      {"seeds", cfg.analysis.seeds}};
  return root;
}

// out_dir precedence: explicit flag > config value > SEGADV_OUT_DIR > ".".
inline std::string resolve_out_dir(const std::string& flag_value,
                                   const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  if (const char* env = std::getenv("SEGADV_OUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return ".";
}

}  // namespace segadv
