// segadv: advantage-estimation experiment harness for sparse-terminal-reward
// sequence RL. Subcommands: estimate, segment, bias-lab, train, correlate.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "segadv/segadv.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

std::string resolve_path(const std::string& out_dir, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(out_dir) / p).string();
}

void ensure_parent_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir_flag;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* cmd, bool with_seed = true) {
    cmd->add_option("--config", config_path, "JSON run configuration file");
    cmd->add_option("--out-dir", out_dir_flag,
                    "Output directory (overrides config out_dir and SEGADV_OUT_DIR)");
    cmd->add_option("--threads", threads, "Worker threads (1 = determinism reference)")
        ->check(CLI::PositiveNumber);
    if (with_seed) {
      seed_opt = cmd->add_option("--seed", seed, "Root seed (overrides config)");
    }
  }

  segadv::RunConfig load() const {
    if (!config_path.empty()) return segadv::load_run_config(config_path);
    return segadv::RunConfig{};
  }

  std::uint64_t resolve_seed(const segadv::RunConfig& cfg) const {
    return (seed_opt != nullptr && seed_opt->count() > 0) ? seed : cfg.seed;
  }

  std::string resolve_dir(const segadv::RunConfig& cfg) const {
    return segadv::resolve_out_dir(out_dir_flag, cfg.out_dir);
  }
};

template <typename T>
void override_if_set(const CLI::Option* opt, T& target, const T& value) {
  if (opt != nullptr && opt->count() > 0) target = value;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  CommonFlags common;
  std::string in_path;
  std::string out_path;
  std::string estimator;
  double lambda = 0.95;
  std::string seg_method;
  double p = 0.2;
  std::size_t M = 1;
  std::vector<std::int64_t> delimiters;
  double adaptive_coeff = 0.2;
  double grpo_epsilon = 1e-8;
  std::size_t group_size = 8;
  CLI::Option *estimator_opt = nullptr, *lambda_opt = nullptr, *seg_opt = nullptr,
              *p_opt = nullptr, *m_opt = nullptr, *delim_opt = nullptr,
              *coeff_opt = nullptr, *eps_opt = nullptr, *group_opt = nullptr;
};

segadv::SegmentationConfig merge_segmentation(const segadv::RunConfig& cfg,
                                              const CLI::Option* seg_opt,
                                              const std::string& seg_method,
                                              const CLI::Option* p_opt, double p,
                                              const CLI::Option* m_opt, std::size_t M,
                                              const CLI::Option* delim_opt,
                                              const std::vector<std::int64_t>& delims) {
  segadv::SegmentationConfig seg = cfg.segmentation;
  if (seg_opt != nullptr && seg_opt->count() > 0) {
    seg.method = segadv::seg_method_from(seg_method);
  }
  override_if_set(p_opt, seg.p, p);
  override_if_set(m_opt, seg.uniform_len, M);
  override_if_set(delim_opt, seg.delimiters, delims);
  return seg;
}

int run_estimate(const EstimateArgs& args) {
  using namespace segadv;
  const RunConfig cfg = args.common.load();
  const std::string out_dir = args.common.resolve_dir(cfg);

  EstimatorSpec spec = cfg.estimator;
  if (args.estimator_opt->count() > 0) spec.kind = estimator_kind_from(args.estimator);
  override_if_set(args.lambda_opt, spec.lambda, args.lambda);
  override_if_set(args.coeff_opt, spec.adaptive_coeff, args.adaptive_coeff);
  override_if_set(args.eps_opt, spec.grpo_epsilon, args.grpo_epsilon);
  if (spec.kind == EstimatorKind::Sae) {
    spec.segmentation =
        merge_segmentation(cfg, args.seg_opt, args.seg_method, args.p_opt, args.p,
                           args.m_opt, args.M, args.delim_opt, args.delimiters);
  }
  std::size_t group_size = cfg.ppo.group_size;
  override_if_set(args.group_opt, group_size, args.group_size);
  spec.validate();

  const auto records = read_trajectories_jsonl(args.in_path);
  require(!records.empty(), "no trajectory records in " + args.in_path);

  std::vector<AdvantageSeries> advantages(records.size());
  if (spec.kind == EstimatorKind::Grpo) {
    require(group_size >= 2, "GRPO needs --group-size >= 2");
    require(records.size() % group_size == 0,
            "record count must be a multiple of --group-size for GRPO");
    for (std::size_t g = 0; g < records.size() / group_size; ++g) {
      GroupContext ctx;
      ctx.epsilon = spec.grpo_epsilon;
      for (std::size_t i = 0; i < group_size; ++i) {
        ctx.rewards.push_back(records[g * group_size + i].traj.terminal_reward);
      }
      for (std::size_t i = 0; i < group_size; ++i) {
        ctx.index = i;
        const std::size_t r = g * group_size + i;
        advantages[r] = estimate(records[r].traj, nullptr, spec, &ctx);
      }
    }
  } else {
    std::size_t degenerate_records = 0;
    for (std::size_t r = 0; r < records.size(); ++r) {
      require(records[r].values.has_value(),
              "record " + std::to_string(r + 1) + " has no values; estimator '" +
                  to_string(spec.kind) + "' needs them");
      if (spec.kind == EstimatorKind::AdaptiveLambda) {
        bool degenerate = false;
        adaptive_lambda(records[r].traj.length(), spec.adaptive_coeff, &degenerate);
        if (degenerate) ++degenerate_records;
      }
      advantages[r] = estimate(records[r].traj, &*records[r].values, spec);
    }
    if (degenerate_records > 0) {
      std::cerr << "warning: adaptive lambda clamped to 0 for " << degenerate_records
                << " record(s) with coeff * length <= 1\n";
    }
  }

  const std::string out_path = resolve_path(out_dir, args.out_path);
  ensure_parent_dir(out_path);
  std::vector<std::string> lines;
  for (std::size_t r = 0; r < records.size(); ++r) {
    json obj = trajectory_record_to_json(records[r]);
    obj["advantages"] = advantages[r].advantages;
    lines.push_back(obj.dump());
  }
  write_lines(out_path, lines);
  std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// segment

struct SegmentArgs {
  CommonFlags common;
  std::string in_path;
  std::string out_path;
  std::string summary_path;
  std::string seg_method;
  double p = 0.2;
  std::size_t M = 1;
  std::vector<std::int64_t> delimiters;
  std::vector<double> p_sweep;
  CLI::Option *seg_opt = nullptr, *p_opt = nullptr, *m_opt = nullptr,
              *delim_opt = nullptr;
};

int run_segment(const SegmentArgs& args) {
  using namespace segadv;
  const RunConfig cfg = args.common.load();
  const std::string out_dir = args.common.resolve_dir(cfg);
  const SegmentationConfig seg =
      merge_segmentation(cfg, args.seg_opt, args.seg_method, args.p_opt, args.p,
                         args.m_opt, args.M, args.delim_opt, args.delimiters);
  seg.validate();

  const auto records = read_trajectories_jsonl(args.in_path);
  require(!records.empty(), "no trajectory records in " + args.in_path);

  std::vector<BoundarySet> primary;
  primary.reserve(records.size());
  for (const auto& rec : records) primary.push_back(segment(rec.traj, seg));

  if (!args.out_path.empty()) {
    const std::string out_path = resolve_path(out_dir, args.out_path);
    ensure_parent_dir(out_path);
    std::vector<std::string> lines;
    for (std::size_t r = 0; r < records.size(); ++r) {
      json obj = trajectory_record_to_json(records[r]);
      obj["boundaries"] = primary[r].positions;
      lines.push_back(obj.dump());
    }
    write_lines(out_path, lines);
  }

  // Summary rows: (method, param, mean segment length, boundary-count
  // histogram flattened to one row per count).
  const std::string summary_path = resolve_path(out_dir, args.summary_path);
  ensure_parent_dir(summary_path);
  CsvWriter csv(summary_path, {"method", "param", "n_trajectories",
                               "mean_segment_length", "boundary_count", "count"});
  auto emit = [&](const SegmentationConfig& c, double param) {
    std::vector<BoundarySet> sets;
    sets.reserve(records.size());
    for (const auto& rec : records) sets.push_back(segment(rec.traj, c));
    const double mean_len = avg_segment_length(sets);
    std::map<std::size_t, std::size_t> histogram;
    for (const auto& b : sets) ++histogram[b.count()];
    for (const auto& [count, freq] : histogram) {
      csv.row({to_string(c.method), CsvWriter::cell(param),
               CsvWriter::cell(std::uint64_t{records.size()}),
               CsvWriter::cell(mean_len), CsvWriter::cell(std::uint64_t{count}),
               CsvWriter::cell(std::uint64_t{freq})});
    }
  };

  double primary_param = 0.0;
  switch (seg.method) {
    case SegMethod::Probability: primary_param = seg.p; break;
    case SegMethod::Uniform: primary_param = static_cast<double>(seg.uniform_len); break;
    case SegMethod::Delimiter:
      primary_param = static_cast<double>(seg.delimiters.size());
      break;
  }
  emit(seg, primary_param);
  for (double sweep_p : args.p_sweep) {
    if (seg.method == SegMethod::Probability && sweep_p == seg.p) continue;
    SegmentationConfig c = seg;
    c.method = SegMethod::Probability;
    c.p = sweep_p;
    emit(c, sweep_p);
  }
  std::cout << "wrote segmentation summary to " << summary_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bias-lab

struct BiasLabArgs {
  CommonFlags common;
  std::string out_path = "bias_lab.csv";
  std::string per_t_path;
  std::vector<std::size_t> T_values, M_values;
  std::vector<double> lambda_values, alpha_values, beta_values;
  std::vector<std::string> patterns;
  std::size_t seeds = 200;
  CLI::Option *T_opt = nullptr, *M_opt = nullptr, *lambda_opt = nullptr,
              *alpha_opt = nullptr, *beta_opt = nullptr, *patterns_opt = nullptr,
              *seeds_opt = nullptr;
};

int run_bias_lab(const BiasLabArgs& args) {
  using namespace segadv;
  const RunConfig cfg = args.common.load();
  const std::string out_dir = args.common.resolve_dir(cfg);
  const std::uint64_t seed = args.common.resolve_seed(cfg);

  BiasGridSpec spec = cfg.bias_lab;
  override_if_set(args.T_opt, spec.T_values, args.T_values);
  override_if_set(args.M_opt, spec.M_values, args.M_values);
  override_if_set(args.lambda_opt, spec.lambda_values, args.lambda_values);
  override_if_set(args.alpha_opt, spec.alpha_values, args.alpha_values);
  override_if_set(args.beta_opt, spec.beta_values, args.beta_values);
  if (args.patterns_opt->count() > 0) {
    spec.patterns.clear();
    for (const auto& s : args.patterns) spec.patterns.push_back(sign_pattern_from(s));
  }
  override_if_set(args.seeds_opt, spec.seeds, args.seeds);

  const auto rows = run_bias_grid(spec, seed, args.common.threads);

  const std::string out_path = resolve_path(out_dir, args.out_path);
  ensure_parent_dir(out_path);
  CsvWriter csv(out_path, {"T", "M", "lambda", "alpha", "beta", "pattern", "seed",
                           "empirical_bias", "bound", "slack"});
  for (const auto& row : rows) {
    csv.row({CsvWriter::cell(std::uint64_t{row.report.T}),
             CsvWriter::cell(std::uint64_t{row.report.M}),
             CsvWriter::cell(row.report.lambda), CsvWriter::cell(row.report.alpha),
             CsvWriter::cell(row.report.beta), to_string(row.pattern),
             CsvWriter::cell(row.seed), CsvWriter::cell(row.report.empirical_bias),
             CsvWriter::cell(row.report.bound), CsvWriter::cell(row.slack)});
  }

  if (!args.per_t_path.empty()) {
    const std::string per_t_path = resolve_path(out_dir, args.per_t_path);
    ensure_parent_dir(per_t_path);
    CsvWriter surface(per_t_path, {"T", "M", "lambda", "alpha", "beta", "pattern",
                                   "seed", "t", "bias_t"});
    for (const auto& row : rows) {
      ValueErrorModel model{row.report.alpha, row.report.beta, row.pattern,
                            derive_seed(seed, row.seed)};
      const auto bias = per_step_bias(row.report.T, row.report.M, row.report.lambda,
                                      model, default_true_values(row.report.T));
      for (std::size_t t = 0; t < bias.size(); ++t) {
        surface.row({CsvWriter::cell(std::uint64_t{row.report.T}),
                     CsvWriter::cell(std::uint64_t{row.report.M}),
                     CsvWriter::cell(row.report.lambda),
                     CsvWriter::cell(row.report.alpha),
                     CsvWriter::cell(row.report.beta), to_string(row.pattern),
                     CsvWriter::cell(row.seed), CsvWriter::cell(std::uint64_t{t}),
                     CsvWriter::cell(bias[t])});
      }
    }
  }
  std::cout << "wrote " << rows.size() << " grid rows to " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  CommonFlags common;
  std::string out_path = "metrics.csv";
  std::string result_path;
  std::string rollouts_path;
  std::size_t rollouts_n = 64;
  std::string estimator;
  double lambda = 0.95;
  bool timing = false;
  CLI::Option *estimator_opt = nullptr, *lambda_opt = nullptr;
};

int run_train(const TrainArgs& args) {
  using namespace segadv;
  require(!args.common.config_path.empty(), "train requires --config");
  const RunConfig cfg = args.common.load();
  const std::string out_dir = args.common.resolve_dir(cfg);

  PPOConfig ppo = cfg.ppo_config();
  ppo.seed = args.common.resolve_seed(cfg);
  if (args.estimator_opt->count() > 0) {
    ppo.estimator.kind = estimator_kind_from(args.estimator);
    if (ppo.estimator.kind == EstimatorKind::Sae && !ppo.estimator.segmentation) {
      ppo.estimator.segmentation = cfg.segmentation;
    }
  }
  override_if_set(args.lambda_opt, ppo.estimator.lambda, args.lambda);
  const JunctionEnv env = cfg.env.build();

  ValueHead value_head(env.horizon(), ppo.value_bucket_width, ppo.value_flag_aware);
  const TrainResult result =
      train(env, ppo, args.common.threads, args.timing, &value_head);

  const std::string out_path = resolve_path(out_dir, args.out_path);
  ensure_parent_dir(out_path);
  CsvWriter csv(out_path, {"update", "success_rate", "mean_advantage", "value_mse",
                           "clip_fraction", "entropy", "wall_clock_s"});
  for (const auto& row : result.metrics.rows) {
    csv.row({CsvWriter::cell(std::uint64_t{row.update}),
             CsvWriter::cell(row.success_rate), CsvWriter::cell(row.mean_advantage),
             CsvWriter::cell(row.value_mse), CsvWriter::cell(row.clip_fraction),
             CsvWriter::cell(row.entropy), CsvWriter::cell(row.wall_clock_s)});
  }

  if (!args.result_path.empty()) {
    const std::string result_path = resolve_path(out_dir, args.result_path);
    ensure_parent_dir(result_path);
    nlohmann::ordered_json summary;
    summary["estimator"] = to_string(ppo.estimator.kind);
    summary["seed"] = ppo.seed;
    summary["updates_run"] = result.metrics.rows.size();
    summary["final_success_rate"] = result.metrics.rows.back().success_rate;
    summary["stop_at_success"] = ppo.stop_at_success;
    if (result.threshold_update != kNeverReached) {
      summary["threshold_update"] = result.threshold_update;
      summary["post_warmup_updates_to_threshold"] =
          result.threshold_update - ppo.value_warmup_updates + 1;
    } else {
      summary["threshold_update"] = nullptr;
    }
    std::ofstream out(result_path);
    out << summary.dump(2) << "\n";
  }

  // Rollouts from the trained policy in the trajectory JSONL format, with
  // the value head's predictions attached so the file feeds estimate as-is.
  if (!args.rollouts_path.empty()) {
    const std::string rollouts_path = resolve_path(out_dir, args.rollouts_path);
    ensure_parent_dir(rollouts_path);
    const Batch batch = collect_batch(env, result.policy, args.rollouts_n, 1,
                                      derive_seed(ppo.seed, 0xe897));
    std::vector<std::string> lines;
    for (const Rollout& r : batch.rollouts) {
      TrajectoryRecord rec;
      rec.traj = r.traj;
      rec.values = value_head.values_for(r);
      lines.push_back(trajectory_record_to_json(rec).dump());
    }
    write_lines(rollouts_path, lines);
  }

  std::cout << "trained " << result.metrics.rows.size() << " updates; final success "
            << format_double(result.metrics.rows.back().success_rate) << "; metrics at "
            << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// correlate

struct CorrelateArgs {
  CommonFlags common;
  std::string out_path = "correlations.csv";
  std::string summary_path = "correlation_summary.csv";
  std::vector<double> lambda_sweep;
  std::vector<double> p_sweep;
  std::string oracle;
  std::size_t mc_rollouts = 32;
  std::size_t seeds = 20;
  CLI::Option *lambda_opt = nullptr, *p_opt = nullptr, *oracle_opt = nullptr,
              *mc_opt = nullptr, *seeds_opt = nullptr;
};

int run_correlate(const CorrelateArgs& args) {
  using namespace segadv;
  const RunConfig cfg = args.common.load();
  const std::string out_dir = args.common.resolve_dir(cfg);
  const std::uint64_t seed = args.common.resolve_seed(cfg);

  StudyConfig study = cfg.analysis;
  override_if_set(args.lambda_opt, study.gae_lambdas, args.lambda_sweep);
  override_if_set(args.p_opt, study.sae_ps, args.p_sweep);
  if (args.oracle_opt->count() > 0) study.oracle = oracle_kind_from(args.oracle);
  override_if_set(args.mc_opt, study.mc_rollouts, args.mc_rollouts);
  override_if_set(args.seeds_opt, study.seeds, args.seeds);

  const JunctionEnv env = cfg.env.build();
  const auto reports = correlation_study(env, study, seed, args.common.threads);

  const std::string out_path = resolve_path(out_dir, args.out_path);
  ensure_parent_dir(out_path);
  CsvWriter csv(out_path, {"estimator", "param", "seed", "pearson_r", "n_points"});
  for (const auto& r : reports) {
    csv.row({r.estimator, CsvWriter::cell(r.param), CsvWriter::cell(r.seed),
             CsvWriter::cell(r.pearson_r),
             CsvWriter::cell(std::uint64_t{r.n_points})});
  }

  const std::string summary_path = resolve_path(out_dir, args.summary_path);
  ensure_parent_dir(summary_path);
  CsvWriter summary(summary_path, {"estimator", "param", "mean_r", "se_r", "n_seeds"});
  for (const auto& row : summarize_study(reports)) {
    summary.row({row.estimator, CsvWriter::cell(row.param),
                 CsvWriter::cell(row.mean_r), CsvWriter::cell(row.se_r),
                 CsvWriter::cell(std::uint64_t{row.n_seeds})});
  }
  std::cout << "wrote " << reports.size() << " correlation rows to " << out_path
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segmental advantage estimation experiment harness"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  EstimateArgs est;
  CLI::App* estimate_cmd =
      app.add_subcommand("estimate", "Compute advantages for trajectory JSONL");
  est.common.attach(estimate_cmd, false);
  estimate_cmd->add_option("--in", est.in_path, "Input trajectory JSONL")->required();
  estimate_cmd->add_option("--out", est.out_path, "Output JSONL with advantages")
      ->required();
  est.estimator_opt = estimate_cmd->add_option(
      "--estimator", est.estimator, "Estimator: gae|sae|mc|adaptive|grpo");
  est.lambda_opt = estimate_cmd->add_option("--lambda", est.lambda, "Decay parameter");
  est.seg_opt = estimate_cmd->add_option("--seg-method", est.seg_method,
                                         "Segmentation: probability|uniform|delimiter");
  est.p_opt = estimate_cmd->add_option("--p", est.p, "Probability threshold");
  est.m_opt = estimate_cmd->add_option("--M", est.M, "Uniform segment length");
  est.delim_opt = estimate_cmd->add_option("--delimiters", est.delimiters,
                                           "Delimiter token ids")
                      ->delimiter(',');
  est.coeff_opt = estimate_cmd->add_option("--adaptive-coeff", est.adaptive_coeff,
                                           "Adaptive-lambda coefficient");
  est.eps_opt = estimate_cmd->add_option("--grpo-epsilon", est.grpo_epsilon,
                                         "GRPO normalization epsilon");
  est.group_opt =
      estimate_cmd->add_option("--group-size", est.group_size,
                               "Consecutive records per GRPO group");

  SegmentArgs seg;
  CLI::App* segment_cmd =
      app.add_subcommand("segment", "Segment trajectories and summarize");
  seg.common.attach(segment_cmd, false);
  segment_cmd->add_option("--in", seg.in_path, "Input trajectory JSONL")->required();
  segment_cmd->add_option("--out", seg.out_path, "Output JSONL with boundaries");
  segment_cmd->add_option("--summary", seg.summary_path, "Summary CSV path")
      ->required();
  seg.seg_opt = segment_cmd->add_option("--seg-method", seg.seg_method,
                                        "Segmentation: probability|uniform|delimiter");
  seg.p_opt = segment_cmd->add_option("--p", seg.p, "Probability threshold");
  seg.m_opt = segment_cmd->add_option("--M", seg.M, "Uniform segment length");
  seg.delim_opt =
      segment_cmd->add_option("--delimiters", seg.delimiters, "Delimiter token ids")
          ->delimiter(',');
  segment_cmd->add_option("--p-sweep", seg.p_sweep,
                          "Extra probability thresholds for the summary sweep")
      ->delimiter(',');

  BiasLabArgs lab;
  CLI::App* bias_cmd =
      app.add_subcommand("bias-lab", "Bias-bound grid for uniform segmentation");
  lab.common.attach(bias_cmd);
  bias_cmd->add_option("--out", lab.out_path, "Output CSV");
  bias_cmd->add_option("--per-t", lab.per_t_path, "Supplementary per-step bias CSV");
  lab.T_opt = bias_cmd->add_option("--T", lab.T_values, "Horizons")->delimiter(',');
  lab.M_opt = bias_cmd->add_option("--M", lab.M_values, "Segment lengths (divide T)")
                  ->delimiter(',');
  lab.lambda_opt =
      bias_cmd->add_option("--lambda", lab.lambda_values, "Decay parameters")
          ->delimiter(',');
  lab.alpha_opt = bias_cmd->add_option("--alpha", lab.alpha_values, "Envelope scales")
                      ->delimiter(',');
  lab.beta_opt = bias_cmd->add_option("--beta", lab.beta_values, "Envelope rates")
                     ->delimiter(',');
  lab.patterns_opt = bias_cmd->add_option(
      "--patterns", lab.patterns, "Sign patterns: worst_case|random|alternating")
                         ->delimiter(',');
  lab.seeds_opt = bias_cmd->add_option("--seeds", lab.seeds, "Seeds per cell");

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Desk-scale PPO training");
  tr.common.attach(train_cmd);
  train_cmd->add_option("--out", tr.out_path, "Metrics CSV path");
  train_cmd->add_option("--result-out", tr.result_path,
                        "Optional JSON run summary (steps to threshold)");
  train_cmd->add_option("--rollouts-out", tr.rollouts_path,
                        "Export rollouts from the trained policy as trajectory JSONL");
  train_cmd->add_option("--rollouts-n", tr.rollouts_n, "Rollouts to export");
  tr.estimator_opt = train_cmd->add_option(
      "--estimator", tr.estimator, "Override the configured estimator kind");
  tr.lambda_opt =
      train_cmd->add_option("--lambda", tr.lambda, "Override the decay parameter");
  train_cmd->add_flag("--timing", tr.timing,
                      "Record wall-clock seconds (off keeps output byte-reproducible)");

  CorrelateArgs corr;
  CLI::App* corr_cmd =
      app.add_subcommand("correlate", "Ground-truth-advantage correlation study");
  corr.common.attach(corr_cmd);
  corr_cmd->add_option("--out", corr.out_path, "Per-seed CSV path");
  corr_cmd->add_option("--summary-out", corr.summary_path, "Summary CSV path");
  corr.lambda_opt = corr_cmd->add_option("--lambda-sweep", corr.lambda_sweep,
                                         "GAE lambda sweep values")
                        ->delimiter(',');
  corr.p_opt =
      corr_cmd->add_option("--p-sweep", corr.p_sweep, "SAE threshold sweep values")
          ->delimiter(',');
  corr.oracle_opt = corr_cmd->add_option("--oracle", corr.oracle, "Oracle: dp|mc");
  corr.mc_opt = corr_cmd->add_option("--mc-rollouts", corr.mc_rollouts,
                                     "Rollouts per MC value estimate");
  corr.seeds_opt = corr_cmd->add_option("--seeds", corr.seeds, "Number of study seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (estimate_cmd->parsed()) return run_estimate(est);
    if (segment_cmd->parsed()) return run_segment(seg);
    if (bias_cmd->parsed()) return run_bias_lab(lab);
    if (train_cmd->parsed()) return run_train(tr);
    if (corr_cmd->parsed()) return run_correlate(corr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
