#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "segadv/config.hpp"
#include "segadv/io.hpp"

using namespace segadv;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("segadv_test_" + name);
}

}  // namespace

TEST_CASE("trajectory record parsing validates shape and values", "[config-io]") {
  const json good = json::parse(
      R"({"tokens":[1,2,3],"gen_probs":[0.9,0.1,0.8],"reward":1})");
  const TrajectoryRecord rec = parse_trajectory_record(good, "test");
  CHECK(rec.traj.length() == 3);
  CHECK(rec.traj.terminal_reward == 1.0);
  CHECK_FALSE(rec.values.has_value());

  const json with_values = json::parse(
      R"({"tokens":[1],"gen_probs":[0.5],"reward":0,"values":[0.3,0.0]})");
  const TrajectoryRecord rec2 = parse_trajectory_record(with_values, "test");
  REQUIRE(rec2.values.has_value());
  CHECK(rec2.values->values == std::vector<double>{0.3, 0.0});

  CHECK_THROWS_AS(parse_trajectory_record(
                      json::parse(R"({"tokens":[1],"gen_probs":[0.5],"reward":0.5})"),
                      "test"),
                  ValidationError);
  CHECK_THROWS_AS(parse_trajectory_record(
                      json::parse(R"({"tokens":[1],"gen_probs":[0.5]})"), "test"),
                  ValidationError);
  CHECK_THROWS_AS(
      parse_trajectory_record(
          json::parse(R"({"tokens":[1],"gen_probs":[0.5],"reward":0,"oops":1})"),
          "test"),
      ValidationError);
  // Unpinned values are rejected at ingestion.
  CHECK_THROWS_AS(parse_trajectory_record(
                      json::parse(
                          R"({"tokens":[1],"gen_probs":[0.5],"reward":1,"values":[0.3,0.7]})"),
                      "test"),
                  ValidationError);
}

TEST_CASE("trajectory JSONL round-trips through files", "[config-io]") {
  const auto path = temp_file("roundtrip.jsonl");
  {
    std::ofstream out(path);
    out << R"({"tokens":[1,2],"gen_probs":[0.9,0.1],"reward":1,"values":[0.2,0.5,1.0]})"
        << "\n";
    out << R"({"tokens":[3],"gen_probs":[0.4],"reward":0})" << "\n";
  }
  const auto records = read_trajectories_jsonl(path.string());
  REQUIRE(records.size() == 2);
  CHECK(records[0].traj.tokens == std::vector<std::int64_t>{1, 2});
  CHECK(records[1].traj.terminal_reward == 0.0);

  const json back = trajectory_record_to_json(records[0]);
  CHECK(back.at("tokens") == json::parse("[1,2]"));
  CHECK(back.at("values").size() == 3);
  std::filesystem::remove(path);
}

TEST_CASE("run config parses sections and rejects unknown keys by path",
          "[config-io]") {
  const json root = json::parse(R"({
    "seed": 7,
    "env": {"junctions": 3, "corridor_len": 5, "choices": 4, "correct_seed": 2},
    "ppo": {"actor_lr": 0.5, "max_updates": 77},
    "estimator": {"kind": "sae", "lambda": 0.9},
    "segmentation": {"method": "probability", "p": 0.5}
  })");
  const RunConfig cfg = parse_run_config(root);
  CHECK(cfg.seed == 7);
  CHECK(cfg.env.junctions == 3);
  CHECK(cfg.ppo.actor_lr == 0.5);
  CHECK(cfg.ppo.max_updates == 77);
  CHECK(cfg.ppo.clip_epsilon == 0.2);  // untouched default
  CHECK(cfg.estimator.kind == EstimatorKind::Sae);
  CHECK(cfg.segmentation.p == 0.5);

  const PPOConfig ppo = cfg.ppo_config();
  CHECK(ppo.seed == 7);
  REQUIRE(ppo.estimator.segmentation.has_value());
  CHECK(ppo.estimator.segmentation->p == 0.5);

  CHECK_THROWS_WITH(parse_run_config(json::parse(R"({"ppo": {"acto_lr": 0.5}})")),
                    Catch::Matchers::ContainsSubstring("ppo.acto_lr"));
  CHECK_THROWS_WITH(parse_run_config(json::parse(R"({"unknown_section": {}})")),
                    Catch::Matchers::ContainsSubstring("config.unknown_section"));
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"estimator":{"kind":"foo"}})")),
                  ValidationError);
  // Negative values cannot sneak into unsigned fields.
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"env":{"junctions":-1}})")),
                  ValidationError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"bias_lab":{"M":[4,-2]}})")),
                  ValidationError);
}

TEST_CASE("run config round-trips through the canonical serialization",
          "[config-io]") {
  RunConfig cfg;
  cfg.seed = 99;
  cfg.out_dir = "results";
  cfg.env.junctions = 4;
  cfg.estimator.kind = EstimatorKind::Sae;
  cfg.segmentation.method = SegMethod::Delimiter;
  cfg.segmentation.delimiters = {3, 9};
  cfg.bias_lab.seeds = 50;
  cfg.analysis.seeds = 5;

  const std::string dumped = canonical_json(cfg).dump(2);
  const RunConfig reparsed = parse_run_config(json::parse(dumped));
  const std::string dumped_again = canonical_json(reparsed).dump(2);
  CHECK(dumped == dumped_again);
  CHECK(reparsed.seed == 99);
  CHECK(reparsed.segmentation.delimiters == std::vector<std::int64_t>{3, 9});
  CHECK(reparsed.bias_lab.seeds == 50);
}

TEST_CASE("out_dir precedence: flag > config > environment > default",
          "[config-io]") {
  ::setenv("SEGADV_OUT_DIR", "/tmp/from_env", 1);
  CHECK(resolve_out_dir("/tmp/flag", "/tmp/cfg") == "/tmp/flag");
  CHECK(resolve_out_dir("", "/tmp/cfg") == "/tmp/cfg");
  CHECK(resolve_out_dir("", "") == "/tmp/from_env");
  ::unsetenv("SEGADV_OUT_DIR");
  CHECK(resolve_out_dir("", "") == ".");
}

TEST_CASE("csv writer emits headers and locale-independent numbers",
          "[config-io]") {
  const auto path = temp_file("writer.csv");
  {
    CsvWriter w(path.string(), {"a", "b"});
    w.row({CsvWriter::cell(1.5), CsvWriter::cell(std::string("x"))});
    w.row({CsvWriter::cell(0.1), CsvWriter::cell(std::uint64_t{7})});
  }
  CHECK(read_file(path.string()) == "a,b\n1.5,x\n0.1,7\n");
  std::filesystem::remove(path);
}

TEST_CASE("format_double is shortest round-trip", "[config-io]") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_double(x)) == x);
}
