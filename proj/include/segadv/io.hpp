#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "segadv/segmentation.hpp"
#include "segadv/trajectory.hpp"

namespace segadv {

using json = nlohmann::json;

// One trajectory-file record: the trajectory plus an optional value series.
struct TrajectoryRecord {
  Trajectory traj;
  std::optional<ValueSeries> values;
};

namespace detail {

inline void reject_unknown_keys(const json& obj,
                                std::initializer_list<const char*> known,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ValidationError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace detail

inline TrajectoryRecord parse_trajectory_record(const json& obj,
                                                const std::string& where) {
  require(obj.is_object(), where + ": record must be a JSON object");
  detail::reject_unknown_keys(obj, {"tokens", "gen_probs", "reward", "values"}, where);
  require(obj.contains("tokens") && obj.contains("gen_probs") && obj.contains("reward"),
          where + ": record needs tokens, gen_probs and reward");
  TrajectoryRecord rec;
  for (const auto& t : obj.at("tokens")) {
    require(t.is_number_integer(), where + ": tokens must be integers");
    rec.traj.tokens.push_back(t.get<std::int64_t>());
  }
  for (const auto& p : obj.at("gen_probs")) {
    require(p.is_number(), where + ": gen_probs must be numbers");
    rec.traj.gen_probs.push_back(p.get<double>());
  }
  const auto& reward = obj.at("reward");
  require(reward.is_number(), where + ": reward must be a number");
  rec.traj.terminal_reward = reward.get<double>();
  rec.traj.validate();
  if (obj.contains("values")) {
    ValueSeries vs;
    for (const auto& v : obj.at("values")) {
      require(v.is_number(), where + ": values must be numbers");
      vs.values.push_back(v.get<double>());
    }
    vs.validate_for(rec.traj);
    rec.values = std::move(vs);
  }
  return rec;
}

inline std::vector<TrajectoryRecord> read_trajectories_jsonl(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open input file: " + path);
  std::vector<TrajectoryRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(
        parse_trajectory_record(obj, path + ":" + std::to_string(lineno)));
  }
  return out;
}

inline json trajectory_record_to_json(const TrajectoryRecord& rec) {
  json obj;
  obj["tokens"] = rec.traj.tokens;
  obj["gen_probs"] = rec.traj.gen_probs;
  obj["reward"] = rec.traj.terminal_reward;
  if (rec.values) obj["values"] = rec.values->values;
  return obj;
}

// Minimal CSV writer: required header, '.' decimal point, no quoting (none
// of our fields contain separators).
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path) {
    require(out_.good(), "cannot open output file: " + path);
    columns_ = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    require(cells.size() == columns_, "CSV row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  static std::string cell(double x) { return format_double(x); }
  static std::string cell(std::uint64_t x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
};

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  require(out.good(), "cannot open output file: " + path);
  for (const auto& l : lines) out << l << '\n';
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace segadv
