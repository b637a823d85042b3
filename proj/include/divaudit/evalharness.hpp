/// @file evalharness.hpp
/// @brief Majority-correct / minority-correct regime labels, regime-split
/// accuracy and report emission.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "divaudit/pipeline.hpp"
#include "divaudit/slate.hpp"

namespace divaudit {

enum class Regime { MajC, MinC, AllWrong, Tie };

const char* to_string(Regime r);
Regime regime_from_string(std::string_view s);

/// MajC: unique plurality is correct. MinC: unique plurality is wrong and
/// some agent is correct. AllWrong: no agent is correct (including slates
/// where nobody answered). Tie: the top count is shared.
/// Throws std::invalid_argument without a gold answer.
Regime classify_regime(const AgentSlate& slate);

/// One scored instance: a result joined with its slate.
struct InstanceRecord {
  std::string id;
  Method method = Method::MV;
  AnswerStatus status = AnswerStatus::Abstain;
  std::optional<std::string> answer;
  std::optional<std::string> gold;
  std::optional<Regime> regime;  // absent without gold
  bool correct = false;
  std::size_t tokens_in = 0;
  std::size_t tokens_out = 0;
  std::size_t judge_calls = 0;
  bool degraded = false;
  std::string error;
};

/// Throws std::invalid_argument when ids do not line up.
std::vector<InstanceRecord> join_results(const std::vector<AggregationResult>& results,
                                         const std::vector<AgentSlate>& slates);

struct RegimeScore {
  std::size_t n = 0;
  std::size_t correct = 0;
  double acc() const { return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n); }
};

struct MethodScore {
  Method method = Method::MV;
  std::size_t n = 0;  // gold-labeled instances
  std::size_t correct = 0;
  RegimeScore majc, minc, all_wrong;
  std::size_t ties = 0;
  std::size_t degraded = 0;
  std::size_t errors = 0;
  double tokens_in = 0.0;  // per-instance means
  double tokens_out = 0.0;

  double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n); }
  double tokens_total() const { return tokens_in + tokens_out; }
};

MethodScore score_records(const std::vector<InstanceRecord>& records);

/// Regime-partitioned accuracy for one method's results.
MethodScore score(const std::vector<AggregationResult>& results, const std::vector<AgentSlate>& slates);

/// {method, accuracy, n, majc:{n,acc}, minc:{n,acc}, ties, degraded, tokens:{in,out,total}}
std::string report_json(const MethodScore& s);

/// Header plus one row per method, accuracies as percentages.
std::string report_csv(const std::vector<MethodScore>& scores);

std::string record_to_json_line(const InstanceRecord& r);
InstanceRecord record_from_json_line(std::string_view line, std::size_t line_no = 0);
void save_records(const std::vector<InstanceRecord>& records, const std::filesystem::path& path);
std::vector<InstanceRecord> load_records(const std::filesystem::path& path);

}  // namespace divaudit
