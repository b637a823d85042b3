/// @file pipeline.hpp
/// @brief Aggregation strategies over a slate: majority vote, a full-trace
/// judge baseline, and tree auditing with commit/defer beam traversal.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "divaudit/auditor.hpp"
#include "divaudit/packets.hpp"
#include "divaudit/slate.hpp"
#include "divaudit/tree.hpp"

namespace divaudit {

/// Solver is a named baseline that this library does not implement.
enum class Method { MV, Judge, Auditor, Solver };

const char* to_string(Method m);
Method method_from_string(std::string_view s);

enum class AnswerStatus { Answer, Tie, Abstain };

const char* to_string(AnswerStatus s);

struct PolicyConfig {
  double lambda_gate = 0.7;  // commit when alpha >= lambda_gate, defer otherwise
  std::size_t beam_k = 3;
  std::size_t window_k = kDefaultWindow;
  int delta_depth = 3;
  bool hints = true;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class EventKind { Commit, Defer, TerminalReview, FullSlate, Fallback };

const char* to_string(EventKind k);

struct AuditEvent {
  EventKind kind = EventKind::Commit;
  std::int64_t site = 0;     // CDP node id or a special site
  std::size_t lineage = 0;
  std::size_t selected = 0;  // branch/candidate index chosen
  NodeId selected_node = 0;
  double alpha = 1.0;
  std::string prompt;
  std::size_t attempts = 0;
  std::size_t tokens_in = 0;
  std::size_t tokens_out = 0;
  std::string note;
};

struct AggregationResult {
  std::string instance_id;
  Method method = Method::MV;
  AnswerStatus status = AnswerStatus::Abstain;
  std::optional<NormalizedAnswer> answer;
  std::size_t tokens_in = 0;
  std::size_t tokens_out = 0;
  std::vector<AuditEvent> audit_log;
  bool degraded = false;
  std::string error;  // non-empty when the run failed for this slate

  std::size_t tokens_total() const { return tokens_in + tokens_out; }
  std::size_t judge_calls() const;
  std::size_t max_beam = 0;  // largest number of simultaneous lineages
};

/// Plurality over effective answers; zero tokens.
AggregationResult majority_vote(const AgentSlate& slate);

/// One multi-way judge call over all complete traces. Falls back to
/// majority_vote (degraded) when the judge fails. Needs >= 2 agents.
AggregationResult judge_baseline(const AgentSlate& slate, JudgeBackend& backend, const Rubric& rubric);

/// Tree auditing. From the root, each lineage adjudicates the CDPs it
/// reaches: alpha >= lambda commits to the selected child; otherwise all
/// children become lineages, ranked (selected first, support, node id) and
/// cut to beam_k. Surviving leaves go to one terminal review when more
/// than one remains. Judge failures fall back to the largest branch and
/// mark the result degraded.
AggregationResult audit_aggregate(const AgentSlate& slate, const AuditSetup& setup, const PolicyConfig& policy,
                                  JudgeBackend& backend);

struct MethodRun {
  Method method;
  std::vector<AggregationResult> results;  // aligned with the input slates
};

struct RunOptions {
  std::vector<Method> methods{Method::MV, Method::Judge, Method::Auditor};
  std::size_t jobs = 1;
};

/// Runs every method on every slate. Per-slate failures are recorded in
/// AggregationResult::error and the run continues. Output order follows
/// the input regardless of jobs.
std::vector<MethodRun> run_methods(const std::vector<AgentSlate>& slates, const AuditSetup& setup,
                                   const PolicyConfig& policy, JudgeBackend* backend, const RunOptions& options);

}  // namespace divaudit
