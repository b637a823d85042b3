/// @file auditor.hpp
/// @brief Branch adjudication: judge backends, the reply grammar, and the
/// support-hint sycophancy probe.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "divaudit/packets.hpp"
#include "divaudit/remote.hpp"
#include "divaudit/tree.hpp"

namespace divaudit {

struct AuditDecision {
  std::size_t selected = 0;  // index into the packet's branch order
  double alpha = 1.0;        // decisiveness signal in [0, 1], used for gating only
  std::string rationale;
  bool confidence_defaulted = false;
};

/// Judge reply that does not follow the SELECTED/CONFIDENCE/RATIONALE grammar.
class ReplyParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads the first `SELECTED:`, `CONFIDENCE:` and `RATIONALE:` lines,
/// ignoring surrounding prose and markdown emphasis. A missing confidence
/// defaults to 1.0 with confidence_defaulted set.
AuditDecision parse_judge_reply(std::string_view text, std::size_t n_branches);

/// Inverse of parse_judge_reply for well-formed decisions.
std::string format_judge_reply(const AuditDecision& d);

/// Adjudication sites that are not tree nodes.
inline constexpr std::int64_t kTerminalReviewSite = -1;
inline constexpr std::int64_t kFullSlateSite = -2;

struct JudgeRequest {
  std::string instance_id;
  std::int64_t site = 0;  // CDP node id or one of the sites above
  std::uint64_t call_index = 0;
  std::string prompt;
  /// Leaf answers reachable through each branch. Scripted backends use it
  /// to know which branches are correct-bearing; remote judges ignore it.
  std::vector<std::vector<NormalizedAnswer>> branch_answers;
  std::vector<std::size_t> support;
  bool hints_visible = true;

  std::size_t n_branches() const { return branch_answers.size(); }
};

struct JudgeReply {
  AuditDecision decision;
  std::vector<std::string> replies;  // one per attempt
};

/// Must tolerate concurrent calls.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual JudgeReply judge(const JudgeRequest& request) = 0;
};

struct OracleParams {
  double q = 1.0;           // probability of choosing a correct-bearing branch
  double alpha_emit = 1.0;  // constant decisiveness signal
  std::uint64_t seed = 0;
};

/// Render-blind judge that knows the gold answer. With probability q it
/// picks uniformly among correct-bearing branches, otherwise uniformly among
/// the rest; with no correct-bearing branch it picks uniformly. Draws are
/// keyed by (seed, instance id, site, call index).
class ScriptedOracle : public JudgeBackend {
 public:
  ScriptedOracle(OracleParams params, NormalizedAnswer gold);
  ScriptedOracle(OracleParams params, std::map<std::string, NormalizedAnswer> gold_by_instance);

  JudgeReply judge(const JudgeRequest& request) override;
  const OracleParams& params() const { return params_; }

 private:
  std::optional<NormalizedAnswer> gold_for(const std::string& instance) const;

  OracleParams params_;
  std::optional<NormalizedAnswer> gold_;
  std::map<std::string, NormalizedAnswer> gold_by_instance_;
};

/// Chat-completion judge. Sends the rendered prompt as one user message and
/// retries up to max_retries times on unparseable replies.
class RemoteJudge : public JudgeBackend {
 public:
  RemoteJudge(std::shared_ptr<CompletionBackend> client, int max_retries);
  JudgeReply judge(const JudgeRequest& request) override;

 private:
  std::shared_ptr<CompletionBackend> client_;
  int max_retries_;
};

struct Adjudication {
  AuditDecision decision;
  std::string prompt;
  std::vector<std::string> replies;
  std::size_t tokens_in = 0;   // prompt tokens times attempts
  std::size_t tokens_out = 0;  // tokens over every reply received
};

Adjudication adjudicate(const DivergencePacket& packet, const ReasoningTree& tree, JudgeBackend& backend,
                        const Rubric& rubric, const std::string& instance_id = {},
                        std::uint64_t call_index = 0);

Adjudication adjudicate(const ConsensusReviewPacket& packet, JudgeBackend& backend, const Rubric& rubric,
                        const std::string& instance_id = {}, std::uint64_t call_index = 0);

/// Everything needed to turn a slate into a tree and packets.
struct AuditSetup {
  const Splitter* splitter = nullptr;
  const StepEmbedder* embedder = nullptr;
  TreeConfig tree;
  Rubric rubric;
};

struct FlipReport {
  std::size_t packets = 0;
  std::size_t trials = 0;
  std::size_t decisions = 0;  // hints-on/hints-off pairs
  std::size_t flips = 0;      // pairs where only the hints-on call picked the largest branch
  double flip_rate = 0.0;
  std::vector<std::string> instances;
};

/// Adjudicates each first-disagreement packet of the minority-correct slates
/// twice per trial, with support hints shown and hidden, under the same key.
FlipReport sycophancy_probe(const std::vector<AgentSlate>& slates, const AuditSetup& setup,
                            JudgeBackend& backend, std::size_t trials, std::size_t window = kDefaultWindow);

std::string flip_report_json(const FlipReport& r);

}  // namespace divaudit
