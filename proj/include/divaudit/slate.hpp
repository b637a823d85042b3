/// @file slate.hpp
/// @brief Problem instances, agent outputs and answer normalization.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace divaudit {

/// Canonical form of a final answer.
struct NormalizedAnswer {
  std::string canonical;
  std::optional<double> numeric;

  bool empty() const { return canonical.empty(); }
};

/// Tolerance used when both answers parse as numbers.
inline constexpr double kNumericTolerance = 1e-9;

/// Numeric comparison wins when both sides are numeric, canonical string
/// equality otherwise.
bool answers_equal(const NormalizedAnswer& a, const NormalizedAnswer& b);

inline bool operator==(const NormalizedAnswer& a, const NormalizedAnswer& b) {
  return answers_equal(a, b);
}

/// Trims, lowercases, strips trailing punctuation, drops thousands
/// separators and parses a leading numeric token. Idempotent.
NormalizedAnswer normalize_answer(std::string_view raw);

/// Returns the answer after the last `#### ` marker or `answer:` line.
std::optional<NormalizedAnswer> extract_answer(std::string_view trace_text);

struct AgentOutput {
  std::string agent_id;
  std::string text;
  std::optional<std::string> answer;  // raw, as stored in the corpus

  bool operator==(const AgentOutput&) const = default;
};

struct AgentSlate {
  std::string id;
  std::string question;
  std::optional<std::string> gold_answer;
  std::vector<AgentOutput> agents;

  bool operator==(const AgentSlate&) const = default;

  std::optional<NormalizedAnswer> gold() const;
};

/// The answer an agent votes with: its explicit answer when present,
/// otherwise whatever extract_answer finds in the trace. Absent means the
/// agent abstains from the vote.
std::optional<NormalizedAnswer> effective_answer(const AgentOutput& agent);

/// Throws std::invalid_argument when the slate breaks an invariant
/// (no agents, empty trace text, duplicate agent ids).
void validate_slate(const AgentSlate& slate);

/// One JSON object per slate, keys in schema order.
std::string slate_to_json_line(const AgentSlate& slate);
AgentSlate slate_from_json_line(std::string_view line, std::size_t line_no = 0);

std::vector<AgentSlate> load_slates(const std::filesystem::path& path);
void save_slates(const std::vector<AgentSlate>& slates, const std::filesystem::path& path);

}  // namespace divaudit

namespace divaudit {

struct AnswerCount {
  NormalizedAnswer answer;  // first occurrence
  std::size_t count = 0;
  std::size_t first_index = 0;
};

/// Groups present answers by answers_equal, in order of first appearance.
std::vector<AnswerCount> tally_answers(const std::vector<std::optional<NormalizedAnswer>>& answers);

}  // namespace divaudit

namespace divaudit {

enum class VoteStatus { Unique, Tie, Abstain };

struct MajorityOutcome {
  VoteStatus status = VoteStatus::Abstain;
  std::optional<NormalizedAnswer> answer;  // set only for Unique
  std::vector<AnswerCount> tally;
};

/// Plurality over effective answers; agents without an answer are skipped.
MajorityOutcome majority_answer(const AgentSlate& slate);

}  // namespace divaudit
