/// @file packets.hpp
/// @brief Judge-facing inputs: divergence packets at branching nodes,
/// terminal review packets over complete lineages, and their rendering.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "divaudit/slate.hpp"
#include "divaudit/tree.hpp"

namespace divaudit {

/// Auditing criteria shown to the judge.
struct Rubric {
  bool fact = true;        // arithmetic, stated facts, checkable claims
  bool logic = true;       // validity and coherence with the shared prefix
  bool constraint = true;  // problem-specific constraints
  std::string early_hint =
      "The branches split before a common method was settled, so weigh logical soundness and "
      "constraint adherence of the chosen approach most heavily.";
  std::string late_hint =
      "The branches share a common approach and split at a local step, so weigh the factual "
      "accuracy of that computation most heavily.";

  /// Throws ConfigError when every criterion is disabled.
  void validate() const;
};

struct PacketBranch {
  NodeId child = 0;
  std::vector<std::string> evidence;
  std::size_t support_size = 0;
};

struct DivergencePacket {
  std::string question;
  NodeId cdp = kRootId;
  DivergenceType dtype = DivergenceType::Early;
  std::vector<std::string> prefix;
  std::vector<PacketBranch> branches;
  bool include_support_hints = true;
};

struct ReviewCandidate {
  NodeId lineage = 0;  // terminal node id
  std::vector<std::string> steps;
  std::optional<NormalizedAnswer> answer;
  std::size_t support_size = 0;
};

struct ConsensusReviewPacket {
  std::string question;
  std::vector<ReviewCandidate> candidates;
  bool include_support_hints = true;
};

inline constexpr std::size_t kDefaultWindow = 3;

/// Evidence for each child starts at the child itself and follows the
/// single-child spine for at most `window` steps, stopping before the next
/// branching node. Throws std::invalid_argument when u is not a CDP.
DivergencePacket build_packet(const ReasoningTree& tree, NodeId u, std::size_t window, int delta,
                              bool hints, std::string question = {});

/// One candidate per distinct lineage, first occurrence order. Throws
/// std::invalid_argument with fewer than two distinct lineages.
ConsensusReviewPacket build_review_packet(const ReasoningTree& tree, const std::vector<NodeId>& lineages,
                                          std::string question = {}, bool hints = true);

/// Bijective base-26 branch label: 0 -> A, 25 -> Z, 26 -> AA.
std::string branch_letter(std::size_t index);

/// Inverse of branch_letter; nullopt for anything but ASCII letters.
std::optional<std::size_t> branch_index(std::string_view letters);

std::string_view packet_template_version();

std::string render_packet(const DivergencePacket& p, const Rubric& rubric);
std::string render_packet(const ConsensusReviewPacket& p, const Rubric& rubric);

/// Every agent's complete trace in one multi-way prompt, for the
/// full-trace judging baseline.
std::string render_full_slate(const AgentSlate& slate, const Rubric& rubric);

/// Words plus standalone punctuation marks: each maximal run of letters,
/// digits or non-ASCII bytes counts one, each other non-space byte counts one.
std::size_t estimate_tokens(std::string_view text);

}  // namespace divaudit
