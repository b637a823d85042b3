// Synthetic slates with controlled vocabulary. Every generated step draws its
// words from a large syllable lexicon keyed by (tag, position), so distinct
// steps have near-zero hashing cosine and identical steps merge exactly.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "divaudit/slate.hpp"

namespace fixtures {

std::string synth_word(std::uint64_t key);

/// Sentence of `words` lexicon words ending with a period.
std::string synth_step(std::uint64_t tag, std::size_t k, std::size_t words = 7);

/// `len` consecutive synthetic steps for one tag.
std::vector<std::string> synth_steps(std::uint64_t tag, std::size_t len, std::size_t words = 7);

struct PathSpec {
  std::vector<std::string> steps;
  std::string answer;
  std::size_t agents = 1;
};

/// Each path becomes `agents` agents whose text is the steps, one per line,
/// followed by "Answer: <answer>". Agents are numbered in path order.
divaudit::AgentSlate make_slate(const std::string& id, const std::string& question,
                                const std::optional<std::string>& gold, const std::vector<PathSpec>& paths);

/// Shared prefix, then one branch with n_err agents answering `wrong` and one
/// with n_cor agents answering `gold`. The erroneous branch comes first.
divaudit::AgentSlate two_branch_slate(const std::string& id, std::uint64_t tag, std::size_t prefix_len,
                                      std::size_t branch_len, std::size_t n_err, std::size_t n_cor,
                                      const std::string& gold = "7", const std::string& wrong = "3");

/// Minority-correct slates with varied shape: plain two-branch splits,
/// three-way splits with a second wrong answer, and separations below a
/// shared CDP. Every slate has a unique wrong plurality and a correct leaf.
std::vector<divaudit::AgentSlate> minc_corpus(std::size_t n, std::uint64_t seed);

/// Majority-correct slates.
std::vector<divaudit::AgentSlate> majc_corpus(std::size_t n, std::uint64_t seed);

/// Mixed corpus cycling MinC, MajC, AllWrong and Tie slates.
std::vector<divaudit::AgentSlate> regime_corpus(std::size_t n, std::uint64_t seed);

/// Long shared prefix (20 to 40 steps) before a late split.
std::vector<divaudit::AgentSlate> long_prefix_suite(std::size_t n, std::uint64_t seed);

/// Root CDP whose second child holds a nested CDP. Leaves: wrong (3 agents),
/// gold (1 agent) and a second wrong answer (2 agents) under the nested CDP.
std::vector<divaudit::AgentSlate> ambiguous_cdp_suite(std::size_t n, std::uint64_t seed);

/// Three paraphrase-identical wrong traces plus one correct trace.
divaudit::AgentSlate confabulation_slate();

/// Pure trie: every agent has its own vocabulary from the first step.
divaudit::AgentSlate trie_slate(const std::vector<std::string>& answers, const std::optional<std::string>& gold);

}  // namespace fixtures
