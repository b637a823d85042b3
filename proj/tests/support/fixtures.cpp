#include "fixtures.hpp"

#include <random>
#include <stdexcept>

#include "divaudit/keyed_random.hpp"

namespace fixtures {

using divaudit::AgentOutput;
using divaudit::AgentSlate;

namespace {

constexpr const char* kSyllables[] = {"ka", "lo", "mi", "ru", "te", "vo", "sa", "ne", "pi", "do", "gu", "fa",
                                      "ze", "ho", "bi", "ya", "ro", "che", "lun", "dar", "vek", "mos", "tri", "pel"};
constexpr std::size_t kSyllableCount = sizeof(kSyllables) / sizeof(kSyllables[0]);

std::string question_for(std::uint64_t tag) { return "Compute the value described by " + synth_word(tag) + "?"; }

}  // namespace

std::string synth_word(std::uint64_t key) {
  std::string w;
  std::uint64_t h = divaudit::mix64(key);
  for (int i = 0; i < 3; ++i) {
    w += kSyllables[h % kSyllableCount];
    h /= kSyllableCount;
  }
  return w;
}

std::string synth_step(std::uint64_t tag, std::size_t k, std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) s += ' ';
    s += synth_word(divaudit::derive_key(tag, {k, i}));
  }
  s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s + '.';
}

std::vector<std::string> synth_steps(std::uint64_t tag, std::size_t len, std::size_t words) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < len; ++k) out.push_back(synth_step(tag, k, words));
  return out;
}

AgentSlate make_slate(const std::string& id, const std::string& question, const std::optional<std::string>& gold,
                      const std::vector<PathSpec>& paths) {
  AgentSlate s;
  s.id = id;
  s.question = question;
  s.gold_answer = gold;
  std::size_t n = 0;
  for (const auto& p : paths) {
    std::string text;
    for (const auto& step : p.steps) text += step + "\n";
    text += "Answer: " + p.answer;
    for (std::size_t a = 0; a < p.agents; ++a) {
      s.agents.push_back(AgentOutput{"agent" + std::to_string(n++), text, p.answer});
    }
  }
  return s;
}

static std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

AgentSlate two_branch_slate(const std::string& id, std::uint64_t tag, std::size_t prefix_len, std::size_t branch_len,
                            std::size_t n_err, std::size_t n_cor, const std::string& gold, const std::string& wrong) {
  const auto prefix = synth_steps(divaudit::derive_key(tag, {1}), prefix_len);
  const auto err = synth_steps(divaudit::derive_key(tag, {2}), branch_len);
  const auto cor = synth_steps(divaudit::derive_key(tag, {3}), branch_len);
  return make_slate(id, question_for(tag), gold,
                    {{concat(prefix, err), wrong, n_err}, {concat(prefix, cor), gold, n_cor}});
}

std::vector<AgentSlate> minc_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  std::vector<AgentSlate> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t tag = divaudit::derive_key(seed, {0x6d696e63, i});
    const std::string id = "minc-" + std::to_string(i);
    const std::string gold = std::to_string(10 + i % 50);
    const std::string wrong = std::to_string(100 + i % 50);
    const std::size_t prefix_len = pick(0, 4);
    const auto prefix = synth_steps(divaudit::derive_key(tag, {1}), prefix_len);
    switch (i % 3) {
      case 0: {
        const std::size_t n_err = pick(2, 5);
        out.push_back(two_branch_slate(id, tag, prefix_len, pick(1, 4), n_err, pick(1, n_err - 1), gold, wrong));
        break;
      }
      case 1: {
        const std::size_t n_err = pick(2, 4);
        out.push_back(make_slate(
            id, question_for(tag), gold,
            {{concat(prefix, synth_steps(divaudit::derive_key(tag, {2}), pick(1, 3))), wrong, n_err},
             {concat(prefix, synth_steps(divaudit::derive_key(tag, {3}), pick(1, 3))), "999", 1},
             {concat(prefix, synth_steps(divaudit::derive_key(tag, {4}), pick(1, 3))), gold, 1}}));
        break;
      }
      default: {
        const auto shared = concat(prefix, synth_steps(divaudit::derive_key(tag, {5}), pick(1, 2)));
        out.push_back(make_slate(
            id, question_for(tag), gold,
            {{concat(prefix, synth_steps(divaudit::derive_key(tag, {2}), pick(1, 3))), wrong, 2},
             {concat(shared, synth_steps(divaudit::derive_key(tag, {3}), pick(1, 3))), wrong, 2},
             {concat(shared, synth_steps(divaudit::derive_key(tag, {4}), pick(1, 3))), gold, 1}}));
        break;
      }
    }
  }
  return out;
}

std::vector<AgentSlate> majc_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  std::vector<AgentSlate> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t tag = divaudit::derive_key(seed, {0x6d616a63, i});
    const std::size_t n_cor = pick(2, 5);
    // Reuse the two-branch layout with the roles swapped: the larger group is correct.
    auto s = two_branch_slate("majc-" + std::to_string(i), tag, pick(0, 4), pick(1, 4), pick(1, n_cor - 1), n_cor,
                              std::to_string(20 + i % 40), std::to_string(200 + i % 40));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<AgentSlate> regime_corpus(std::size_t n, std::uint64_t seed) {
  const auto minc = minc_corpus((n + 3) / 4, seed ^ 1);
  const auto majc = majc_corpus((n + 3) / 4, seed ^ 2);
  std::vector<AgentSlate> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i / 4;
    const std::uint64_t tag = divaudit::derive_key(seed, {0x6d6978, i});
    switch (i % 4) {
      case 0: out.push_back(minc[j]); break;
      case 1: out.push_back(majc[j]); break;
      case 2:
        out.push_back(two_branch_slate("allwrong-" + std::to_string(j), tag, 2, 2, 3, 1, "7", "3"));
        out.back().agents.back().answer = "4";
        out.back().agents.back().text += "\nAnswer: 4";
        break;
      default: out.push_back(two_branch_slate("tie-" + std::to_string(j), tag, 1, 2, 2, 2, "7", "3")); break;
    }
  }
  return out;
}

std::vector<AgentSlate> long_prefix_suite(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  std::vector<AgentSlate> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t tag = divaudit::derive_key(seed, {0x6c6f6e67, i});
    const std::size_t n_err = pick(3, 6);
    out.push_back(two_branch_slate("long-" + std::to_string(i), tag, pick(20, 40), pick(4, 8), n_err,
                                   pick(1, n_err - 1), "7", "3"));
  }
  return out;
}

std::vector<AgentSlate> ambiguous_cdp_suite(std::size_t n, std::uint64_t seed) {
  std::vector<AgentSlate> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t tag = divaudit::derive_key(seed, {0x616d6267, i});
    const auto x = synth_steps(divaudit::derive_key(tag, {1}), 2);
    const auto y = synth_steps(divaudit::derive_key(tag, {2}), 2);
    out.push_back(make_slate("amb-" + std::to_string(i), question_for(tag), "7",
                             {{x, "3", 3},
                              {concat(y, synth_steps(divaudit::derive_key(tag, {3}), 2)), "7", 1},
                              {concat(y, synth_steps(divaudit::derive_key(tag, {4}), 2)), "5", 2}}));
  }
  return out;
}

AgentSlate confabulation_slate() {
  // The wrong traces differ only in case and punctuation, which the hashing
  // tokenizer discards.
  const std::vector<std::string> wrong_a{
      "Each box holds twelve pencils and there are four boxes.",
      "Multiply twelve by four to count the pencils in total.",
      "That gives fifty pencils across the boxes."};
  const std::vector<std::string> wrong_b{
      "Each box holds twelve pencils, and there are four boxes.",
      "Multiply twelve by four to count the pencils in total!",
      "That gives fifty pencils across the boxes."};
  const std::vector<std::string> wrong_c{
      "each box holds TWELVE pencils and there are four boxes.",
      "Multiply twelve by four, to count the pencils in total.",
      "That gives fifty (pencils) across the boxes."};
  const std::vector<std::string> right{
      "Each box holds twelve pencils and there are four boxes.",
      "Multiply twelve by four to count the pencils in total.",
      "Twelve times four equals forty eight exactly."};
  return make_slate("confab", "Four boxes hold twelve pencils each. How many pencils?", "48",
                    {{wrong_a, "50", 1}, {wrong_b, "50", 1}, {wrong_c, "50", 1}, {right, "48", 1}});
}

AgentSlate trie_slate(const std::vector<std::string>& answers, const std::optional<std::string>& gold) {
  std::vector<PathSpec> paths;
  for (std::size_t i = 0; i < answers.size(); ++i) paths.push_back({synth_steps(0x74726965 + i * 7919, 3), answers[i], 1});
  return make_slate("trie", "Trie question?", gold, paths);
}

}  // namespace fixtures
