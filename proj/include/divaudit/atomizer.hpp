/// @file atomizer.hpp
/// @brief Segmentation of raw agent traces into ordered atomic steps.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "divaudit/remote.hpp"
#include "divaudit/slate.hpp"

namespace divaudit {

struct AtomicStep {
  std::size_t index = 0;
  std::string text;

  bool operator==(const AtomicStep&) const = default;
};

enum class TraceSource { RuleBased, Remote, RemoteFallback };

struct Trace {
  std::string agent_id;
  std::vector<AtomicStep> steps;
  TraceSource source = TraceSource::RuleBased;
};

inline constexpr std::size_t kDefaultMinFragment = 12;

/// Splits on line breaks, `Step k:` markers and sentence ends, then merges
/// fragments shorter than `min_fragment` characters into the previous step.
/// Throws std::invalid_argument("empty trace") on all-whitespace text.
Trace atomize_rule_based(const AgentOutput& output, std::size_t min_fragment = kDefaultMinFragment);

/// Asks the backend for one step per line. Falls back to the rule-based
/// splitter (source = RemoteFallback) when the reply has no usable lines
/// or does not reproduce the source text. Transport errors propagate.
Trace atomize_remote(const AgentOutput& output, CompletionBackend& client,
                     std::size_t min_fragment = kDefaultMinFragment);

/// Prompt sent by atomize_remote, and its version tag.
std::string_view atomize_prompt();
std::string_view atomize_prompt_version();

/// True when the steps keep every non-whitespace character of `source`
/// in order and add nothing.
bool covers_source(const std::vector<AtomicStep>& steps, std::string_view source);

/// Splitter used by the pipeline; selects one of the two functions above.
class Splitter {
 public:
  virtual ~Splitter() = default;
  virtual Trace atomize(const AgentOutput& output) const = 0;
};

class RuleSplitter : public Splitter {
 public:
  explicit RuleSplitter(std::size_t min_fragment = kDefaultMinFragment) : min_fragment_(min_fragment) {}
  Trace atomize(const AgentOutput& output) const override {
    return atomize_rule_based(output, min_fragment_);
  }

 private:
  std::size_t min_fragment_;
};

class RemoteSplitter : public Splitter {
 public:
  RemoteSplitter(CompletionBackend& client, std::size_t min_fragment = kDefaultMinFragment)
      : client_(client), min_fragment_(min_fragment) {}
  Trace atomize(const AgentOutput& output) const override {
    return atomize_remote(output, client_, min_fragment_);
  }

 private:
  CompletionBackend& client_;
  std::size_t min_fragment_;
};

}  // namespace divaudit
