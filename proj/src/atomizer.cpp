/// @file atomizer.cpp

#include "divaudit/atomizer.hpp"

#include <regex>
#include <set>
#include <stdexcept>

#include "assets.hpp"
#include "text_util.hpp"

namespace divaudit {

namespace {

std::vector<std::string> raw_pieces(std::string_view text) {
  std::set<std::size_t> cuts{0, text.size()};
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      cuts.insert(i);
      cuts.insert(i + 1);
    } else if ((c == '.' || c == '!' || c == '?') &&
               (i + 1 == text.size() || detail::is_space(text[i + 1]))) {
      cuts.insert(i + 1);
    }
  }
  static const std::regex kStepMarker(R"(\bstep\s*\d+\s*[:.)])", std::regex::icase);
  const std::string owned(text);
  for (auto it = std::sregex_iterator(owned.begin(), owned.end(), kStepMarker);
       it != std::sregex_iterator(); ++it) {
    cuts.insert(static_cast<std::size_t>(it->position(0)));
  }
  std::vector<std::string> pieces;
  std::size_t prev = 0;
  for (auto cut : cuts) {
    if (cut > prev) {
      auto piece = detail::trim(text.substr(prev, cut - prev));
      if (!piece.empty()) pieces.push_back(std::move(piece));
    }
    prev = cut;
  }
  return pieces;
}

std::vector<AtomicStep> index_steps(std::vector<std::string> texts) {
  std::vector<AtomicStep> steps;
  steps.reserve(texts.size());
  for (auto& t : texts) steps.push_back({steps.size(), std::move(t)});
  return steps;
}

std::string strip_whitespace(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!detail::is_space(c)) out.push_back(c);
  }
  return out;
}

}  // namespace

Trace atomize_rule_based(const AgentOutput& output, std::size_t min_fragment) {
  const auto pieces = raw_pieces(output.text);
  if (pieces.empty()) throw std::invalid_argument("empty trace");

  std::vector<std::string> merged;
  for (const auto& p : pieces) {
    if (!merged.empty() && p.size() < min_fragment) {
      merged.back() += ' ';
      merged.back() += p;
    } else {
      merged.push_back(p);
    }
  }
  // A short leading fragment has nothing before it; fold it forward.
  if (merged.size() >= 2 && merged.front().size() < min_fragment) {
    merged[1] = merged[0] + ' ' + merged[1];
    merged.erase(merged.begin());
  }
  return Trace{output.agent_id, index_steps(std::move(merged)), TraceSource::RuleBased};
}

std::string_view atomize_prompt() { return assets::kAtomizePrompt; }
std::string_view atomize_prompt_version() { return "atomize.v1"; }

bool covers_source(const std::vector<AtomicStep>& steps, std::string_view source) {
  std::string joined;
  for (const auto& s : steps) joined += strip_whitespace(s.text);
  return joined == strip_whitespace(source);
}

Trace atomize_remote(const AgentOutput& output, CompletionBackend& client, std::size_t min_fragment) {
  if (detail::trim(output.text).empty()) throw std::invalid_argument("empty trace");
  const std::vector<ChatMessage> messages{{"system", std::string(atomize_prompt())},
                                          {"user", output.text}};
  const std::string reply = client.complete(messages);

  std::vector<std::string> lines;
  for (const auto& line : detail::split_lines(reply)) {
    auto t = detail::trim(line);
    if (!t.empty()) lines.push_back(std::move(t));
  }
  auto steps = index_steps(std::move(lines));
  if (steps.empty() || !covers_source(steps, output.text)) {
    Trace fallback = atomize_rule_based(output, min_fragment);
    fallback.source = TraceSource::RemoteFallback;
    return fallback;
  }
  return Trace{output.agent_id, std::move(steps), TraceSource::Remote};
}

}  // namespace divaudit
