/// @file slate.cpp
/// @brief Answer normalization and JSON-Lines corpus I/O.

#include "divaudit/slate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "divaudit/errors.hpp"
#include "text_util.hpp"

namespace divaudit {

using ojson = nlohmann::ordered_json;

namespace {

bool is_trailing_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// "1,234,567" -> "1234567"; commas not in a three-digit group are kept.
std::string drop_thousands_separators(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ',' && i > 0 && is_digit(s[i - 1]) && i + 3 < s.size() &&
        is_digit(s[i + 1]) && is_digit(s[i + 2]) && is_digit(s[i + 3]) &&
        (i + 4 == s.size() || !is_digit(s[i + 4]))) {
      continue;
    }
    out.push_back(s[i]);
  }
  return out;
}

std::optional<double> parse_leading_number(const std::string& s) {
  static const std::regex kNumber(R"(^([+-]?)\$?((\d+(\.\d*)?)|(\.\d+)))");
  std::smatch m;
  if (!std::regex_search(s, m, kNumber)) return std::nullopt;
  const std::size_t end = static_cast<std::size_t>(m.length(0));
  if (end < s.size()) {
    const char next = s[end];
    if (!std::isspace(static_cast<unsigned char>(next)) && next != '%') return std::nullopt;
  }
  const std::string digits = m.str(1) + m.str(2);
  try {
    const double v = std::stod(digits);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

bool answers_equal(const NormalizedAnswer& a, const NormalizedAnswer& b) {
  if (a.numeric && b.numeric) return std::fabs(*a.numeric - *b.numeric) <= kNumericTolerance;
  return a.canonical == b.canonical;
}

NormalizedAnswer normalize_answer(std::string_view raw) {
  std::string s(raw);
  for (;;) {
    std::string next = detail::to_lower_ascii(detail::trim(s));
    next = drop_thousands_separators(next);
    while (!next.empty() && is_trailing_punct(next.back())) next.pop_back();
    next = detail::trim(next);
    if (next == s) break;
    s = std::move(next);
  }
  NormalizedAnswer out;
  out.numeric = parse_leading_number(s);
  out.canonical = std::move(s);
  return out;
}

std::optional<NormalizedAnswer> extract_answer(std::string_view trace_text) {
  std::optional<std::string> last;
  for (const auto& line : detail::split_lines(trace_text)) {
    // Within a line the `answer:` prefix comes before any later `####`.
    const std::string trimmed = detail::trim(line);
    if (detail::starts_with_icase(trimmed, "answer:")) {
      std::string rest = detail::trim(trimmed.substr(7));
      if (!rest.empty()) last = rest;
    }
    const auto pos = line.rfind("####");
    if (pos != std::string::npos) {
      std::string rest = detail::trim(line.substr(pos + 4));
      if (!rest.empty()) last = rest;
    }
  }
  if (!last) return std::nullopt;
  return normalize_answer(*last);
}

std::optional<NormalizedAnswer> AgentSlate::gold() const {
  if (!gold_answer) return std::nullopt;
  return normalize_answer(*gold_answer);
}

std::optional<NormalizedAnswer> effective_answer(const AgentOutput& agent) {
  if (agent.answer) {
    auto a = normalize_answer(*agent.answer);
    if (!a.empty()) return a;
  }
  return extract_answer(agent.text);
}

void validate_slate(const AgentSlate& slate) {
  if (slate.agents.empty()) throw std::invalid_argument("slate '" + slate.id + "' has no agents");
  std::unordered_set<std::string> seen;
  for (const auto& a : slate.agents) {
    if (detail::trim(a.text).empty()) {
      throw std::invalid_argument("agent '" + a.agent_id + "' has empty text");
    }
    if (!seen.insert(a.agent_id).second) {
      throw std::invalid_argument("duplicate agent_id '" + a.agent_id + "'");
    }
  }
}

namespace {

ojson optional_string(const std::optional<std::string>& s) {
  return s ? ojson(*s) : ojson(nullptr);
}

std::optional<std::string> read_optional_string(const ojson& obj, const char* key,
                                                std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string or null", line_no);
  return it->get<std::string>();
}

std::string read_string(const ojson& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(std::string("missing string field '") + key + "'", line_no);
  }
  return it->get<std::string>();
}

}  // namespace

std::string slate_to_json_line(const AgentSlate& slate) {
  ojson agents = ojson::array();
  for (const auto& a : slate.agents) {
    ojson row;
    row["agent_id"] = a.agent_id;
    row["text"] = a.text;
    row["answer"] = optional_string(a.answer);
    agents.push_back(std::move(row));
  }
  ojson j;
  j["id"] = slate.id;
  j["question"] = slate.question;
  j["gold_answer"] = optional_string(slate.gold_answer);
  j["agents"] = std::move(agents);
  try {
    return j.dump();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot serialize slate '" + slate.id + "': " + e.what());
  }
}

AgentSlate slate_from_json_line(std::string_view line, std::size_t line_no) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("slate must be a JSON object", line_no);
  AgentSlate slate;
  slate.id = read_string(j, "id", line_no);
  slate.question = read_string(j, "question", line_no);
  slate.gold_answer = read_optional_string(j, "gold_answer", line_no);
  auto agents = j.find("agents");
  if (agents == j.end() || !agents->is_array()) throw ParseError("missing array field 'agents'", line_no);
  for (const auto& row : *agents) {
    if (!row.is_object()) throw ParseError("agent entry must be an object", line_no);
    AgentOutput a;
    a.agent_id = read_string(row, "agent_id", line_no);
    a.text = read_string(row, "text", line_no);
    a.answer = read_optional_string(row, "answer", line_no);
    slate.agents.push_back(std::move(a));
  }
  try {
    validate_slate(slate);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), line_no);
  }
  return slate;
}

std::vector<AgentSlate> load_slates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<AgentSlate> slates;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    slates.push_back(slate_from_json_line(line, line_no));
  }
  return slates;
}

void save_slates(const std::vector<AgentSlate>& slates, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : slates) out << slate_to_json_line(s) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace divaudit

namespace divaudit {

std::vector<AnswerCount> tally_answers(const std::vector<std::optional<NormalizedAnswer>>& answers) {
  std::vector<AnswerCount> groups;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (!answers[i]) continue;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const AnswerCount& g) { return answers_equal(g.answer, *answers[i]); });
    if (it == groups.end()) {
      groups.push_back({*answers[i], 1, i});
    } else {
      ++it->count;
    }
  }
  return groups;
}

}  // namespace divaudit

namespace divaudit {

MajorityOutcome majority_answer(const AgentSlate& slate) {
  std::vector<std::optional<NormalizedAnswer>> answers;
  answers.reserve(slate.agents.size());
  for (const auto& a : slate.agents) answers.push_back(effective_answer(a));
  MajorityOutcome out;
  out.tally = tally_answers(answers);
  if (out.tally.empty()) return out;
  std::size_t best = 0, best_count = 0, holders = 0;
  for (std::size_t i = 0; i < out.tally.size(); ++i) {
    if (out.tally[i].count > best_count) {
      best_count = out.tally[i].count;
      best = i;
      holders = 1;
    } else if (out.tally[i].count == best_count) {
      ++holders;
    }
  }
  if (holders > 1) {
    out.status = VoteStatus::Tie;
  } else {
    out.status = VoteStatus::Unique;
    out.answer = out.tally[best].answer;
  }
  return out;
}

}  // namespace divaudit
