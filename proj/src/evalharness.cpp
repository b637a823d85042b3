/// @file evalharness.cpp

#include "divaudit/evalharness.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "divaudit/errors.hpp"
#include "text_util.hpp"

namespace divaudit {

using ojson = nlohmann::ordered_json;

const char* to_string(Regime r) {
  switch (r) {
    case Regime::MajC: return "MajC";
    case Regime::MinC: return "MinC";
    case Regime::AllWrong: return "AllWrong";
    case Regime::Tie: return "Tie";
  }
  return "?";
}

Regime regime_from_string(std::string_view s) {
  if (s == "MajC") return Regime::MajC;
  if (s == "MinC") return Regime::MinC;
  if (s == "AllWrong") return Regime::AllWrong;
  if (s == "Tie") return Regime::Tie;
  throw std::invalid_argument("unknown regime '" + std::string(s) + "'");
}

Regime classify_regime(const AgentSlate& slate) {
  const auto gold = slate.gold();
  if (!gold) throw std::invalid_argument("classify_regime: slate '" + slate.id + "' has no gold answer");
  const auto mv = majority_answer(slate);
  if (mv.status == VoteStatus::Tie) return Regime::Tie;
  if (mv.status == VoteStatus::Unique && answers_equal(*mv.answer, *gold)) return Regime::MajC;
  for (const auto& g : mv.tally) {
    if (answers_equal(g.answer, *gold)) return Regime::MinC;
  }
  return Regime::AllWrong;
}

std::vector<InstanceRecord> join_results(const std::vector<AggregationResult>& results,
                                         const std::vector<AgentSlate>& slates) {
  if (results.size() != slates.size()) {
    throw std::invalid_argument("score: " + std::to_string(results.size()) + " results for " +
                                std::to_string(slates.size()) + " slates");
  }
  std::vector<InstanceRecord> out;
  out.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto& s = slates[i];
    if (r.instance_id != s.id) {
      throw std::invalid_argument("score: result id '" + r.instance_id + "' does not match slate id '" + s.id + "'");
    }
    InstanceRecord rec;
    rec.id = s.id;
    rec.method = r.method;
    rec.status = r.status;
    if (r.answer) rec.answer = r.answer->canonical;
    rec.tokens_in = r.tokens_in;
    rec.tokens_out = r.tokens_out;
    rec.judge_calls = r.judge_calls();
    rec.degraded = r.degraded;
    rec.error = r.error;
    if (const auto gold = s.gold()) {
      rec.gold = gold->canonical;
      rec.regime = classify_regime(s);
      rec.correct = r.status == AnswerStatus::Answer && r.answer && answers_equal(*r.answer, *gold);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

MethodScore score_records(const std::vector<InstanceRecord>& records) {
  MethodScore s;
  if (!records.empty()) s.method = records.front().method;
  double tin = 0.0, tout = 0.0;
  for (const auto& r : records) {
    tin += static_cast<double>(r.tokens_in);
    tout += static_cast<double>(r.tokens_out);
    if (r.degraded) ++s.degraded;
    if (!r.error.empty()) ++s.errors;
    if (!r.regime) continue;
    ++s.n;
    if (r.correct) ++s.correct;
    RegimeScore* bucket = nullptr;
    switch (*r.regime) {
      case Regime::MajC: bucket = &s.majc; break;
      case Regime::MinC: bucket = &s.minc; break;
      case Regime::AllWrong: bucket = &s.all_wrong; break;
      case Regime::Tie: ++s.ties; break;
    }
    if (bucket != nullptr) {
      ++bucket->n;
      if (r.correct) ++bucket->correct;
    }
  }
  if (!records.empty()) {
    s.tokens_in = tin / static_cast<double>(records.size());
    s.tokens_out = tout / static_cast<double>(records.size());
  }
  return s;
}

MethodScore score(const std::vector<AggregationResult>& results, const std::vector<AgentSlate>& slates) {
  return score_records(join_results(results, slates));
}

std::string report_json(const MethodScore& s) {
  ojson j;
  j["method"] = to_string(s.method);
  j["accuracy"] = s.accuracy();
  j["n"] = s.n;
  j["majc"] = {{"n", s.majc.n}, {"acc", s.majc.acc()}};
  j["minc"] = {{"n", s.minc.n}, {"acc", s.minc.acc()}};
  j["ties"] = s.ties;
  j["degraded"] = s.degraded;
  j["tokens"] = {{"in", s.tokens_in}, {"out", s.tokens_out}, {"total", s.tokens_total()}};
  return j.dump(2);
}

std::string report_csv(const std::vector<MethodScore>& scores) {
  std::ostringstream os;
  os << "method,n,accuracy,majc_n,majc_acc,minc_n,minc_acc,ties,degraded,tokens_in,tokens_out,tokens_total\n";
  char buf[512];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.2f,%zu,%.2f,%zu,%.2f,%zu,%zu,%.1f,%.1f,%.1f\n", to_string(s.method), s.n,
                  100.0 * s.accuracy(), s.majc.n, 100.0 * s.majc.acc(), s.minc.n, 100.0 * s.minc.acc(), s.ties,
                  s.degraded, s.tokens_in, s.tokens_out, s.tokens_total());
    os << buf;
  }
  return os.str();
}

namespace {

ojson opt(const std::optional<std::string>& s) { return s ? ojson(*s) : ojson(nullptr); }

std::optional<std::string> read_opt(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

AnswerStatus status_from_string(const std::string& s) {
  if (s == "answer") return AnswerStatus::Answer;
  if (s == "tie") return AnswerStatus::Tie;
  if (s == "abstain") return AnswerStatus::Abstain;
  throw std::invalid_argument("unknown status '" + s + "'");
}

}  // namespace

std::string record_to_json_line(const InstanceRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["method"] = to_string(r.method);
  j["status"] = to_string(r.status);
  j["answer"] = opt(r.answer);
  j["gold"] = opt(r.gold);
  j["regime"] = r.regime ? ojson(to_string(*r.regime)) : ojson(nullptr);
  j["correct"] = r.correct;
  j["tokens_in"] = r.tokens_in;
  j["tokens_out"] = r.tokens_out;
  j["judge_calls"] = r.judge_calls;
  j["degraded"] = r.degraded;
  j["error"] = r.error;
  return j.dump();
}

InstanceRecord record_from_json_line(std::string_view line, std::size_t line_no) {
  try {
    const auto j = ojson::parse(line);
    InstanceRecord r;
    r.id = j.at("id").get<std::string>();
    r.method = method_from_string(j.at("method").get<std::string>());
    r.status = status_from_string(j.at("status").get<std::string>());
    r.answer = read_opt(j, "answer");
    r.gold = read_opt(j, "gold");
    if (auto reg = read_opt(j, "regime")) r.regime = regime_from_string(*reg);
    r.correct = j.at("correct").get<bool>();
    r.tokens_in = j.at("tokens_in").get<std::size_t>();
    r.tokens_out = j.at("tokens_out").get<std::size_t>();
    r.judge_calls = j.value("judge_calls", std::size_t{0});
    r.degraded = j.value("degraded", false);
    r.error = j.value("error", std::string{});
    return r;
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad result record: ") + e.what(), line_no);
  }
}

void save_records(const std::vector<InstanceRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << record_to_json_line(r) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<InstanceRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<InstanceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    out.push_back(record_from_json_line(line, line_no));
  }
  return out;
}

}  // namespace divaudit
