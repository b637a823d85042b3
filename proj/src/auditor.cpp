/// @file auditor.cpp

#include "divaudit/auditor.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <regex>

#include <json.hpp>

#include "divaudit/errors.hpp"
#include "divaudit/keyed_random.hpp"
#include "text_util.hpp"

namespace divaudit {

namespace {

// Strips list bullets, quote markers and markdown emphasis before a label.
std::string_view strip_decorations(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && (detail::is_space(s[i]) || s[i] == '*' || s[i] == '#' || s[i] == '-' ||
                          s[i] == '>' || s[i] == '`' || s[i] == '_')) {
    ++i;
  }
  return s.substr(i);
}

// If `line` starts with `label` followed by ':' (emphasis allowed around
// it), returns the text after the colon.
std::optional<std::string> labeled_value(std::string_view line, std::string_view label) {
  line = strip_decorations(line);
  if (!detail::starts_with_icase(line, label)) return std::nullopt;
  std::size_t i = label.size();
  while (i < line.size() && (line[i] == '*' || line[i] == '_' || line[i] == ' ')) ++i;
  if (i >= line.size() || line[i] != ':') return std::nullopt;
  ++i;
  while (i < line.size() && (line[i] == '*' || line[i] == '_' || detail::is_space(line[i]))) ++i;
  return detail::trim(line.substr(i));
}

std::size_t parse_selection(const std::string& value, std::size_t n_branches) {
  static const std::regex kSel(R"(^(?:(?:branch|candidate|option)\s+)?[\(\[]?([A-Za-z]+)(?![A-Za-z]))",
                               std::regex::icase);
  std::smatch m;
  if (!std::regex_search(value, m, kSel)) throw ReplyParseError("SELECTED: cannot read a branch letter");
  const auto idx = branch_index(m.str(1));
  if (!idx || *idx >= n_branches) {
    throw ReplyParseError("SELECTED: '" + m.str(1) + "' is out of range for " + std::to_string(n_branches) +
                          " branches");
  }
  return *idx;
}

double parse_confidence(const std::string& value) {
  static const std::regex kNum(R"(^([0-9]*\.?[0-9]+)(?!\.?[0-9]))");
  std::smatch m;
  if (!std::regex_search(value, m, kNum)) throw ReplyParseError("CONFIDENCE: not a decimal number");
  const double v = std::stod(m.str(1));
  if (v < 0.0 || v > 1.0) throw ReplyParseError("CONFIDENCE: value outside [0, 1]");
  return v;
}

}  // namespace

AuditDecision parse_judge_reply(std::string_view text, std::size_t n_branches) {
  std::optional<std::string> selected, confidence, rationale;
  for (const auto& line : detail::split_lines(text)) {
    if (!selected) {
      if (auto v = labeled_value(line, "SELECTED")) {
        selected = std::move(v);
        continue;
      }
    }
    if (!confidence) {
      if (auto v = labeled_value(line, "CONFIDENCE")) {
        confidence = std::move(v);
        continue;
      }
    }
    if (!rationale) {
      if (auto v = labeled_value(line, "RATIONALE")) rationale = std::move(v);
    }
  }
  if (!selected) throw ReplyParseError("missing SELECTED line");
  AuditDecision d;
  d.selected = parse_selection(*selected, n_branches);
  if (confidence) {
    d.alpha = parse_confidence(*confidence);
  } else {
    d.alpha = 1.0;
    d.confidence_defaulted = true;
  }
  d.rationale = rationale.value_or("");
  return d;
}

std::string format_judge_reply(const AuditDecision& d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", d.alpha);
  return "SELECTED: " + branch_letter(d.selected) + "\nCONFIDENCE: " + buf + "\nRATIONALE: " + d.rationale;
}

ScriptedOracle::ScriptedOracle(OracleParams params, NormalizedAnswer gold)
    : params_(params), gold_(std::move(gold)) {
  if (!(params_.q >= 0.0 && params_.q <= 1.0)) throw ConfigError("oracle_q must lie in [0, 1]");
  if (!(params_.alpha_emit >= 0.0 && params_.alpha_emit <= 1.0)) throw ConfigError("oracle_alpha must lie in [0, 1]");
}

ScriptedOracle::ScriptedOracle(OracleParams params, std::map<std::string, NormalizedAnswer> gold_by_instance)
    : params_(params), gold_by_instance_(std::move(gold_by_instance)) {
  if (!(params_.q >= 0.0 && params_.q <= 1.0)) throw ConfigError("oracle_q must lie in [0, 1]");
  if (!(params_.alpha_emit >= 0.0 && params_.alpha_emit <= 1.0)) throw ConfigError("oracle_alpha must lie in [0, 1]");
}

std::optional<NormalizedAnswer> ScriptedOracle::gold_for(const std::string& instance) const {
  auto it = gold_by_instance_.find(instance);
  if (it != gold_by_instance_.end()) return it->second;
  return gold_;
}

JudgeReply ScriptedOracle::judge(const JudgeRequest& request) {
  const std::size_t n = request.n_branches();
  if (n == 0) throw std::invalid_argument("ScriptedOracle: request has no branches");
  const auto gold = gold_for(request.instance_id);

  std::vector<std::size_t> correct, rest;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& answers = request.branch_answers[i];
    const bool ok = gold && std::any_of(answers.begin(), answers.end(),
                                        [&](const NormalizedAnswer& a) { return answers_equal(a, *gold); });
    (ok ? correct : rest).push_back(i);
  }

  const std::uint64_t key = derive_key(params_.seed, {hash_string(request.instance_id),
                                                      static_cast<std::uint64_t>(request.site),
                                                      request.call_index});
  const double coin = unit_interval(mix64(key ^ 0x51ULL));
  const std::uint64_t pick = mix64(key ^ 0xA7ULL);

  const std::vector<std::size_t>* pool = &rest;
  std::vector<std::size_t> all;
  if (correct.empty() || rest.empty()) {
    all.resize(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    pool = &all;
  } else if (coin < params_.q) {
    pool = &correct;
  }

  JudgeReply out;
  out.decision.selected = (*pool)[pick % pool->size()];
  out.decision.alpha = params_.alpha_emit;
  out.decision.rationale = "Branch " + branch_letter(out.decision.selected) + " is the most consistent with the evidence.";
  out.replies.push_back(format_judge_reply(out.decision));
  return out;
}

RemoteJudge::RemoteJudge(std::shared_ptr<CompletionBackend> client, int max_retries)
    : client_(std::move(client)), max_retries_(max_retries) {
  if (!client_) throw std::invalid_argument("RemoteJudge: null client");
  if (max_retries_ < 0) throw ConfigError("max_retries must be non-negative");
}

JudgeReply RemoteJudge::judge(const JudgeRequest& request) {
  JudgeReply out;
  const std::vector<ChatMessage> messages{{"user", request.prompt}};
  std::string last_error;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    out.replies.push_back(client_->complete(messages));
    try {
      out.decision = parse_judge_reply(out.replies.back(), request.n_branches());
      return out;
    } catch (const ReplyParseError& e) {
      last_error = e.what();
    }
  }
  throw BackendError("judge reply unparseable after " + std::to_string(out.replies.size()) +
                     " attempts: " + last_error);
}

namespace {

Adjudication run_request(JudgeBackend& backend, JudgeRequest request) {
  Adjudication out;
  const std::size_t prompt_tokens = estimate_tokens(request.prompt);
  auto reply = backend.judge(request);
  out.decision = std::move(reply.decision);
  out.replies = std::move(reply.replies);
  const std::size_t attempts = std::max<std::size_t>(1, out.replies.size());
  out.tokens_in = prompt_tokens * attempts;
  for (const auto& r : out.replies) out.tokens_out += estimate_tokens(r);
  out.prompt = std::move(request.prompt);
  if (out.decision.selected >= request.n_branches()) {
    throw BackendError("judge selected branch " + std::to_string(out.decision.selected) + " of " +
                       std::to_string(request.n_branches()));
  }
  return out;
}

}  // namespace

Adjudication adjudicate(const DivergencePacket& packet, const ReasoningTree& tree, JudgeBackend& backend,
                        const Rubric& rubric, const std::string& instance_id, std::uint64_t call_index) {
  JudgeRequest req;
  req.instance_id = instance_id;
  req.site = static_cast<std::int64_t>(packet.cdp);
  req.call_index = call_index;
  req.prompt = render_packet(packet, rubric);
  req.hints_visible = packet.include_support_hints;
  for (const auto& b : packet.branches) {
    req.branch_answers.push_back(tree.answers_below(b.child));
    req.support.push_back(b.support_size);
  }
  return run_request(backend, std::move(req));
}

Adjudication adjudicate(const ConsensusReviewPacket& packet, JudgeBackend& backend, const Rubric& rubric,
                        const std::string& instance_id, std::uint64_t call_index) {
  JudgeRequest req;
  req.instance_id = instance_id;
  req.site = kTerminalReviewSite;
  req.call_index = call_index;
  req.prompt = render_packet(packet, rubric);
  req.hints_visible = packet.include_support_hints;
  for (const auto& c : packet.candidates) {
    req.branch_answers.push_back(c.answer ? std::vector<NormalizedAnswer>{*c.answer}
                                          : std::vector<NormalizedAnswer>{});
    req.support.push_back(c.support_size);
  }
  return run_request(backend, std::move(req));
}

FlipReport sycophancy_probe(const std::vector<AgentSlate>& slates, const AuditSetup& setup,
                            JudgeBackend& backend, std::size_t trials, std::size_t window) {
  if (setup.splitter == nullptr || setup.embedder == nullptr) {
    throw std::invalid_argument("sycophancy_probe: splitter and embedder are required");
  }
  FlipReport report;
  report.trials = trials;
  for (const auto& slate : slates) {
    const auto gold = slate.gold();
    if (!gold) continue;
    const auto mv = majority_answer(slate);
    if (mv.status != VoteStatus::Unique || answers_equal(*mv.answer, *gold)) continue;
    const auto tree = build_slate_tree(slate, *setup.splitter, *setup.embedder, setup.tree);
    const auto fpd = locate_fpd(tree, *gold, *mv.answer);
    if (!fpd) continue;

    auto shown = build_packet(tree, fpd->node, window, setup.tree.delta_depth, true, slate.question);
    auto hidden = shown;
    hidden.include_support_hints = false;
    std::size_t largest = 0;
    for (std::size_t i = 1; i < shown.branches.size(); ++i) {
      if (shown.branches[i].support_size > shown.branches[largest].support_size) largest = i;
    }
    ++report.packets;
    report.instances.push_back(slate.id);
    for (std::size_t t = 0; t < trials; ++t) {
      const auto on = adjudicate(shown, tree, backend, setup.rubric, slate.id, t);
      const auto off = adjudicate(hidden, tree, backend, setup.rubric, slate.id, t);
      ++report.decisions;
      if (on.decision.selected == largest && off.decision.selected != largest) ++report.flips;
    }
  }
  report.flip_rate = report.decisions == 0 ? 0.0
                                           : static_cast<double>(report.flips) / static_cast<double>(report.decisions);
  return report;
}

std::string flip_report_json(const FlipReport& r) {
  nlohmann::ordered_json j;
  j["packets"] = r.packets;
  j["trials"] = r.trials;
  j["decisions"] = r.decisions;
  j["flips"] = r.flips;
  j["flip_rate"] = r.flip_rate;
  j["instances"] = r.instances;
  return j.dump();
}

}  // namespace divaudit
