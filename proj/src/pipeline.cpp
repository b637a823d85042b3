/// @file pipeline.cpp

#include "divaudit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

#include "divaudit/errors.hpp"

namespace divaudit {

const char* to_string(Method m) {
  switch (m) {
    case Method::MV: return "MV";
    case Method::Judge: return "Judge";
    case Method::Auditor: return "Auditor";
    case Method::Solver: return "Solver";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "MV") return Method::MV;
  if (s == "Judge") return Method::Judge;
  if (s == "Auditor") return Method::Auditor;
  if (s == "Solver") return Method::Solver;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

const char* to_string(AnswerStatus s) {
  switch (s) {
    case AnswerStatus::Answer: return "answer";
    case AnswerStatus::Tie: return "tie";
    case AnswerStatus::Abstain: return "abstain";
  }
  return "?";
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Commit: return "commit";
    case EventKind::Defer: return "defer";
    case EventKind::TerminalReview: return "terminal_review";
    case EventKind::FullSlate: return "full_slate";
    case EventKind::Fallback: return "fallback";
  }
  return "?";
}

void PolicyConfig::validate() const {
  if (!(lambda_gate >= 0.0 && lambda_gate <= 1.0)) throw ConfigError("lambda_gate must lie in [0, 1]");
  if (beam_k < 1) throw ConfigError("beam_k must be >= 1");
  if (window_k < 1) throw ConfigError("window_k must be >= 1");
  if (delta_depth < 0) throw ConfigError("delta_depth must be non-negative");
}

std::size_t AggregationResult::judge_calls() const {
  return static_cast<std::size_t>(std::count_if(audit_log.begin(), audit_log.end(), [](const AuditEvent& e) {
    return e.attempts > 0;
  }));
}

namespace {

void set_answer(AggregationResult& r, std::optional<NormalizedAnswer> a) {
  r.answer = std::move(a);
  r.status = r.answer ? AnswerStatus::Answer : AnswerStatus::Abstain;
}

AuditEvent event_from(const Adjudication& adj, EventKind kind, std::int64_t site, std::size_t lineage) {
  AuditEvent e;
  e.kind = kind;
  e.site = site;
  e.lineage = lineage;
  e.selected = adj.decision.selected;
  e.alpha = adj.decision.alpha;
  e.prompt = adj.prompt;
  e.attempts = std::max<std::size_t>(1, adj.replies.size());
  e.tokens_in = adj.tokens_in;
  e.tokens_out = adj.tokens_out;
  return e;
}

void account(AggregationResult& r, const AuditEvent& e) {
  r.tokens_in += e.tokens_in;
  r.tokens_out += e.tokens_out;
  r.audit_log.push_back(e);
}

std::size_t largest_index(const std::vector<std::size_t>& support) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < support.size(); ++i) {
    if (support[i] > support[best]) best = i;
  }
  return best;
}

struct Lineage {
  std::size_t id;
  NodeId node;
  bool judge_selected;
};

}  // namespace

AggregationResult majority_vote(const AgentSlate& slate) {
  AggregationResult r;
  r.instance_id = slate.id;
  r.method = Method::MV;
  const auto mv = majority_answer(slate);
  switch (mv.status) {
    case VoteStatus::Unique: set_answer(r, mv.answer); break;
    case VoteStatus::Tie: r.status = AnswerStatus::Tie; break;
    case VoteStatus::Abstain: r.status = AnswerStatus::Abstain; break;
  }
  return r;
}

AggregationResult judge_baseline(const AgentSlate& slate, JudgeBackend& backend, const Rubric& rubric) {
  if (slate.agents.size() < 2) throw std::invalid_argument("judge_baseline: needs at least two agents");
  JudgeRequest req;
  req.instance_id = slate.id;
  req.site = kFullSlateSite;
  req.prompt = render_full_slate(slate, rubric);
  req.hints_visible = false;
  std::vector<std::optional<NormalizedAnswer>> answers;
  for (const auto& a : slate.agents) {
    answers.push_back(effective_answer(a));
    req.branch_answers.push_back(answers.back() ? std::vector<NormalizedAnswer>{*answers.back()}
                                                : std::vector<NormalizedAnswer>{});
    req.support.push_back(1);
  }
  const std::size_t prompt_tokens = estimate_tokens(req.prompt);
  try {
    Adjudication adj;
    auto reply = backend.judge(req);
    adj.decision = reply.decision;
    adj.replies = std::move(reply.replies);
    if (adj.decision.selected >= slate.agents.size()) throw BackendError("judge selected an unknown candidate");
    adj.tokens_in = prompt_tokens * std::max<std::size_t>(1, adj.replies.size());
    for (const auto& s : adj.replies) adj.tokens_out += estimate_tokens(s);
    adj.prompt = std::move(req.prompt);
    AggregationResult r;
    r.instance_id = slate.id;
    r.method = Method::Judge;
    account(r, event_from(adj, EventKind::FullSlate, kFullSlateSite, 0));
    set_answer(r, answers[adj.decision.selected]);
    return r;
  } catch (const BackendError& e) {
    AggregationResult r = majority_vote(slate);
    r.method = Method::Judge;
    r.degraded = true;
    AuditEvent ev;
    ev.kind = EventKind::Fallback;
    ev.site = kFullSlateSite;
    ev.note = e.what();
    r.audit_log.push_back(std::move(ev));
    return r;
  }
}

AggregationResult audit_aggregate(const AgentSlate& slate, const AuditSetup& setup, const PolicyConfig& policy,
                                  JudgeBackend& backend) {
  if (setup.splitter == nullptr || setup.embedder == nullptr) {
    throw std::invalid_argument("audit_aggregate: splitter and embedder are required");
  }
  policy.validate();
  const auto tree = build_slate_tree(slate, *setup.splitter, *setup.embedder, setup.tree);

  AggregationResult r;
  r.instance_id = slate.id;
  r.method = Method::Auditor;

  std::size_t next_lineage = 1;
  std::vector<Lineage> beam{{0, kRootId, true}};
  r.max_beam = 1;
  auto active = [&] {
    return std::any_of(beam.begin(), beam.end(),
                       [&](const Lineage& l) { return !tree.node(l.node).children.empty(); });
  };

  while (active()) {
    std::vector<Lineage> next;
    bool expanded = false;
    for (const auto& lin : beam) {
      const auto& children = tree.node(lin.node).children;
      if (children.empty()) {
        next.push_back(lin);
        continue;
      }
      if (children.size() == 1) {
        next.push_back({lin.id, children.front(), lin.judge_selected});
        continue;
      }
      const auto packet = build_packet(tree, lin.node, policy.window_k, policy.delta_depth, policy.hints, slate.question);
      const auto site = static_cast<std::int64_t>(lin.node);
      std::size_t selected = 0;
      double alpha = 1.0;
      try {
        const auto adj = adjudicate(packet, tree, backend, setup.rubric, slate.id, 0);
        selected = adj.decision.selected;
        alpha = adj.decision.alpha;
        auto ev = event_from(adj, alpha >= policy.lambda_gate ? EventKind::Commit : EventKind::Defer, site, lin.id);
        ev.selected_node = children[selected];
        account(r, ev);
      } catch (const BackendError& e) {
        std::vector<std::size_t> support;
        for (const auto& b : packet.branches) support.push_back(b.support_size);
        selected = largest_index(support);
        alpha = 1.0;
        r.degraded = true;
        AuditEvent ev;
        ev.kind = EventKind::Fallback;
        ev.site = site;
        ev.lineage = lin.id;
        ev.selected = selected;
        ev.selected_node = children[selected];
        ev.note = e.what();
        r.audit_log.push_back(std::move(ev));
      }
      if (alpha >= policy.lambda_gate) {
        next.push_back({lin.id, children[selected], true});
      } else {
        expanded = true;
        for (std::size_t i = 0; i < children.size(); ++i) {
          next.push_back({i == selected ? lin.id : next_lineage++, children[i], i == selected});
        }
      }
    }
    if (expanded) {
      std::stable_sort(next.begin(), next.end(), [&](const Lineage& a, const Lineage& b) {
        if (a.judge_selected != b.judge_selected) return a.judge_selected;
        const auto sa = tree.node(a.node).support.size(), sb = tree.node(b.node).support.size();
        if (sa != sb) return sa > sb;
        return a.node < b.node;
      });
      if (next.size() > policy.beam_k) next.resize(policy.beam_k);
      std::sort(next.begin(), next.end(), [](const Lineage& a, const Lineage& b) { return a.id < b.id; });
    }
    beam = std::move(next);
    r.max_beam = std::max(r.max_beam, beam.size());
  }

  if (beam.size() == 1) {
    set_answer(r, tree.leaf_answer(beam.front().node));
    return r;
  }

  std::vector<NodeId> leaves;
  for (const auto& l : beam) leaves.push_back(l.node);
  const auto review = build_review_packet(tree, leaves, slate.question, policy.hints);
  try {
    const auto adj = adjudicate(review, backend, setup.rubric, slate.id, 0);
    auto ev = event_from(adj, EventKind::TerminalReview, kTerminalReviewSite, 0);
    ev.selected_node = review.candidates[adj.decision.selected].lineage;
    account(r, ev);
    set_answer(r, review.candidates[adj.decision.selected].answer);
  } catch (const BackendError& e) {
    std::vector<std::size_t> support;
    for (const auto& c : review.candidates) support.push_back(c.support_size);
    const std::size_t pick = largest_index(support);
    r.degraded = true;
    AuditEvent ev;
    ev.kind = EventKind::Fallback;
    ev.site = kTerminalReviewSite;
    ev.selected = pick;
    ev.selected_node = review.candidates[pick].lineage;
    ev.note = e.what();
    r.audit_log.push_back(std::move(ev));
    set_answer(r, review.candidates[pick].answer);
  }
  return r;
}

std::vector<MethodRun> run_methods(const std::vector<AgentSlate>& slates, const AuditSetup& setup,
                                   const PolicyConfig& policy, JudgeBackend* backend, const RunOptions& options) {
  std::vector<MethodRun> runs;
  for (Method m : options.methods) runs.push_back({m, std::vector<AggregationResult>(slates.size())});

  auto run_one = [&](std::size_t i) {
    for (auto& run : runs) {
      AggregationResult& out = run.results[i];
      try {
        switch (run.method) {
          case Method::MV: out = majority_vote(slates[i]); break;
          case Method::Judge:
            if (backend == nullptr) throw std::invalid_argument("no judge backend configured");
            out = judge_baseline(slates[i], *backend, setup.rubric);
            break;
          case Method::Auditor:
            if (backend == nullptr) throw std::invalid_argument("no judge backend configured");
            out = audit_aggregate(slates[i], setup, policy, *backend);
            break;
          case Method::Solver: throw std::invalid_argument("the Solver baseline is not implemented");
        }
      } catch (const std::exception& e) {
        out = AggregationResult{};
        out.method = run.method;
        out.error = e.what();
      }
      out.instance_id = slates[i].id;
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, slates.size()));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < slates.size(); ++i) run_one(i);
    return runs;
  }
  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = cursor++; i < slates.size(); i = cursor++) run_one(i);
    });
  }
  for (auto& t : workers) t.join();
  return runs;
}

}  // namespace divaudit
