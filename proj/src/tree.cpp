/// @file tree.cpp

#include "divaudit/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "divaudit/errors.hpp"

namespace divaudit {

void TreeConfig::validate() const {
  if (!(tau >= -1.0 && tau <= 1.01)) throw ConfigError("tau must lie in [-1, 1.01]");
  if (!(rho_ema > 0.0 && rho_ema <= 1.0)) throw ConfigError("rho_ema must lie in (0, 1]");
  if (delta_depth < 0) throw ConfigError("delta_depth must be non-negative");
}

const char* to_string(DivergenceType t) { return t == DivergenceType::Early ? "Early" : "Late"; }

std::optional<NormalizedAnswer> ReasoningTree::leaf_answer(NodeId id) const {
  auto it = leaf_answers_.find(id);
  if (it == leaf_answers_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> ReasoningTree::path_to(NodeId id) const {
  std::vector<NodeId> path;
  for (NodeId cur = id; cur != kRootId; cur = node(cur).parent) path.push_back(cur);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<NodeId> ReasoningTree::terminal_nodes() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (!n.terminal_agents.empty()) out.push_back(n.id);
  }
  return out;
}

std::vector<NormalizedAnswer> ReasoningTree::answers_below(NodeId id) const {
  std::vector<NormalizedAnswer> out;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    if (auto a = leaf_answer(cur)) out.push_back(*a);
    const auto& ch = node(cur).children;
    stack.insert(stack.end(), ch.rbegin(), ch.rend());
  }
  return out;
}

std::string ReasoningTree::dump_text() const {
  std::ostringstream os;
  std::function<void(NodeId)> visit = [&](NodeId id) {
    const auto& n = node(id);
    os << std::string(2 * n.depth, ' ') << '[' << n.id << "] ";
    os << "support=" << n.support.size() << " {";
    for (std::size_t i = 0; i < n.support.size(); ++i) os << (i ? "," : "") << n.support[i];
    os << "}";
    if (id == kRootId) {
      os << " <root>";
    } else {
      os << ' ' << n.representative_text;
    }
    if (auto a = leaf_answer(id)) os << " => " << a->canonical;
    os << '\n';
    for (NodeId c : n.children) visit(c);
  };
  if (!nodes_.empty()) visit(kRootId);
  return os.str();
}

std::string ReasoningTree::dump_json() const {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : nodes_) {
    nlohmann::ordered_json row;
    row["id"] = n.id;
    row["depth"] = n.depth;
    row["support"] = n.support;
    row["repr"] = n.representative_text;
    row["children"] = n.children;
    nodes.push_back(std::move(row));
  }
  nlohmann::ordered_json answers = nlohmann::ordered_json::object();
  for (const auto& [id, a] : leaf_answers_) answers[std::to_string(id)] = a.canonical;
  nlohmann::ordered_json j;
  j["nodes"] = std::move(nodes);
  j["leaf_answers"] = std::move(answers);
  return j.dump();
}

ReasoningTree build_tree(const std::vector<Trace>& traces,
                         const std::map<std::string, NormalizedAnswer>& answers,
                         const TreeConfig& cfg, const StepEmbedder& embedder) {
  if (traces.empty()) throw std::invalid_argument("build_tree: empty trace list");
  cfg.validate();

  ReasoningTree tree;
  auto& nodes = tree.nodes_;
  nodes.push_back(TreeNode{});

  for (const auto& trace : traces) {
    if (trace.steps.empty()) throw std::invalid_argument("build_tree: trace '" + trace.agent_id + "' has no steps");
    if (tree.agent_paths_.count(trace.agent_id) != 0) {
      throw std::invalid_argument("build_tree: duplicate agent '" + trace.agent_id + "'");
    }
    const std::string& agent = trace.agent_id;
    tree.agents_.push_back(agent);
    nodes[kRootId].support.push_back(agent);

    NodeId cur = kRootId;
    std::vector<NodeId> path;
    path.reserve(trace.steps.size());
    for (const auto& step : trace.steps) {
      Embedding h = embedder.embed(step.text);
      std::optional<NodeId> best;
      double best_sim = -std::numeric_limits<double>::infinity();
      for (NodeId c : nodes[cur].children) {
        const double sim = cosine(h, *nodes[c].centroid);
        if (sim > best_sim) {  // strict: earlier (lower id) child wins ties
          best_sim = sim;
          best = c;
        }
      }
      if (best && best_sim >= cfg.tau) {
        auto& target = nodes[*best];
        if (cfg.rho_ema == 1.0) {
          target.centroid = std::move(h);
        } else {
          const auto mu = target.centroid->values();
          const auto hv = h.values();
          std::vector<double> mixed(mu.size());
          for (std::size_t i = 0; i < mu.size(); ++i) {
            mixed[i] = (1.0 - cfg.rho_ema) * mu[i] + cfg.rho_ema * hv[i];
          }
          try {
            target.centroid = Embedding::normalized(std::move(mixed));
          } catch (const std::invalid_argument&) {
            target.centroid = std::move(h);  // exact cancellation
          }
        }
        ++target.integrated_count;
        cur = *best;
      } else {
        TreeNode fresh;
        fresh.id = nodes.size();
        fresh.centroid = std::move(h);
        fresh.representative_text = step.text;
        fresh.first_agent = agent;
        fresh.depth = nodes[cur].depth + 1;
        fresh.parent = cur;
        fresh.integrated_count = 1;
        nodes[cur].children.push_back(fresh.id);
        nodes.push_back(std::move(fresh));
        cur = nodes.size() - 1;
      }
      nodes[cur].support.push_back(agent);
      path.push_back(cur);
    }
    nodes[cur].terminal_agents.push_back(agent);
    tree.agent_paths_.emplace(agent, std::move(path));
  }

  // Label terminal nodes by majority among the agents ending there.
  for (const auto& n : nodes) {
    if (n.terminal_agents.empty()) continue;
    std::vector<std::optional<NormalizedAnswer>> ending;
    for (const auto& a : n.terminal_agents) {
      auto it = answers.find(a);
      ending.push_back(it == answers.end() ? std::nullopt : std::optional(it->second));
    }
    const auto groups = tally_answers(ending);
    if (groups.empty()) continue;
    const AnswerCount* winner = &groups.front();
    for (const auto& g : groups) {
      if (g.count > winner->count) winner = &g;  // ties keep the earliest agent
    }
    tree.leaf_answers_.emplace(n.id, winner->answer);
  }
  return tree;
}

std::vector<NodeId> find_cdps(const ReasoningTree& tree) {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{kRootId};
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    const auto& ch = tree.node(cur).children;
    if (ch.size() >= 2) out.push_back(cur);
    stack.insert(stack.end(), ch.rbegin(), ch.rend());
  }
  return out;
}

DivergenceType divergence_type(const ReasoningTree& tree, NodeId u, int delta) {
  if (!tree.is_cdp(u)) throw std::invalid_argument("divergence_type: node " + std::to_string(u) + " is not a CDP");
  return static_cast<int>(tree.node(u).depth) < delta ? DivergenceType::Early : DivergenceType::Late;
}

std::optional<FirstDisagreement> locate_fpd(const ReasoningTree& tree, const NormalizedAnswer& gold,
                                            const NormalizedAnswer& majority) {
  if (answers_equal(gold, majority)) return std::nullopt;
  const std::size_t n = tree.size();
  std::vector<char> bears_gold(n, 0), bears_maj(n, 0);
  for (const auto& [id, a] : tree.leaf_answers()) {
    if (answers_equal(a, gold)) bears_gold[id] = 1;
    if (answers_equal(a, majority)) bears_maj[id] = 1;
  }
  // Children always carry larger ids than their parent.
  for (NodeId id = n - 1; id > kRootId; --id) {
    const NodeId p = tree.node(id).parent;
    bears_gold[p] |= bears_gold[id];
    bears_maj[p] |= bears_maj[id];
  }
  if (!bears_gold[kRootId] || !bears_maj[kRootId]) return std::nullopt;

  auto cdps = find_cdps(tree);
  std::sort(cdps.begin(), cdps.end(), [&](NodeId a, NodeId b) {
    const auto da = tree.node(a).depth, db = tree.node(b).depth;
    return da != db ? da < db : a < b;
  });
  for (NodeId u : cdps) {
    std::optional<NodeId> g, m;
    for (NodeId c : tree.node(u).children) {
      if (!g && bears_gold[c] && !bears_maj[c]) g = c;
      if (!m && bears_maj[c] && !bears_gold[c]) m = c;
    }
    if (g && m) return FirstDisagreement{u, *g, *m};
  }
  return std::nullopt;
}

BranchStats branch_count(const ReasoningTree& tree) {
  BranchStats out;
  for (NodeId id : tree.terminal_nodes()) {
    out.nodes.push_back(id);
    out.multiplicity.push_back(tree.node(id).terminal_agents.size());
  }
  out.count = out.nodes.size();
  return out;
}

}  // namespace divaudit

namespace divaudit {

ReasoningTree build_slate_tree(const AgentSlate& slate, const Splitter& splitter,
                               const StepEmbedder& embedder, const TreeConfig& cfg) {
  std::vector<Trace> traces;
  std::map<std::string, NormalizedAnswer> answers;
  traces.reserve(slate.agents.size());
  for (const auto& a : slate.agents) {
    traces.push_back(splitter.atomize(a));
    if (auto ans = effective_answer(a)) answers.emplace(a.agent_id, *ans);
  }
  return build_tree(traces, answers, cfg, embedder);
}

}  // namespace divaudit
