/// @file tree.hpp
/// @brief Reasoning tree built by embedding-guided incremental insertion of
/// atomized traces. Shared step prefixes merge; disagreements branch.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "divaudit/atomizer.hpp"
#include "divaudit/embedder.hpp"
#include "divaudit/slate.hpp"

namespace divaudit {

using NodeId = std::size_t;
inline constexpr NodeId kRootId = 0;

struct TreeConfig {
  double tau = 0.82;       // similarity threshold for path integration
  double rho_ema = 0.3;    // centroid smoothing factor
  int delta_depth = 3;     // early/late divergence boundary

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

struct TreeNode {
  NodeId id = 0;
  std::optional<Embedding> centroid;  // empty only for the virtual root
  std::vector<std::string> support;   // agent ids in slate order
  std::string representative_text;
  std::string first_agent;            // agent whose step created the node
  std::vector<NodeId> children;       // creation order
  std::size_t depth = 0;
  std::size_t integrated_count = 0;
  NodeId parent = kRootId;
  std::vector<std::string> terminal_agents;  // agents whose path ends here
};

enum class DivergenceType { Early, Late };

const char* to_string(DivergenceType t);

class ReasoningTree {
 public:
  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  const std::map<NodeId, NormalizedAnswer>& leaf_answers() const { return leaf_answers_; }
  std::optional<NormalizedAnswer> leaf_answer(NodeId id) const;

  /// Root-to-terminal node sequence (root excluded) for each agent.
  const std::map<std::string, std::vector<NodeId>>& agent_paths() const { return agent_paths_; }

  /// Agents in insertion order.
  const std::vector<std::string>& agents() const { return agents_; }

  bool is_cdp(NodeId id) const { return node(id).children.size() >= 2; }

  /// Root-to-id path, root excluded.
  std::vector<NodeId> path_to(NodeId id) const;

  /// Nodes where at least one agent path terminates, in id order.
  std::vector<NodeId> terminal_nodes() const;

  /// Leaf labels found in the subtree rooted at id (including id itself).
  std::vector<NormalizedAnswer> answers_below(NodeId id) const;

  /// Indented text rendering, one node per line.
  std::string dump_text() const;

  /// {"nodes":[{id,depth,support,repr,children}],"leaf_answers":{...}}
  std::string dump_json() const;

 private:
  friend ReasoningTree build_tree(const std::vector<Trace>&,
                                  const std::map<std::string, NormalizedAnswer>&,
                                  const TreeConfig&, const StepEmbedder&);
  std::vector<TreeNode> nodes_;
  std::map<NodeId, NormalizedAnswer> leaf_answers_;
  std::map<std::string, std::vector<NodeId>> agent_paths_;
  std::vector<std::string> agents_;
};

/// Inserts traces in order. At each step the best child by cosine absorbs
/// the step when its similarity reaches tau (ties go to the oldest child),
/// with the centroid updated by EMA and renormalized; otherwise a new child
/// is created. Agents missing from `answers` leave their terminal node
/// unlabeled unless another agent terminating there has an answer.
ReasoningTree build_tree(const std::vector<Trace>& traces,
                         const std::map<std::string, NormalizedAnswer>& answers,
                         const TreeConfig& cfg, const StepEmbedder& embedder);

/// Pre-order list of nodes with at least two children.
std::vector<NodeId> find_cdps(const ReasoningTree& tree);

/// Early iff depth < delta. Throws std::invalid_argument for non-CDP input.
DivergenceType divergence_type(const ReasoningTree& tree, NodeId u, int delta);

struct FirstDisagreement {
  NodeId node;
  NodeId gold_child;      // subtree bears gold leaves only
  NodeId majority_child;  // subtree bears majority leaves only
};

/// Shallowest CDP (lowest id on ties) with one child whose subtree bears
/// gold but not the majority answer and another bearing the majority
/// answer but not gold. Absent when no such node exists or the
/// preconditions do not hold.
std::optional<FirstDisagreement> locate_fpd(const ReasoningTree& tree, const NormalizedAnswer& gold,
                                            const NormalizedAnswer& majority);

struct BranchStats {
  std::size_t count = 0;                // K
  std::vector<std::size_t> multiplicity;  // agents terminating per branch
  std::vector<NodeId> nodes;
};

/// Distinct hypotheses after deduplication: one branch per terminal node.
BranchStats branch_count(const ReasoningTree& tree);

}  // namespace divaudit

namespace divaudit {

/// Atomizes every agent of the slate and builds its tree, labeling
/// terminal nodes with effective answers.
ReasoningTree build_slate_tree(const AgentSlate& slate, const Splitter& splitter,
                               const StepEmbedder& embedder, const TreeConfig& cfg);

}  // namespace divaudit
