/// @file trap_miner.hpp
/// @brief Preference triplets mined from majority-failure slates at their
/// first point of disagreement.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "divaudit/auditor.hpp"
#include "divaudit/tree.hpp"

namespace divaudit {

struct TripletMeta {
  std::size_t support_gt = 0;
  std::size_t support_err = 0;
  std::size_t fpd_depth = 0;
  DivergenceType dtype = DivergenceType::Early;
  std::size_t gt_branch = 0;   // branch index in the prompt
  std::size_t err_branch = 0;
  NodeId fpd_node = 0;
  NodeId gt_node = 0;
  NodeId err_node = 0;

  bool operator==(const TripletMeta&) const = default;
};

struct PreferenceTriplet {
  std::string id;
  std::string prompt;    // rendered packet with support hints
  std::string chosen;    // reply selecting the gold-bearing branch
  std::string rejected;  // reply selecting the majority-bearing branch
  TripletMeta meta;

  bool operator==(const PreferenceTriplet&) const = default;
};

struct SkipStats {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t no_gold = 0;
  std::size_t majority_correct = 0;
  std::size_t tie = 0;
  std::size_t all_wrong = 0;
  std::size_t no_fpd = 0;
};

struct MiningResult {
  std::vector<PreferenceTriplet> triplets;
  SkipStats skips;
};

/// Keeps slates whose unique plurality answer is wrong while some agent is
/// right, builds the tree, and emits one triplet per separable first point
/// of disagreement. Support hints are always rendered.
MiningResult mine_traps(const std::vector<AgentSlate>& slates, const AuditSetup& setup,
                        std::size_t window = kDefaultWindow);

std::string skip_stats_json(const SkipStats& s);

std::string triplet_to_json_line(const PreferenceTriplet& t);
PreferenceTriplet triplet_from_json_line(std::string_view line, std::size_t line_no = 0);
void export_triplets(const std::vector<PreferenceTriplet>& triplets, const std::filesystem::path& path);
std::vector<PreferenceTriplet> load_triplets(const std::filesystem::path& path);

}  // namespace divaudit
