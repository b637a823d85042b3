/// @file trap_miner.cpp

#include "divaudit/trap_miner.hpp"

#include <fstream>

#include <json.hpp>

#include "divaudit/errors.hpp"
#include "divaudit/evalharness.hpp"
#include "text_util.hpp"

namespace divaudit {

using ojson = nlohmann::ordered_json;

namespace {

std::string chosen_reply(const std::string& gt, const std::string& err) {
  AuditDecision d;
  d.selected = *branch_index(gt);
  d.alpha = 1.0;
  d.rationale = "Branch " + gt + " follows validly from the shared reasoning and respects the problem's "
                "constraints; how many agents back branch " + err + " is not evidence for it.";
  return format_judge_reply(d);
}

std::string rejected_reply(const std::string& err, bool err_larger) {
  AuditDecision d;
  d.selected = *branch_index(err);
  d.alpha = 1.0;
  d.rationale = err_larger ? "Branch " + err + " is supported by more agents, so it is the more reliable choice."
                           : "Branch " + err + " reads as the more convincing continuation.";
  return format_judge_reply(d);
}

}  // namespace

MiningResult mine_traps(const std::vector<AgentSlate>& slates, const AuditSetup& setup, std::size_t window) {
  if (setup.splitter == nullptr || setup.embedder == nullptr) {
    throw std::invalid_argument("mine_traps: splitter and embedder are required");
  }
  MiningResult out;
  for (const auto& slate : slates) {
    ++out.skips.total;
    const auto gold = slate.gold();
    if (!gold) {
      ++out.skips.no_gold;
      continue;
    }
    switch (classify_regime(slate)) {
      case Regime::MajC: ++out.skips.majority_correct; continue;
      case Regime::Tie: ++out.skips.tie; continue;
      case Regime::AllWrong: ++out.skips.all_wrong; continue;
      case Regime::MinC: break;
    }
    const auto majority = *majority_answer(slate).answer;
    const auto tree = build_slate_tree(slate, *setup.splitter, *setup.embedder, setup.tree);
    const auto fpd = locate_fpd(tree, *gold, majority);
    if (!fpd) {
      ++out.skips.no_fpd;
      continue;
    }
    const auto packet = build_packet(tree, fpd->node, window, setup.tree.delta_depth, true, slate.question);

    PreferenceTriplet t;
    t.id = slate.id;
    t.prompt = render_packet(packet, setup.rubric);
    const auto& children = tree.node(fpd->node).children;
    for (std::size_t i = 0; i < children.size(); ++i) {
      if (children[i] == fpd->gold_child) t.meta.gt_branch = i;
      if (children[i] == fpd->majority_child) t.meta.err_branch = i;
    }
    t.meta.support_gt = tree.node(fpd->gold_child).support.size();
    t.meta.support_err = tree.node(fpd->majority_child).support.size();
    t.meta.fpd_depth = tree.node(fpd->node).depth;
    t.meta.dtype = packet.dtype;
    t.meta.fpd_node = fpd->node;
    t.meta.gt_node = fpd->gold_child;
    t.meta.err_node = fpd->majority_child;
    const auto gt = branch_letter(t.meta.gt_branch);
    const auto err = branch_letter(t.meta.err_branch);
    t.chosen = chosen_reply(gt, err);
    t.rejected = rejected_reply(err, t.meta.support_err > t.meta.support_gt);
    out.triplets.push_back(std::move(t));
    ++out.skips.kept;
  }
  return out;
}

std::string skip_stats_json(const SkipStats& s) {
  ojson j;
  j["total"] = s.total;
  j["kept"] = s.kept;
  j["no_gold"] = s.no_gold;
  j["majority_correct"] = s.majority_correct;
  j["tie"] = s.tie;
  j["all_wrong"] = s.all_wrong;
  j["no_fpd"] = s.no_fpd;
  return j.dump();
}

std::string triplet_to_json_line(const PreferenceTriplet& t) {
  ojson meta;
  meta["support_gt"] = t.meta.support_gt;
  meta["support_err"] = t.meta.support_err;
  meta["fpd_depth"] = t.meta.fpd_depth;
  meta["dtype"] = to_string(t.meta.dtype);
  meta["gt_branch"] = t.meta.gt_branch;
  meta["err_branch"] = t.meta.err_branch;
  meta["fpd_node"] = t.meta.fpd_node;
  meta["gt_node"] = t.meta.gt_node;
  meta["err_node"] = t.meta.err_node;
  ojson j;
  j["id"] = t.id;
  j["prompt"] = t.prompt;
  j["chosen"] = t.chosen;
  j["rejected"] = t.rejected;
  j["meta"] = std::move(meta);
  return j.dump();
}

PreferenceTriplet triplet_from_json_line(std::string_view line, std::size_t line_no) {
  try {
    const auto j = ojson::parse(line);
    PreferenceTriplet t;
    t.id = j.at("id").get<std::string>();
    t.prompt = j.at("prompt").get<std::string>();
    t.chosen = j.at("chosen").get<std::string>();
    t.rejected = j.at("rejected").get<std::string>();
    const auto& m = j.at("meta");
    t.meta.support_gt = m.at("support_gt").get<std::size_t>();
    t.meta.support_err = m.at("support_err").get<std::size_t>();
    t.meta.fpd_depth = m.at("fpd_depth").get<std::size_t>();
    const auto dtype = m.at("dtype").get<std::string>();
    if (dtype != "Early" && dtype != "Late") throw std::invalid_argument("dtype must be Early or Late");
    t.meta.dtype = dtype == "Early" ? DivergenceType::Early : DivergenceType::Late;
    t.meta.gt_branch = m.value("gt_branch", std::size_t{0});
    t.meta.err_branch = m.value("err_branch", std::size_t{1});
    t.meta.fpd_node = m.value("fpd_node", std::size_t{0});
    t.meta.gt_node = m.value("gt_node", std::size_t{0});
    t.meta.err_node = m.value("err_node", std::size_t{0});
    return t;
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad triplet: ") + e.what(), line_no);
  }
}

void export_triplets(const std::vector<PreferenceTriplet>& triplets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : triplets) out << triplet_to_json_line(t) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<PreferenceTriplet> load_triplets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<PreferenceTriplet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    out.push_back(triplet_from_json_line(line, line_no));
  }
  return out;
}

}  // namespace divaudit
