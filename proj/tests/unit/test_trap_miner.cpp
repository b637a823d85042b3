#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "divaudit/trap_miner.hpp"
#include "fixtures.hpp"
#include "properties.hpp"

using namespace divaudit;

namespace {

const RuleSplitter kSplitter;
const HashingEmbedder kEmbedder;
const AuditSetup kSetup{&kSplitter, &kEmbedder, TreeConfig{}, Rubric{}};

std::filesystem::path temp(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("divaudit_traps_" + name);
}

}  // namespace

TEST(MineTraps, MajorityCorrectFiltered) {
  const auto r = mine_traps(fixtures::majc_corpus(10, 1), kSetup);
  EXPECT_TRUE(r.triplets.empty());
  EXPECT_EQ(r.skips.majority_correct, 10u);
  EXPECT_EQ(r.skips.total, 10u);
}

TEST(MineTraps, TrieWrongWrongGold) {
  const auto slate = fixtures::trie_slate({"3", "3", "7"}, "7");
  const auto r = mine_traps({slate}, kSetup);
  ASSERT_EQ(r.triplets.size(), 1u);
  const auto& t = r.triplets[0];
  EXPECT_EQ(t.meta.support_err, 1u);  // trie: each wrong agent is its own branch
  EXPECT_EQ(t.meta.support_gt, 1u);
  EXPECT_EQ(t.meta.fpd_depth, 0u);
  EXPECT_EQ(t.meta.gt_branch, 2u);
  EXPECT_EQ(t.meta.err_branch, 0u);
  const auto tree = build_slate_tree(slate, kSplitter, kEmbedder, TreeConfig{});
  const auto fpd = locate_fpd(tree, normalize_answer("7"), normalize_answer("3"));
  ASSERT_TRUE(fpd);
  EXPECT_EQ(t.meta.fpd_node, fpd->node);
  EXPECT_EQ(t.meta.gt_node, fpd->gold_child);
  EXPECT_EQ(t.meta.err_node, fpd->majority_child);
}

TEST(MineTraps, SharedWrongTraceGivesSupportTwo) {
  // Two agents share the wrong trace, so the wrong branch has support 2.
  const auto slate = fixtures::two_branch_slate("t", 5, 0, 2, 2, 1);
  const auto r = mine_traps({slate}, kSetup);
  ASSERT_EQ(r.triplets.size(), 1u);
  EXPECT_EQ(r.triplets[0].meta.support_err, 2u);
  EXPECT_EQ(r.triplets[0].meta.support_gt, 1u);
  EXPECT_EQ(r.triplets[0].meta.fpd_depth, 0u);
  EXPECT_EQ(r.triplets[0].meta.dtype, DivergenceType::Early);
}

TEST(MineTraps, NoSeparatingCdpIsSkipped) {
  // Gold and majority answers sit under one node; the only split is between
  // agents that end on the same terminal node.
  const auto steps = fixtures::synth_steps(3, 2);
  AgentSlate s = fixtures::make_slate("n", "q", "7", {{steps, "3", 2}});
  s.agents.push_back({"late", s.agents[0].text, "7"});
  const auto r = mine_traps({s}, kSetup);
  EXPECT_TRUE(r.triplets.empty());
  EXPECT_EQ(r.skips.no_fpd, 1u);
}

TEST(MineTraps, SkipCountsAddUp) {
  const auto corpus = fixtures::regime_corpus(80, 2);
  auto with_nogold = corpus;
  with_nogold.push_back(fixtures::trie_slate({"1", "2", "2"}, std::nullopt));
  const auto r = mine_traps(with_nogold, kSetup);
  const auto& s = r.skips;
  EXPECT_EQ(s.total, with_nogold.size());
  EXPECT_EQ(s.kept + s.no_gold + s.majority_correct + s.tie + s.all_wrong + s.no_fpd, s.total);
  EXPECT_EQ(s.no_gold, 1u);
  EXPECT_EQ(s.kept, 20u);
  const auto j = nlohmann::json::parse(skip_stats_json(s));
  EXPECT_EQ(j["kept"], 20);
}

TEST(MineTraps, ReplayValidity) {
  const auto slates = fixtures::minc_corpus(150, 3);
  const auto r = mine_traps(slates, kSetup);
  EXPECT_EQ(r.triplets.size(), slates.size());
  std::map<std::string, const AgentSlate*> by_id;
  for (const auto& s : slates) by_id[s.id] = &s;
  for (const auto& t : r.triplets) {
    const auto v = props::triplet_replay(t, *by_id.at(t.id), kSetup);
    EXPECT_TRUE(v.empty()) << t.id << ": " << v.front();
    EXPECT_NE(t.prompt.find("Support counts are hints only"), std::string::npos);
  }
}

TEST(MineTraps, RubricAndWindowDoNotChangeSelection) {
  const auto slates = fixtures::minc_corpus(20, 4);
  const auto a = mine_traps(slates, kSetup, 1);
  const auto b = mine_traps(slates, kSetup, 5);
  ASSERT_EQ(a.triplets.size(), b.triplets.size());
  for (std::size_t i = 0; i < a.triplets.size(); ++i) EXPECT_EQ(a.triplets[i].meta, b.triplets[i].meta);
}

TEST(Export, EmptyListIsEmptyFile) {
  const auto p = temp("empty.jsonl");
  export_triplets({}, p);
  EXPECT_EQ(std::filesystem::file_size(p), 0u);
  EXPECT_TRUE(load_triplets(p).empty());
  std::filesystem::remove(p);
}

TEST(Export, RoundTripAndLineCount) {
  const auto mined = mine_traps(fixtures::minc_corpus(100, 5), kSetup).triplets;
  ASSERT_EQ(mined.size(), 100u);
  const auto p = temp("hundred.jsonl");
  export_triplets(mined, p);
  std::ifstream in(p);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 100u);
  const auto back = load_triplets(p);
  EXPECT_EQ(back, mined);
  std::filesystem::remove(p);
}

TEST(Export, FieldNames) {
  const auto t = mine_traps({fixtures::trie_slate({"3", "3", "7"}, "7")}, kSetup).triplets.at(0);
  const auto j = nlohmann::ordered_json::parse(triplet_to_json_line(t));
  std::vector<std::string> keys;
  for (const auto& [k, _] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"id", "prompt", "chosen", "rejected", "meta"}));
  EXPECT_TRUE(j["meta"].contains("support_gt"));
  EXPECT_TRUE(j["meta"].contains("support_err"));
  EXPECT_TRUE(j["meta"].contains("fpd_depth"));
  EXPECT_TRUE(j["meta"].contains("dtype"));
}
