#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "divaudit/errors.hpp"
#include "divaudit/packets.hpp"
#include "fixtures.hpp"
#include "properties.hpp"

using namespace divaudit;

namespace {

const HashingEmbedder kEmbedder;

Trace trace(const std::string& agent, const std::vector<std::string>& steps) {
  Trace t{agent, {}, TraceSource::RuleBased};
  for (const auto& s : steps) t.steps.push_back({t.steps.size(), s});
  return t;
}

ReasoningTree tree_of(const std::vector<Trace>& ts) {
  std::map<std::string, NormalizedAnswer> answers;
  for (std::size_t i = 0; i < ts.size(); ++i) answers[ts[i].agent_id] = normalize_answer(std::to_string(i));
  return build_tree(ts, answers, TreeConfig{}, kEmbedder);
}

std::vector<std::string> steps(std::uint64_t tag, std::size_t n) { return fixtures::synth_steps(tag, n); }

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(BuildPacket, RootCdpWithLeafChildren) {
  const auto tree = tree_of({trace("a", steps(1, 1)), trace("b", steps(2, 1)), trace("c", steps(3, 1))});
  const auto p = build_packet(tree, kRootId, 3, 3, true);
  EXPECT_TRUE(p.prefix.empty());
  ASSERT_EQ(p.branches.size(), 3u);
  for (const auto& b : p.branches) EXPECT_EQ(b.evidence.size(), 1u);
  EXPECT_EQ(p.dtype, DivergenceType::Early);
}

TEST(BuildPacket, WindowTruncatesLongChain) {
  const auto tree = tree_of({trace("a", steps(1, 5)), trace("b", steps(2, 5))});
  const auto p = build_packet(tree, kRootId, 3, 3, true);
  for (const auto& b : p.branches) EXPECT_EQ(b.evidence.size(), 3u);
  EXPECT_TRUE(props::packet_invariants(p, tree, 3).empty());
}

TEST(BuildPacket, NestedCdpStopsWindow) {
  const auto spine = steps(5, 3);
  const auto tree = tree_of({trace("a", cat(spine, steps(6, 2))), trace("b", cat(spine, steps(7, 2))),
                             trace("c", steps(8, 4))});
  ASSERT_TRUE(tree.is_cdp(kRootId));
  const auto p = build_packet(tree, kRootId, 3, 3, true);
  // Branch A walks two spine steps and stops before the nested CDP.
  EXPECT_EQ(p.branches[0].evidence, std::vector<std::string>(spine.begin(), spine.begin() + 2));
  EXPECT_EQ(p.branches[1].evidence.size(), 3u);
  EXPECT_TRUE(props::packet_invariants(p, tree, 3).empty());
}

TEST(BuildPacket, NonCdpThrows) {
  const auto tree = tree_of({trace("a", steps(1, 2)), trace("b", steps(1, 2))});
  EXPECT_THROW(build_packet(tree, kRootId, 3, 3, true), std::invalid_argument);
}

TEST(BuildPacket, RandomTreesSatisfyInvariants) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Trace> ts;
    const std::size_t n = 2 + rng() % 5;
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<std::string> s;
      const std::size_t len = 1 + rng() % 6;
      for (std::size_t j = 0; j < len; ++j) s.push_back(fixtures::synth_step(300 + j * 10 + rng() % 2, 0));
      ts.push_back(trace("agent" + std::to_string(a), s));
    }
    const auto tree = tree_of(ts);
    const std::size_t window = 1 + rng() % 4;
    for (NodeId u : find_cdps(tree)) {
      const auto p = build_packet(tree, u, window, 3, true);
      const auto v = props::packet_invariants(p, tree, window);
      ASSERT_TRUE(v.empty()) << v.front();
      EXPECT_EQ(p.dtype, tree.node(u).depth < 3 ? DivergenceType::Early : DivergenceType::Late);
    }
  }
}

TEST(ReviewPacket, TwoLineagesAndDedup) {
  const auto prefix = steps(9, 2);
  const auto tree = tree_of({trace("a", cat(prefix, steps(10, 1))), trace("b", cat(prefix, steps(11, 1))),
                             trace("c", cat(prefix, steps(12, 1)))});
  const NodeId la = tree.agent_paths().at("a").back(), lb = tree.agent_paths().at("b").back(),
               lc = tree.agent_paths().at("c").back();
  EXPECT_EQ(build_review_packet(tree, {la, lb}).candidates.size(), 2u);
  const auto d = build_review_packet(tree, {lb, la, lb});
  ASSERT_EQ(d.candidates.size(), 2u);
  EXPECT_EQ(d.candidates[0].lineage, lb);
  EXPECT_EQ(d.candidates[1].lineage, la);
  EXPECT_THROW(build_review_packet(tree, {la, la}), std::invalid_argument);

  // Each candidate repeats the shared prefix.
  const auto p = build_review_packet(tree, {la, lb, lc}, "Q?");
  const auto text = render_packet(p, Rubric{});
  for (const auto& c : p.candidates) {
    std::vector<std::string> walk;
    for (NodeId id : tree.path_to(c.lineage)) walk.push_back(tree.node(id).representative_text);
    EXPECT_EQ(c.steps, walk);
  }
  std::size_t count = 0;
  for (auto pos = text.find(prefix[0]); pos != std::string::npos; pos = text.find(prefix[0], pos + 1)) ++count;
  EXPECT_EQ(count, 3u);
}

TEST(Render, HintsToggle) {
  DivergencePacket p;
  p.question = "How many?";
  p.branches = {{1, {"three wrong steps"}, 3}, {2, {"one right step"}, 1}};
  p.include_support_hints = true;
  const auto on = render_packet(p, Rubric{});
  EXPECT_NE(on.find("supported by 3 agents"), std::string::npos);
  EXPECT_NE(on.find("supported by 1 agent)"), std::string::npos);
  p.include_support_hints = false;
  const auto off = render_packet(p, Rubric{});
  EXPECT_FALSE(std::regex_search(off, std::regex(R"(supported by \d)")));
  EXPECT_EQ(off.find("supported"), std::string::npos);
}

TEST(Render, Deterministic) {
  const auto slate = fixtures::minc_corpus(1, 3)[0];
  const auto tree = build_slate_tree(slate, RuleSplitter{}, kEmbedder, TreeConfig{});
  const auto u = find_cdps(tree).front();
  const auto a = render_packet(build_packet(tree, u, 3, 3, true, slate.question), Rubric{});
  const auto b = render_packet(build_packet(tree, u, 3, 3, true, slate.question), Rubric{});
  EXPECT_EQ(a, b);
}

TEST(Render, GoldenDivergencePacket) {
  DivergencePacket p;
  p.question = "What is 6 times 7?";
  p.cdp = 1;
  p.dtype = DivergenceType::Late;
  p.prefix = {"Six groups of seven."};
  p.branches = {{2, {"Six times seven is 42."}, 2}, {3, {"Six times seven is 48."}, 1}};
  Rubric r;
  r.constraint = false;
  EXPECT_EQ(render_packet(p, r),
            "Audit the point where the reasoning branches below first disagree and select the branch whose next "
            "steps are valid.\n"
            "Question: What is 6 times 7?\n\n"
            "Divergence type: Late. The branches share a common approach and split at a local step, so weigh the "
            "factual accuracy of that computation most heavily.\n\n"
            "Criteria:\n"
            "- Factual accuracy: verify arithmetic, stated facts, and checkable claims.\n"
            "- Logical soundness: each step must follow validly from the reasoning before it.\n\n"
            "Shared reasoning:\n"
            "1. Six groups of seven.\n\n"
            "Branch A (supported by 2 agents):\n"
            "- Six times seven is 42.\n\n"
            "Branch B (supported by 1 agent):\n"
            "- Six times seven is 48.\n\n"
            "Support counts are hints only; decide on the evidence.\n\n"
            "Reply with exactly these three lines:\n"
            "SELECTED: <branch letter>\n"
            "CONFIDENCE: <number from 0 to 1>\n"
            "RATIONALE: <one sentence>\n");
  EXPECT_EQ(packet_template_version(), "packet.v1");
}

TEST(Render, GoldenReviewPacket) {
  ConsensusReviewPacket p;
  p.question = "Q?";
  p.candidates = {{4, {"s1", "s2"}, normalize_answer("5"), 2}, {5, {"s1", "s3"}, std::nullopt, 1}};
  Rubric r;
  r.fact = false;
  r.logic = false;
  EXPECT_EQ(render_packet(p, r),
            "Several complete reasoning chains remain. Compare them end to end and select the one whose reasoning "
            "is sound throughout.\n"
            "Question: Q?\n\n"
            "Criteria:\n"
            "- Constraint adherence: the problem's stated conditions must be respected.\n\n"
            "Candidate A (final answer: 5; supported by 2 agents):\n- s1\n- s2\n\n"
            "Candidate B (final answer: none; supported by 1 agent):\n- s1\n- s3\n\n"
            "Reply with exactly these three lines:\n"
            "SELECTED: <candidate letter>\n"
            "CONFIDENCE: <number from 0 to 1>\n"
            "RATIONALE: <one sentence>\n");
}

TEST(Rubric, AllDisabledIsConfigError) {
  Rubric r;
  r.fact = r.logic = r.constraint = false;
  EXPECT_THROW(r.validate(), ConfigError);
}

TEST(BranchLetters, BijectiveBase26) {
  EXPECT_EQ(branch_letter(0), "A");
  EXPECT_EQ(branch_letter(25), "Z");
  EXPECT_EQ(branch_letter(26), "AA");
  EXPECT_EQ(branch_letter(701), "ZZ");
  for (std::size_t i = 0; i < 2000; ++i) EXPECT_EQ(branch_index(branch_letter(i)), i);
  EXPECT_FALSE(branch_index("A1"));
  EXPECT_FALSE(branch_index(""));
}

TEST(Tokens, Examples) {
  EXPECT_EQ(estimate_tokens(""), 0u);
  EXPECT_EQ(estimate_tokens("a b c"), 3u);
  EXPECT_EQ(estimate_tokens("Hello, world!"), 4u);
}

TEST(Tokens, MatchesReferenceCounter) {
  const std::string paragraph =
      "Step 1: Compute 3.5 * (2 + 4) = 21.0; then subtract 10%. The café's total is €18.90 -- done!\n"
      "Answer: 18.9 #### 18.9";
  EXPECT_EQ(estimate_tokens(paragraph), props::reference_token_count(paragraph));
  std::mt19937_64 rng(88);
  const std::string alphabet = "ab 9,.!?\n\t-()\xc3\xa9";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const std::size_t len = rng() % 40;
    for (std::size_t k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
    ASSERT_EQ(estimate_tokens(s), props::reference_token_count(s)) << s;
  }
}

TEST(Tokens, MonotoneUnderAppend) {
  std::mt19937_64 rng(99);
  const std::string alphabet = "ab 9,.!?\n";
  std::string s;
  std::size_t prev = 0;
  for (int i = 0; i < 500; ++i) {
    s += alphabet[rng() % alphabet.size()];
    const auto now = estimate_tokens(s);
    EXPECT_GE(now, prev);
    prev = now;
  }
}

TEST(Tokens, PacketSmallerThanFullTracesWithPrefix) {
  for (const auto& slate : fixtures::long_prefix_suite(20, 4)) {
    const auto tree = build_slate_tree(slate, RuleSplitter{}, kEmbedder, TreeConfig{});
    std::string all;
    for (const auto& a : slate.agents) all += a.text + "\n";
    for (NodeId u : find_cdps(tree)) {
      const auto p = build_packet(tree, u, 3, 3, true, slate.question);
      ASSERT_GE(p.prefix.size(), 1u);
      EXPECT_LT(estimate_tokens(render_packet(p, Rubric{})), estimate_tokens(all));
    }
  }
}
