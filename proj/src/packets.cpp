/// @file packets.cpp

#include "divaudit/packets.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

#include "divaudit/errors.hpp"
#include "text_util.hpp"

namespace divaudit {

void Rubric::validate() const {
  if (!fact && !logic && !constraint) throw ConfigError("rubric: at least one criterion must be enabled");
}

DivergencePacket build_packet(const ReasoningTree& tree, NodeId u, std::size_t window, int delta,
                              bool hints, std::string question) {
  if (!tree.is_cdp(u)) throw std::invalid_argument("build_packet: node " + std::to_string(u) + " is not a CDP");
  DivergencePacket p;
  p.question = std::move(question);
  p.cdp = u;
  p.dtype = divergence_type(tree, u, delta);
  p.include_support_hints = hints;
  for (NodeId id : tree.path_to(u)) p.prefix.push_back(tree.node(id).representative_text);

  for (NodeId child : tree.node(u).children) {
    PacketBranch b;
    b.child = child;
    b.support_size = tree.node(child).support.size();
    NodeId cur = child;
    if (window > 0) b.evidence.push_back(tree.node(cur).representative_text);
    while (b.evidence.size() < window && tree.node(cur).children.size() == 1) {
      const NodeId next = tree.node(cur).children.front();
      if (tree.is_cdp(next)) break;
      b.evidence.push_back(tree.node(next).representative_text);
      cur = next;
    }
    p.branches.push_back(std::move(b));
  }
  return p;
}

ConsensusReviewPacket build_review_packet(const ReasoningTree& tree, const std::vector<NodeId>& lineages,
                                          std::string question, bool hints) {
  ConsensusReviewPacket p;
  p.question = std::move(question);
  p.include_support_hints = hints;
  std::set<NodeId> seen;
  for (NodeId leaf : lineages) {
    if (!seen.insert(leaf).second) continue;
    ReviewCandidate c;
    c.lineage = leaf;
    for (NodeId id : tree.path_to(leaf)) c.steps.push_back(tree.node(id).representative_text);
    c.answer = tree.leaf_answer(leaf);
    c.support_size = tree.node(leaf).support.size();
    p.candidates.push_back(std::move(c));
  }
  if (p.candidates.size() < 2) throw std::invalid_argument("build_review_packet: need at least two lineages");
  return p;
}

std::string branch_letter(std::size_t index) {
  std::string out;
  std::size_t n = index + 1;
  while (n > 0) {
    --n;
    out.insert(out.begin(), static_cast<char>('A' + n % 26));
    n /= 26;
  }
  return out;
}

std::optional<std::size_t> branch_index(std::string_view letters) {
  if (letters.empty() || letters.size() > 4) return std::nullopt;
  std::size_t n = 0;
  for (char c : letters) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalpha(u) == 0) return std::nullopt;
    n = n * 26 + static_cast<std::size_t>(std::toupper(u) - 'A' + 1);
  }
  return n - 1;
}

std::string_view packet_template_version() { return "packet.v1"; }

namespace {

void render_criteria(std::ostringstream& os, const Rubric& r) {
  os << "Criteria:\n";
  if (r.fact) os << "- Factual accuracy: verify arithmetic, stated facts, and checkable claims.\n";
  if (r.logic) os << "- Logical soundness: each step must follow validly from the reasoning before it.\n";
  if (r.constraint) os << "- Constraint adherence: the problem's stated conditions must be respected.\n";
}

void render_reply_grammar(std::ostringstream& os, std::string_view what) {
  os << "Reply with exactly these three lines:\n"
     << "SELECTED: <" << what << " letter>\n"
     << "CONFIDENCE: <number from 0 to 1>\n"
     << "RATIONALE: <one sentence>\n";
}

std::string support_phrase(std::size_t n) {
  return "supported by " + std::to_string(n) + (n == 1 ? " agent" : " agents");
}

}  // namespace

std::string render_packet(const DivergencePacket& p, const Rubric& rubric) {
  std::ostringstream os;
  os << "Audit the point where the reasoning branches below first disagree and select the branch "
        "whose next steps are valid.\n";
  os << "Question: " << p.question << "\n\n";
  os << "Divergence type: " << to_string(p.dtype) << ". "
     << (p.dtype == DivergenceType::Early ? rubric.early_hint : rubric.late_hint) << "\n\n";
  render_criteria(os, rubric);
  os << "\nShared reasoning:\n";
  if (p.prefix.empty()) os << "(none)\n";
  for (std::size_t i = 0; i < p.prefix.size(); ++i) os << i + 1 << ". " << p.prefix[i] << '\n';
  for (std::size_t i = 0; i < p.branches.size(); ++i) {
    const auto& b = p.branches[i];
    os << "\nBranch " << branch_letter(i);
    if (p.include_support_hints) os << " (" << support_phrase(b.support_size) << ")";
    os << ":\n";
    for (const auto& e : b.evidence) os << "- " << e << '\n';
  }
  if (p.include_support_hints) os << "\nSupport counts are hints only; decide on the evidence.\n";
  os << '\n';
  render_reply_grammar(os, "branch");
  return os.str();
}

std::string render_packet(const ConsensusReviewPacket& p, const Rubric& rubric) {
  std::ostringstream os;
  os << "Several complete reasoning chains remain. Compare them end to end and select the one "
        "whose reasoning is sound throughout.\n";
  os << "Question: " << p.question << "\n\n";
  render_criteria(os, rubric);
  for (std::size_t i = 0; i < p.candidates.size(); ++i) {
    const auto& c = p.candidates[i];
    os << "\nCandidate " << branch_letter(i) << " (final answer: "
       << (c.answer ? c.answer->canonical : std::string("none"));
    if (p.include_support_hints) os << "; " << support_phrase(c.support_size);
    os << "):\n";
    for (const auto& s : c.steps) os << "- " << s << '\n';
  }
  os << '\n';
  render_reply_grammar(os, "candidate");
  return os.str();
}

std::string render_full_slate(const AgentSlate& slate, const Rubric& rubric) {
  std::ostringstream os;
  os << "Several agents answered the question below. Read every solution and select the one "
        "whose reasoning is correct.\n";
  os << "Question: " << slate.question << "\n\n";
  render_criteria(os, rubric);
  for (std::size_t i = 0; i < slate.agents.size(); ++i) {
    const auto& a = slate.agents[i];
    const auto ans = effective_answer(a);
    os << "\nCandidate " << branch_letter(i) << " (final answer: " << (ans ? ans->canonical : std::string("none"))
       << "):\n"
       << detail::trim(a.text) << '\n';
  }
  os << '\n';
  render_reply_grammar(os, "candidate");
  return os.str();
}

std::size_t estimate_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isalnum(c) != 0 || c >= 0x80) {
      if (!in_word) ++count;
      in_word = true;
    } else {
      in_word = false;
      if (std::isspace(c) == 0) ++count;
    }
  }
  return count;
}

}  // namespace divaudit
