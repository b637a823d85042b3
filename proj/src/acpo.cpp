/// @file acpo.cpp

#include "divaudit/acpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "divaudit/auditor.hpp"
#include "divaudit/packets.hpp"

namespace divaudit {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check(const LossInputs& in) {
  if (!(in.beta > 0.0) || !std::isfinite(in.beta)) throw std::invalid_argument("acpo: beta must be finite and > 0");
  for (double v : {in.logp_theta_w, in.logp_ref_w, in.logp_theta_l, in.logp_ref_l}) {
    if (!std::isfinite(v)) throw std::invalid_argument("acpo: non-finite log-probability");
  }
}

}  // namespace

double acpo_loss(const LossInputs& in) {
  check(in);
  return softplus(-(in.beta * in.margin()));
}

AcpoGradient acpo_grad(const LossInputs& in) {
  check(in);
  const double g = in.beta * sigmoid(-(in.beta * in.margin()));  // beta * (1 - sigmoid(beta m))
  return {-g, g};
}

double ToyPreferenceModel::score(const Features& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < kFeatures; ++i) s += weights_[i] * f[i];
  return s;
}

double ToyPreferenceModel::weight(std::string_view name) const {
  for (std::size_t i = 0; i < kFeatures; ++i) {
    if (name == kFeatureNames[i]) return weights_[i];
  }
  throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
}

std::string ToyPreferenceModel::to_json() const {
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < kFeatures; ++i) j[kFeatureNames[i]] = weights_[i];
  return j.dump(2);
}

ToyPreferenceModel ToyPreferenceModel::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  Features w{};
  for (std::size_t i = 0; i < kFeatures; ++i) w[i] = j.at(kFeatureNames[i]).get<double>();
  return ToyPreferenceModel(w);
}

namespace {
// Upper bound for letters read back from templated replies (A..ZZ).
constexpr std::size_t kMaxReplyBranches = 702;
}  // namespace

ToyPreferenceModel::Features reply_features(const PreferenceTriplet& t, const std::string& reply) {
  const auto decision = parse_judge_reply(reply, kMaxReplyBranches);
  const std::string letter = branch_letter(decision.selected);
  const std::regex hint("Branch " + letter + R"( \(supported by (\d+) agents?\))");
  std::smatch m;
  double support = 0.0;
  if (std::regex_search(t.prompt, m, hint)) support = std::stod(m.str(1));
  const double consistent = decision.selected == t.meta.gt_branch ? 1.0 : 0.0;
  const double length = static_cast<double>(estimate_tokens(reply)) / 100.0;
  return {support, consistent, length, 1.0};
}

namespace {

struct Pair {
  ToyPreferenceModel::Features chosen, rejected;
};

std::vector<Pair> featurize(const std::vector<PreferenceTriplet>& triplets) {
  std::vector<Pair> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) out.push_back({reply_features(t, t.chosen), reply_features(t, t.rejected)});
  return out;
}

LossInputs pair_inputs(const ToyPreferenceModel& m, const Pair& p, double beta) {
  LossInputs in;
  in.logp_theta_w = m.score(p.chosen);
  in.logp_theta_l = m.score(p.rejected);
  in.beta = beta;
  return in;
}

double mean_loss(const ToyPreferenceModel& m, const std::vector<Pair>& pairs, double beta) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : pairs) total += acpo_loss(pair_inputs(m, p, beta));
  return total / static_cast<double>(pairs.size());
}

double accuracy(const ToyPreferenceModel& m, const std::vector<Pair>& pairs) {
  if (pairs.empty()) return 0.0;
  double hits = 0.0;
  for (const auto& p : pairs) {
    const double a = m.score(p.chosen), b = m.score(p.rejected);
    hits += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return hits / static_cast<double>(pairs.size());
}

}  // namespace

double mean_acpo_loss(const ToyPreferenceModel& model, const std::vector<PreferenceTriplet>& triplets, double beta) {
  return mean_loss(model, featurize(triplets), beta);
}

double eval_preference_accuracy(const ToyPreferenceModel& model, const std::vector<PreferenceTriplet>& triplets) {
  return accuracy(model, featurize(triplets));
}

TrainResult train_toy(const std::vector<PreferenceTriplet>& triplets, const TrainOptions& options,
                      const std::vector<PreferenceTriplet>* eval_set) {
  if (triplets.size() < 10) throw std::invalid_argument("train_toy: needs at least 10 triplets");
  if (!(options.beta > 0.0)) throw std::invalid_argument("train_toy: beta must be > 0");
  if (options.lr < 0.0) throw std::invalid_argument("train_toy: lr must be >= 0");
  const auto pairs = featurize(triplets);
  const bool separable = std::any_of(pairs.begin(), pairs.end(), [](const Pair& p) { return p.chosen != p.rejected; });
  if (!separable) throw std::invalid_argument("non-separable");
  const auto eval_pairs = eval_set ? featurize(*eval_set) : pairs;

  TrainResult out;
  auto& model = out.model;
  auto record = [&](std::size_t epoch) {
    out.history.push_back({epoch, mean_loss(model, pairs, options.beta), accuracy(model, eval_pairs)});
  };
  record(0);

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(options.seed);
  const std::size_t batch = options.batch_size == 0 ? pairs.size() : std::min(options.batch_size, pairs.size());

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    if (batch < pairs.size()) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      ToyPreferenceModel::Features grad{};
      for (std::size_t k = start; k < end; ++k) {
        const auto& p = pairs[order[k]];
        const auto g = acpo_grad(pair_inputs(model, p, options.beta));
        for (std::size_t i = 0; i < ToyPreferenceModel::kFeatures; ++i) {
          grad[i] += g.d_logp_theta_w * p.chosen[i] + g.d_logp_theta_l * p.rejected[i];
        }
      }
      const double scale = options.lr / static_cast<double>(end - start);
      for (std::size_t i = 0; i < ToyPreferenceModel::kFeatures; ++i) model.weights()[i] -= scale * grad[i];
    }
    record(epoch);
  }
  return out;
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::ostringstream os;
  os << "epoch,mean_loss,eval_accuracy\n";
  char buf[128];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.10f,%.6f\n", h.epoch, h.mean_loss, h.accuracy);
    os << buf;
  }
  return os.str();
}

}  // namespace divaudit
