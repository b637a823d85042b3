/// @file acpo.hpp
/// @brief Anti-consensus preference loss (DPO form on majority-failure
/// pairs), its gradient, and a linear toy preference model.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "divaudit/trap_miner.hpp"

namespace divaudit {

struct LossInputs {
  double logp_theta_w = 0.0;
  double logp_ref_w = 0.0;
  double logp_theta_l = 0.0;
  double logp_ref_l = 0.0;
  double beta = 0.1;

  /// (theta_w - ref_w) - (theta_l - ref_l)
  double margin() const { return (logp_theta_w - logp_ref_w) - (logp_theta_l - logp_ref_l); }
};

/// -log sigmoid(beta * margin), evaluated as softplus(-beta * margin).
/// Throws std::invalid_argument for beta <= 0 or non-finite inputs.
double acpo_loss(const LossInputs& in);

struct AcpoGradient {
  double d_logp_theta_w = 0.0;  // -beta * (1 - sigmoid(beta * m))
  double d_logp_theta_l = 0.0;  // +beta * (1 - sigmoid(beta * m))
};

AcpoGradient acpo_grad(const LossInputs& in);

double softplus(double x);
double sigmoid(double x);

/// Linear scorer over features of a (prompt, reply) pair. The score is used
/// directly as the log-probability proxy; the reference model has zero
/// weights, so normalizing constants cancel in the margin.
class ToyPreferenceModel {
 public:
  static constexpr std::size_t kFeatures = 4;
  static constexpr std::array<const char*, kFeatures> kFeatureNames{"support", "evidence_consistent",
                                                                    "reply_length", "bias"};
  using Features = std::array<double, kFeatures>;

  ToyPreferenceModel() { weights_.fill(0.0); }
  explicit ToyPreferenceModel(Features w) : weights_(w) {}

  double score(const Features& f) const;
  const Features& weights() const { return weights_; }
  Features& weights() { return weights_; }
  double weight(std::string_view name) const;

  std::string to_json() const;
  static ToyPreferenceModel from_json(std::string_view text);

 private:
  Features weights_;
};

/// Features of one reply to a triplet prompt: support of the selected
/// branch (read from the rendered hint), whether it is the gold-bearing
/// branch, reply length in hundreds of estimated tokens, and a constant 1.
ToyPreferenceModel::Features reply_features(const PreferenceTriplet& t, const std::string& reply);

struct TrainOptions {
  std::size_t epochs = 200;
  double lr = 0.5;
  double beta = 0.1;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;  // 0 = full batch
};

struct EpochStats {
  std::size_t epoch = 0;  // 0 is the untrained model
  double mean_loss = 0.0;
  double accuracy = 0.0;  // on the evaluation set when given, else the training set
};

struct TrainResult {
  ToyPreferenceModel model;
  std::vector<EpochStats> history;
};

/// Gradient descent on the mean loss. Needs at least 10 triplets; throws
/// std::invalid_argument("non-separable") when chosen and rejected features
/// coincide on every triplet.
TrainResult train_toy(const std::vector<PreferenceTriplet>& triplets, const TrainOptions& options,
                      const std::vector<PreferenceTriplet>* eval_set = nullptr);

double mean_acpo_loss(const ToyPreferenceModel& model, const std::vector<PreferenceTriplet>& triplets, double beta);

/// Fraction with score(chosen) > score(rejected); ties count one half.
double eval_preference_accuracy(const ToyPreferenceModel& model, const std::vector<PreferenceTriplet>& triplets);

std::string history_csv(const std::vector<EpochStats>& history);

}  // namespace divaudit
