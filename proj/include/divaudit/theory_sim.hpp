/// @file theory_sim.hpp
/// @brief Monte Carlo checks of majority voting under correlated agent
/// correctness, and of two-branch auditing after deduplication.
///
/// Votes follow a common-shock model. Per trial a shared switch B ~ Bern(rho)
/// and a shared outcome C ~ Bern(p) are drawn; agent i reports C when B = 1
/// and an independent Y_i ~ Bern(p) otherwise. Then P(X_i = 1) = p and, for
/// i != j, E[X_i X_j] = rho p + (1 - rho) p^2, so Cov(X_i, X_j) = rho p (1 - p)
/// and Corr(X_i, X_j) = rho. The mean of N such votes has variance
/// p (1 - p) (1 + (N - 1) rho) / N, which tends to p (1 - p) rho as N grows.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace divaudit {

struct JuryConfig {
  std::size_t n_agents = 10;
  double p_correct = 0.7;
  double rho_corr = 0.0;  // pairwise correlation of correctness indicators
  std::size_t trials = 100000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// trials x agents matrix of correctness indicators, row-major.
struct VoteMatrix {
  std::size_t trials = 0;
  std::size_t agents = 0;
  std::vector<std::uint8_t> cells;

  std::uint8_t at(std::size_t trial, std::size_t agent) const { return cells[trial * agents + agent]; }
};

/// Fills one trial's votes. Draws depend only on (seed, trial).
void sample_trial(const JuryConfig& cfg, std::size_t trial, std::span<std::uint8_t> out);

VoteMatrix sample_votes(const JuryConfig& cfg);

double theoretical_var_mean(double p, double rho, std::size_t n);

struct VarianceEstimate {
  double empirical = 0.0;       // sample variance of per-trial vote means
  double theoretical = 0.0;
  double standard_error = 0.0;  // Monte Carlo SE of the empirical variance
  double mv_accuracy = 0.0;     // P(correct votes > N/2), exact halves count 1/2
};

/// Trials are split across `jobs` threads; per-trial seeding makes the
/// result identical for every job count.
VarianceEstimate estimate_var_mean(const JuryConfig& cfg, std::size_t jobs = 1);

struct DuelResult {
  double mv_accuracy = 0.0;
  double auditor_accuracy = 0.0;
  std::size_t trials = 0;
};

/// Two-branch confabulation regime: n_err agents share a wrong branch, n_cor
/// agents a correct one. MV is tallied per trial; the auditor is a scripted
/// oracle with discrimination accuracy q keyed by (seed, trial).
/// Throws std::invalid_argument unless n_err > n_cor >= 1.
DuelResult mv_vs_auditor(std::size_t n_err, std::size_t n_cor, double q, std::size_t trials, std::uint64_t seed);

struct SweepConfig {
  double p_correct = 0.7;
  std::vector<double> rhos{0.0, 0.3, 1.0};
  std::vector<std::size_t> ns{10, 100, 1000};
  std::size_t trials = 100000;
  std::uint64_t seed = 0;
  double q = 0.8;  // auditor discrimination accuracy for the auditor column
  std::size_t jobs = 1;
};

struct SweepRow {
  std::size_t n = 0;
  double p = 0.0;
  double rho = 0.0;
  VarianceEstimate variance;
  double auditor_accuracy = 0.0;  // P(some agent correct) x q, simulated
};

std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

/// N,p,rho,var_emp,var_theory,mv_acc,auditor_acc,var_se
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace divaudit
