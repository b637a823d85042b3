#include <gtest/gtest.h>

#include <cmath>

#include "divaudit/theory_sim.hpp"

using namespace divaudit;

namespace {

struct PairStats {
  double mean0 = 0.0;
  double corr = 0.0;
};

// Sample mean of agent 0 and Pearson correlation of agents 0 and 1.
PairStats pair_stats(const VoteMatrix& m) {
  double s0 = 0, s1 = 0, s01 = 0, s00 = 0, s11 = 0;
  for (std::size_t t = 0; t < m.trials; ++t) {
    const double a = m.at(t, 0), b = m.at(t, 1);
    s0 += a;
    s1 += b;
    s01 += a * b;
    s00 += a * a;
    s11 += b * b;
  }
  const double n = static_cast<double>(m.trials);
  const double m0 = s0 / n, m1 = s1 / n;
  const double cov = s01 / n - m0 * m1;
  const double v0 = s00 / n - m0 * m0, v1 = s11 / n - m1 * m1;
  return {m0, cov / std::sqrt(v0 * v1)};
}

JuryConfig jury(std::size_t n, double p, double rho, std::size_t trials, std::uint64_t seed = 1) {
  JuryConfig c;
  c.n_agents = n;
  c.p_correct = p;
  c.rho_corr = rho;
  c.trials = trials;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Jury, FullCorrelationMeansIdenticalVotes) {
  const auto m = sample_votes(jury(8, 0.6, 1.0, 2000));
  for (std::size_t t = 0; t < m.trials; ++t)
    for (std::size_t i = 1; i < m.agents; ++i) ASSERT_EQ(m.at(t, i), m.at(t, 0));
}

TEST(Jury, CertainAgentsAlwaysCorrect) {
  const auto m = sample_votes(jury(5, 1.0, 0.4, 1000));
  for (auto c : m.cells) ASSERT_EQ(c, 1);
  const auto z = sample_votes(jury(5, 0.0, 0.4, 1000));
  for (auto c : z.cells) ASSERT_EQ(c, 0);
}

TEST(Jury, MarginalAndCorrelationMatch) {
  const std::size_t T = 40000;
  for (double rho : {0.0, 0.3, 0.7}) {
    const double p = 0.7;
    const auto s = pair_stats(sample_votes(jury(4, p, rho, T, 3)));
    const double se_mean = std::sqrt(p * (1 - p) / T);
    const double se_corr = (1 - rho * rho) / std::sqrt(static_cast<double>(T)) + 1e-3;
    EXPECT_NEAR(s.mean0, p, 3 * se_mean) << rho;
    EXPECT_NEAR(s.corr, rho, 3 * se_corr) << rho;
  }
}

TEST(Jury, SampleTrialMatchesMatrixRow) {
  const auto cfg = jury(6, 0.55, 0.2, 50, 9);
  const auto m = sample_votes(cfg);
  std::vector<std::uint8_t> row(6);
  sample_trial(cfg, 37, row);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(row[i], m.at(37, i));
}

TEST(Jury, Validation) {
  EXPECT_THROW(jury(0, 0.5, 0, 10).validate(), std::invalid_argument);
  EXPECT_THROW(jury(3, 1.5, 0, 10).validate(), std::invalid_argument);
  EXPECT_THROW(jury(3, 0.5, -0.1, 10).validate(), std::invalid_argument);
  EXPECT_THROW(jury(3, 0.5, 1.1, 10).validate(), std::invalid_argument);
  EXPECT_THROW(estimate_var_mean(jury(3, 0.5, 0.1, 1)), std::invalid_argument);
  EXPECT_NO_THROW(jury(3, 0.5, 0.1, 10).validate());
}

TEST(Variance, ClosedForm) {
  EXPECT_NEAR(theoretical_var_mean(0.7, 0.0, 10), 0.021, 1e-12);
  EXPECT_NEAR(theoretical_var_mean(0.7, 0.3, 10), 0.0777, 1e-12);
  EXPECT_NEAR(theoretical_var_mean(0.7, 0.3, 1000), 0.21 * 300.7 / 1000, 1e-12);
  EXPECT_NEAR(theoretical_var_mean(0.7, 1.0, 1000), 0.21, 1e-12);
  EXPECT_NEAR(theoretical_var_mean(0.5, 0.0, 1), 0.25, 1e-12);
}

TEST(Variance, EmpiricalWithinThreeSe) {
  for (double rho : {0.0, 0.3, 1.0}) {
    const auto e = estimate_var_mean(jury(20, 0.7, rho, 30000, 5));
    EXPECT_GT(e.standard_error, 0.0);
    EXPECT_NEAR(e.empirical, e.theoretical, 3 * e.standard_error) << rho;
  }
}

TEST(Variance, IdenticalAcrossJobCounts) {
  const auto cfg = jury(15, 0.6, 0.25, 5000, 17);
  const auto a = estimate_var_mean(cfg, 1);
  const auto b = estimate_var_mean(cfg, 3);
  const auto c = estimate_var_mean(cfg, 8);
  EXPECT_EQ(a.empirical, b.empirical);
  EXPECT_EQ(a.empirical, c.empirical);
  EXPECT_EQ(a.mv_accuracy, c.mv_accuracy);
  EXPECT_EQ(a.standard_error, b.standard_error);
}

TEST(Variance, MajorityAccuracyCappedByCorrelation) {
  // With probability rho the whole jury copies one draw, so MV is wrong at
  // least rho (1 - p) of the time however large N gets.
  const auto e = estimate_var_mean(jury(1000, 0.7, 0.3, 20000, 7));
  EXPECT_LT(e.mv_accuracy, 1.0 - 0.3 * 0.3 + 0.01);
  const auto ind = estimate_var_mean(jury(1000, 0.7, 0.0, 2000, 7));
  EXPECT_GT(ind.mv_accuracy, 0.999);
}

TEST(Variance, EvenJuryTiesCountHalf) {
  // N=2, p=0.5, rho=0: P(2 correct)=1/4, P(tie)=1/2 -> 0.5
  const auto e = estimate_var_mean(jury(2, 0.5, 0.0, 40000, 2));
  EXPECT_NEAR(e.mv_accuracy, 0.5, 3 * std::sqrt(0.125 / 40000));
}

TEST(Duel, MajorityAlwaysWrongAuditorTracksQ) {
  const auto d = mv_vs_auditor(3, 1, 0.75, 10000, 4);
  EXPECT_EQ(d.trials, 10000u);
  EXPECT_EQ(d.mv_accuracy, 0.0);
  EXPECT_NEAR(d.auditor_accuracy, 0.75, 3 * std::sqrt(0.75 * 0.25 / 10000));
  EXPECT_EQ(mv_vs_auditor(5, 2, 1.0, 500, 4).auditor_accuracy, 1.0);
  EXPECT_EQ(mv_vs_auditor(5, 2, 0.0, 500, 4).auditor_accuracy, 0.0);
}

TEST(Duel, Deterministic) {
  EXPECT_EQ(mv_vs_auditor(4, 1, 0.6, 2000, 8).auditor_accuracy, mv_vs_auditor(4, 1, 0.6, 2000, 8).auditor_accuracy);
}

TEST(Duel, Errors) {
  EXPECT_THROW(mv_vs_auditor(1, 1, 0.5, 10, 0), std::invalid_argument);
  EXPECT_THROW(mv_vs_auditor(3, 0, 0.5, 10, 0), std::invalid_argument);
  EXPECT_THROW(mv_vs_auditor(3, 1, 1.5, 10, 0), std::invalid_argument);
}

TEST(Sweep, RowsAndCsv) {
  SweepConfig cfg;
  cfg.rhos = {0.0, 1.0};
  cfg.ns = {5, 50};
  cfg.trials = 4000;
  const auto rows = run_sweep(cfg);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.variance.empirical, r.variance.theoretical, 4 * r.variance.standard_error);
    // P(some agent correct) * q, with all-correct-or-none at rho = 1
    const double any = r.rho == 1.0 ? cfg.p_correct : 1.0 - std::pow(1 - cfg.p_correct, r.n);
    EXPECT_NEAR(r.auditor_accuracy, any * cfg.q, 4 * std::sqrt(0.25 / cfg.trials));
  }
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "N,p,rho,var_emp,var_theory,mv_acc,auditor_acc,var_se");
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  EXPECT_EQ(lines, 5u);
}
