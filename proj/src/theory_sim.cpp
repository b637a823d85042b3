#include "divaudit/theory_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "divaudit/auditor.hpp"
#include "divaudit/keyed_random.hpp"

namespace divaudit {

namespace {

constexpr std::uint64_t kVoteStream = 0x766f746573ULL;   // "votes"
constexpr std::uint64_t kAuditStream = 0x6175646974ULL;  // "audit"

// Sequential draws for one trial, seeded from (seed, stream, trial).
class TrialStream {
 public:
  TrialStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial)
      : state_(derive_key(seed, {stream, trial})) {}

  double uniform() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return unit_interval(mix64(state_));
  }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

void check_probability(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + jobs - 1) / jobs;
  for (std::size_t j = 0; j < jobs; ++j) {
    std::size_t lo = j * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

void JuryConfig::validate() const {
  if (n_agents == 0) throw std::invalid_argument("n_agents must be positive");
  check_probability(p_correct, "p_correct");
  check_probability(rho_corr, "rho_corr");
}

void sample_trial(const JuryConfig& cfg, std::size_t trial, std::span<std::uint8_t> out) {
  if (out.size() != cfg.n_agents) throw std::invalid_argument("output span must hold n_agents votes");
  TrialStream rng(cfg.seed, kVoteStream, trial);
  const bool shared = rng.bernoulli(cfg.rho_corr);
  const bool common = rng.bernoulli(cfg.p_correct);
  if (shared) {
    std::fill(out.begin(), out.end(), static_cast<std::uint8_t>(common));
    return;
  }
  for (auto& x : out) x = static_cast<std::uint8_t>(rng.bernoulli(cfg.p_correct));
}

VoteMatrix sample_votes(const JuryConfig& cfg) {
  cfg.validate();
  VoteMatrix m;
  m.trials = cfg.trials;
  m.agents = cfg.n_agents;
  m.cells.resize(m.trials * m.agents);
  for (std::size_t t = 0; t < m.trials; ++t)
    sample_trial(cfg, t, std::span<std::uint8_t>(m.cells.data() + t * m.agents, m.agents));
  return m;
}

double theoretical_var_mean(double p, double rho, std::size_t n) {
  if (n == 0) throw std::invalid_argument("n must be positive");
  const double nd = static_cast<double>(n);
  return p * (1.0 - p) * (1.0 + (nd - 1.0) * rho) / nd;
}

VarianceEstimate estimate_var_mean(const JuryConfig& cfg, std::size_t jobs) {
  cfg.validate();
  if (cfg.trials < 2) throw std::invalid_argument("need at least two trials");
  std::vector<std::uint32_t> correct(cfg.trials);
  parallel_for(cfg.trials, jobs, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::uint8_t> votes(cfg.n_agents);
    for (std::size_t t = lo; t < hi; ++t) {
      sample_trial(cfg, t, votes);
      std::uint32_t s = 0;
      for (auto v : votes) s += v;
      correct[t] = s;
    }
  });

  // Sequential reduction keeps the result independent of the job count.
  const double n = static_cast<double>(cfg.n_agents);
  const double T = static_cast<double>(cfg.trials);
  double sum = 0.0, mv = 0.0;
  for (auto s : correct) {
    sum += s / n;
    if (2 * static_cast<std::size_t>(s) > cfg.n_agents) mv += 1.0;
    else if (2 * static_cast<std::size_t>(s) == cfg.n_agents) mv += 0.5;
  }
  const double mean = sum / T;
  double m2 = 0.0, m4 = 0.0;
  for (auto s : correct) {
    const double d = s / n - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= T;
  m4 /= T;

  VarianceEstimate e;
  e.empirical = m2 * T / (T - 1.0);
  e.theoretical = theoretical_var_mean(cfg.p_correct, cfg.rho_corr, cfg.n_agents);
  e.standard_error = std::sqrt(std::max(0.0, m4 - m2 * m2) / T);
  e.mv_accuracy = mv / T;
  return e;
}

DuelResult mv_vs_auditor(std::size_t n_err, std::size_t n_cor, double q, std::size_t trials, std::uint64_t seed) {
  if (n_cor < 1 || n_err <= n_cor) throw std::invalid_argument("requires n_err > n_cor >= 1");
  check_probability(q, "q");
  if (trials == 0) throw std::invalid_argument("trials must be positive");

  const NormalizedAnswer wrong = normalize_answer("0");
  const NormalizedAnswer right = normalize_answer("1");
  ScriptedOracle oracle(OracleParams{q, 1.0, seed}, right);

  std::size_t mv_hits = 0, audit_hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    // Majority: the erroneous branch carries more votes.
    if (n_cor > n_err) ++mv_hits;

    JudgeRequest req;
    req.instance_id = "duel";
    req.site = 0;
    req.call_index = t;
    req.branch_answers = {{wrong}, {right}};
    req.support = {n_err, n_cor};
    if (oracle.judge(req).decision.selected == 1) ++audit_hits;
  }
  DuelResult r;
  r.trials = trials;
  r.mv_accuracy = static_cast<double>(mv_hits) / static_cast<double>(trials);
  r.auditor_accuracy = static_cast<double>(audit_hits) / static_cast<double>(trials);
  return r;
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  check_probability(cfg.q, "q");
  std::vector<SweepRow> rows;
  for (double rho : cfg.rhos) {
    for (std::size_t n : cfg.ns) {
      JuryConfig jc{n, cfg.p_correct, rho, cfg.trials, cfg.seed};
      SweepRow row;
      row.n = n;
      row.p = cfg.p_correct;
      row.rho = rho;
      row.variance = estimate_var_mean(jc, cfg.jobs);

      // The auditor recovers a trial only if some agent is correct and it
      // then discriminates correctly.
      std::size_t hits = 0;
      std::vector<std::uint8_t> votes(n);
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        sample_trial(jc, t, votes);
        const bool any = std::find(votes.begin(), votes.end(), 1) != votes.end();
        TrialStream coin(cfg.seed, kAuditStream, t);
        if (any && coin.bernoulli(cfg.q)) ++hits;
      }
      row.auditor_accuracy = static_cast<double>(hits) / static_cast<double>(cfg.trials);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "N,p,rho,var_emp,var_theory,mv_acc,auditor_acc,var_se\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g,%.8g,%.8g,%.6f,%.6f,%.4g\n", r.n, r.p, r.rho,
                  r.variance.empirical, r.variance.theoretical, r.variance.mv_accuracy, r.auditor_accuracy,
                  r.variance.standard_error);
    os << buf;
  }
  return os.str();
}

}  // namespace divaudit
