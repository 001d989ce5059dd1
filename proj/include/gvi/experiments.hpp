#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gvi/core.hpp"

namespace gvi {

// eps_n = c * n^(-a). The exponent must stay inside (0, 1) so the
// neighbourhoods shrink while n * eps_n still grows.
struct EpsSchedule {
  double c = 1.0;
  double a = 0.5;

  double eps(std::int64_t n) const;
};

// Shared configuration for the experiment runners. Each runner reads the
// subset it needs and validates the rest structurally.
struct ExperimentConfig {
  DataGeneratingProcess dgp{0.0, 1.0};
  double sigma_p = 1.0;
  std::vector<Measure> priors{Measure(GaussianMeasure(0.0, 1.0))};
  DivergenceSpec divergence = DivergenceSpec::tv();
  double beta = 1.0;
  FamilyDescriptor family = FamilyDescriptor::gaussian();
  GviSchedules schedules{};
  std::vector<std::int64_t> n_schedule{100, 1000, 10000};
  EpsSchedule eps_schedule{};
  std::vector<std::uint64_t> seeds{0};
  std::int64_t replicates = 1;
  // false: fresh data at every n (independent runs); true: each run draws one
  // long sample and reuses prefixes, the almost-sure-path flavour.
  bool nested_prefix = false;
  // false: contracts are evaluated and reported but never fail the run.
  bool enforce_contracts = true;

  void validate() const;
};

struct RateRow {
  std::int64_t n = 0;
  double eps_n = 0.0;
  double mass = 0.0;
  double slack = 0.0;
  double objective = 0.0;
  std::uint64_t seed = 0;
};

struct ConcentrationRow {
  std::int64_t n = 0;
  double mass = 0.0;
  std::uint64_t seed = 0;
};

struct BayesRow {
  double mu_pi = 0.0;
  double bayes_mean = 0.0;
  double gvi_mean = 0.0;
  bool bayes_in_rstar = false;
  bool gvi_in_rstar = false;
  bool prior_ball_ok = false;
};

struct UnboundedRow {
  std::int64_t n = 0;
  double mass = 0.0;
  double div_over_n = 0.0;
  std::uint64_t seed = 0;
};

// Outcome of the empirical checks a runner performs on its own results.
// `detail` names the contract and what it verifies; the optional fields carry
// the auxiliary estimates some runners compute alongside the curve.
struct ContractReport {
  bool enforced = true;
  bool satisfied = true;
  std::string detail;
  std::optional<double> rate_constant_estimate;
  std::optional<double> robustness_spread;
};

struct RateCurve {
  std::string prior_label;
  std::vector<RateRow> rows;
};

struct RatesOutput {
  std::vector<RateCurve> curves;  // one per configured prior
  ContractReport contract;
};

struct ConcentrationOutput {
  std::vector<ConcentrationRow> rows;
  ContractReport contract;
};

struct BayesOutput {
  std::vector<BayesRow> rows;
  ContractReport contract;
};

struct UnboundedOutput {
  std::vector<UnboundedRow> rows;
  ContractReport contract;
};

// SplitMix64 finaliser; the mixing primitive behind the RNG streams.
std::uint64_t mix64(std::uint64_t z);

// Deterministic per-(seed, replicate, n) stream so replicates and n-values
// can run in any order (or in parallel) without changing a single byte of
// output. replicate 0 passes the configured seed through untouched.
std::uint64_t experiment_stream(std::uint64_t seed, std::int64_t replicate,
                                std::int64_t n);

// n observations from the data-generating process on the given stream.
Dataset simulate_dataset(const DataGeneratingProcess& dgp, std::int64_t n,
                         std::uint64_t stream);

// Median of a sample (average of the middle pair for even sizes). Sorts a
// copy, so aggregation is independent of accumulation order.
double median(std::vector<double> xs);

// Human-readable description of a measure for labelling output curves.
std::string measure_label(const Measure& m);

// Posterior mass of the shrinking neighbourhoods N_{eps_n} around the truth,
// one curve per prior. Records slack = M(n) / (n beta(n)), so the divergence
// (or an explicit M(n) schedule) must provide a finite bound.
RatesOutput run_rates(const ExperimentConfig& cfg);

// Posterior mass of a fixed interval A whose limiting loss strictly exceeds
// the minimum; the mass must die out along the schedule.
ConcentrationOutput run_concentration(const ExperimentConfig& cfg, const Interval& a);

// run_rates under explicit M(n)/beta(n) schedules, after verifying that
// n * eps_n * beta(n) / M(n) diverges on the configured schedule.
RatesOutput run_schedule(const ExperimentConfig& cfg);

// Sweeps the prior mean mu_pi = sample mean + offset, comparing the exact
// conjugate Bayes posterior against the solved GVI posterior: region
// membership of both, plus whether mu_pi lies in the ball of radius
// 2/n + sigma_pi^2 inside which Bayes is guaranteed to behave.
BayesOutput run_bayes_comparison(const ExperimentConfig& cfg,
                                 const std::vector<double>& mu_pi_offsets,
                                 std::int64_t n);

// KL (unbounded divergence) concentration: posterior mass of A and the
// per-observation divergence cost D(Q_n : prior) / n, both of which must
// decay when the prior's support covers the truth.
UnboundedOutput run_unbounded_kl(const ExperimentConfig& cfg, const Interval& a);

}  // namespace gvi
