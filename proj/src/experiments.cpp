#include "gvi/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>

namespace gvi {

namespace {

struct RunKey {
  std::uint64_t seed = 0;
  std::int64_t replicate = 0;
};

std::vector<RunKey> run_keys(const ExperimentConfig& cfg) {
  std::vector<RunKey> keys;
  keys.reserve(cfg.seeds.size() * static_cast<std::size_t>(cfg.replicates));
  for (std::uint64_t seed : cfg.seeds)
    for (std::int64_t r = 0; r < cfg.replicates; ++r) keys.push_back({seed, r});
  return keys;
}

// Hands each (key, n) its dataset. Independent mode draws fresh data per n;
// nested mode draws one long sample per run and reuses prefixes.
class DataProvider {
 public:
  explicit DataProvider(const ExperimentConfig& cfg) : cfg_(cfg) {
    if (cfg.nested_prefix && !cfg.n_schedule.empty())
      max_n_ = cfg.n_schedule.back();
  }

  Dataset at(const RunKey& key, std::int64_t n) {
    if (!cfg_.nested_prefix)
      return simulate_dataset(cfg_.dgp, n,
                              experiment_stream(key.seed, key.replicate, n));
    auto& full = cache_[{key.seed, key.replicate}];
    if (full.size() == 0) {
      const std::uint64_t stream = experiment_stream(key.seed, key.replicate, 0);
      full = sample(GaussianMeasure(cfg_.dgp.theta0, cfg_.dgp.sigma0 * cfg_.dgp.sigma0),
                    stream, static_cast<Eigen::Index>(max_n_));
    }
    return Dataset(full.head(static_cast<Eigen::Index>(n)), cfg_.dgp);
  }

 private:
  const ExperimentConfig& cfg_;
  std::int64_t max_n_ = 0;
  std::map<std::pair<std::uint64_t, std::int64_t>, Eigen::ArrayXd> cache_;
};

GviProblem make_problem(const ExperimentConfig& cfg, const Measure& prior,
                        Dataset data) {
  GviProblem p;
  p.loss = LossModel::gaussian_nll(std::move(data), cfg.sigma_p);
  p.prior = prior;
  p.divergence = cfg.divergence;
  p.beta = cfg.beta;
  p.family = cfg.family;
  p.schedules = cfg.schedules;
  return p;
}

SolveResult solve_checked(const GviProblem& p, const char* runner,
                          std::int64_t n, std::uint64_t seed) {
  SolveResult res = solve(p);
  if (!res.converged) {
    std::ostringstream os;
    os << runner << ": solver failed to converge at n = " << n << ", seed = " << seed;
    throw Error(os.str());
  }
  return res;
}

// The divergence bound the slack column divides by; throws when neither the
// divergence nor an explicit M(n) schedule provides one.
double bound_for(const ExperimentConfig& cfg, std::int64_t n) {
  if (cfg.schedules.m_of_n) return (*cfg.schedules.m_of_n)(n);
  const auto b = cfg.divergence.bound_at(n);
  if (!b)
    throw UnboundedDivergenceError(
        "rate curves record slack = M(n)/(n beta(n)), which needs a finite "
        "divergence bound or an explicit M(n) schedule");
  return *b;
}

double beta_for(const ExperimentConfig& cfg, std::int64_t n) {
  if (cfg.schedules.beta_of_n) return (*cfg.schedules.beta_of_n)(n);
  return cfg.beta;
}

std::vector<double> medians_per_n(const std::vector<std::int64_t>& n_schedule,
                                  const std::vector<std::int64_t>& row_n,
                                  const std::vector<double>& row_value) {
  std::vector<double> out;
  out.reserve(n_schedule.size());
  for (std::int64_t n : n_schedule) {
    std::vector<double> at_n;
    for (std::size_t i = 0; i < row_n.size(); ++i)
      if (row_n[i] == n) at_n.push_back(row_value[i]);
    out.push_back(median(std::move(at_n)));
  }
  return out;
}

// Nondecreasing from the first-quartile index onward (tolerance 1e-9) and,
// when required, final value >= 0.95.
bool rates_medians_ok(const std::vector<double>& medians, bool require_final,
                      std::string* why) {
  const std::size_t k = medians.size();
  const std::size_t start = k / 4;
  for (std::size_t i = start; i + 1 < k; ++i) {
    if (medians[i + 1] < medians[i] - 1e-9) {
      std::ostringstream os;
      os << "median mass decreases past the first quartile (" << medians[i]
         << " -> " << medians[i + 1] << ")";
      *why = os.str();
      return false;
    }
  }
  if (require_final && !(medians.back() >= 0.95)) {
    std::ostringstream os;
    os << "final median mass " << medians.back() << " < 0.95";
    *why = os.str();
    return false;
  }
  return true;
}

// Core of run_rates / run_schedule: the schedule-divergence precheck is the
// only difference between the two runners.
RatesOutput run_rate_curves(const ExperimentConfig& cfg, const char* runner) {
  cfg.validate();
  for (std::int64_t n : cfg.n_schedule) {
    cfg.eps_schedule.eps(n);  // validates c > 0, a in (0,1)
    bound_for(cfg, n);        // validates the slack denominator early
  }

  DataProvider data(cfg);
  const std::vector<RunKey> keys = run_keys(cfg);
  const LimitLoss limit{cfg.dgp, cfg.sigma_p};

  RatesOutput out;
  std::vector<double> final_medians;
  std::vector<double> run_min_ratio;  // per run: min_n (loss gap at boundary)/eps
  bool first_prior = true;
  std::string failure;

  for (const Measure& prior : cfg.priors) {
    RateCurve curve;
    curve.prior_label = measure_label(prior);
    std::vector<std::int64_t> row_n;
    std::vector<double> row_mass;
    for (std::int64_t n : cfg.n_schedule) {
      const double eps = cfg.eps_schedule.eps(n);
      const Interval neigh = n_eps_interval(limit, eps);
      for (std::size_t ki = 0; ki < keys.size(); ++ki) {
        const RunKey& key = keys[ki];
        const GviProblem p = make_problem(cfg, prior, data.at(key, n));
        const SolveResult res = solve_checked(p, runner, n, key.seed);
        const double mass = mass_on_interval(res.posterior, neigh.lo, neigh.hi);
        RateRow row;
        row.n = n;
        row.eps_n = eps;
        row.mass = mass;
        row.slack = rstar_slack(p);
        row.objective = res.objective;
        row.seed = key.seed;
        curve.rows.push_back(row);
        row_n.push_back(n);
        row_mass.push_back(mass);
        if (first_prior) {
          // Empirical loss gap between the neighbourhood boundary and its
          // minimum, relative to eps: the constant the concentration bound
          // hides. Data (not the prior) determine it, so one pass suffices.
          const double xbar = p.loss.data().mean();
          double gap = 0.0;
          if (xbar > neigh.lo && xbar < neigh.hi) {
            const double edge = std::min(loss_at(p.loss, neigh.lo),
                                         loss_at(p.loss, neigh.hi));
            gap = std::max(0.0, edge - loss_at(p.loss, xbar));
          }
          const double ratio = gap / eps;
          if (row_n.size() <= keys.size())  // first n for this key: seed entry
            run_min_ratio.push_back(ratio);
          else
            run_min_ratio[ki] = std::min(run_min_ratio[ki], ratio);
        }
      }
    }
    const std::vector<double> med = medians_per_n(cfg.n_schedule, row_n, row_mass);
    final_medians.push_back(med.back());
    std::string why;
    if (!rates_medians_ok(med, cfg.eps_schedule.a <= 0.5, &why) && failure.empty()) {
      std::ostringstream os;
      os << "prior " << curve.prior_label << ": " << why;
      failure = os.str();
    }
    out.curves.push_back(std::move(curve));
    first_prior = false;
  }

  ContractReport report;
  report.enforced = cfg.enforce_contracts;
  report.satisfied = failure.empty();
  report.rate_constant_estimate = median(run_min_ratio);
  if (final_medians.size() > 1) {
    const auto [lo, hi] = std::minmax_element(final_medians.begin(), final_medians.end());
    report.robustness_spread = *hi - *lo;
  }
  std::ostringstream os;
  os << "rates contract (median neighbourhood mass nondecreasing past the first "
        "quartile"
     << (cfg.eps_schedule.a <= 0.5 ? ", final >= 0.95" : "") << "): "
     << (failure.empty() ? "satisfied" : failure);
  report.detail = os.str();
  out.contract = report;
  return out;
}

// A must carry strictly more limiting loss than the best parameter does.
void require_separated_interval(const ExperimentConfig& cfg, const Interval& a,
                                const char* runner) {
  if (!(a.lo <= a.hi))
    throw std::invalid_argument(std::string(runner) + ": malformed interval");
  const LimitLoss limit{cfg.dgp, cfg.sigma_p};
  const double best = limit_loss(limit, cfg.dgp.theta0);
  const double proj = std::clamp(cfg.dgp.theta0, a.lo, a.hi);
  const double inf_a = limit_loss(limit, proj);
  if (!(inf_a > best + 1e-9)) {
    std::ostringstream os;
    os << runner
       << ": the interval's limiting loss must strictly exceed the minimum "
          "(inf over A = "
       << inf_a << ", minimum = " << best << ")";
    throw PreconditionError(os.str());
  }
}

void require_single_prior(const ExperimentConfig& cfg, const char* runner) {
  if (cfg.priors.size() != 1)
    throw std::invalid_argument(std::string(runner) +
                                ": configure exactly one prior");
}

}  // namespace

double EpsSchedule::eps(std::int64_t n) const {
  if (!(c > 0.0) || !std::isfinite(c))
    throw std::invalid_argument("eps schedule: c must be positive and finite");
  if (!(a > 0.0 && a < 1.0))
    throw std::invalid_argument(
        "eps schedule: a must lie in (0, 1) so eps_n -> 0 while n * eps_n -> infinity");
  if (n < 1) throw std::invalid_argument("eps schedule: n must be >= 1");
  return c * std::pow(static_cast<double>(n), -a);
}

void ExperimentConfig::validate() const {
  if (!(sigma_p > 0.0) || !std::isfinite(sigma_p))
    throw std::invalid_argument("experiment config: sigma_p must be positive");
  if (!(dgp.sigma0 > 0.0) || !std::isfinite(dgp.sigma0))
    throw std::invalid_argument("experiment config: dgp sigma0 must be positive");
  if (!std::isfinite(dgp.theta0))
    throw std::invalid_argument("experiment config: dgp theta0 must be finite");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("experiment config: beta must be positive");
  if (priors.empty())
    throw std::invalid_argument("experiment config: at least one prior required");
  if (n_schedule.empty())
    throw std::invalid_argument("experiment config: n_schedule must be non-empty");
  for (std::size_t i = 0; i < n_schedule.size(); ++i) {
    if (n_schedule[i] < 1)
      throw std::invalid_argument("experiment config: every n must be >= 1");
    if (i > 0 && n_schedule[i] <= n_schedule[i - 1])
      throw std::invalid_argument(
          "experiment config: n_schedule must be strictly increasing");
  }
  if (seeds.empty())
    throw std::invalid_argument("experiment config: at least one seed required");
  if (replicates < 1)
    throw std::invalid_argument("experiment config: replicates must be >= 1");
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t experiment_stream(std::uint64_t seed, std::int64_t replicate,
                                std::int64_t n) {
  std::uint64_t s = seed;
  if (replicate != 0)
    s = mix64(s ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(replicate)));
  return mix64(s ^ (0xd1342543de82ef95ULL * static_cast<std::uint64_t>(n)));
}

Dataset simulate_dataset(const DataGeneratingProcess& dgp, std::int64_t n,
                         std::uint64_t stream) {
  if (n < 1) throw std::invalid_argument("simulate_dataset: n must be >= 1");
  const GaussianMeasure law(dgp.theta0, dgp.sigma0 * dgp.sigma0);
  return Dataset(sample(law, stream, static_cast<Eigen::Index>(n)), dgp);
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw EmptySetError("median: empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t k = xs.size();
  if (k % 2 == 1) return xs[k / 2];
  return 0.5 * (xs[k / 2 - 1] + xs[k / 2]);
}

std::string measure_label(const Measure& m) {
  std::ostringstream os;
  if (const auto* g = std::get_if<GaussianMeasure>(&m)) {
    if (g->is_dirac())
      os << "dirac(" << g->mean << ")";
    else
      os << "normal(" << g->mean << ", " << g->variance << ")";
  } else {
    const auto& d = std::get<DiscreteMeasure>(m);
    os << "grid[" << d.size() << " atoms on [" << d.grid[0] << ", "
       << d.grid[d.size() - 1] << "]]";
  }
  return os.str();
}

RatesOutput run_rates(const ExperimentConfig& cfg) {
  return run_rate_curves(cfg, "run_rates");
}

ConcentrationOutput run_concentration(const ExperimentConfig& cfg, const Interval& a) {
  cfg.validate();
  require_separated_interval(cfg, a, "run_concentration");
  require_single_prior(cfg, "run_concentration");

  DataProvider data(cfg);
  const std::vector<RunKey> keys = run_keys(cfg);
  ConcentrationOutput out;
  std::vector<std::int64_t> row_n;
  std::vector<double> row_mass;
  for (std::int64_t n : cfg.n_schedule) {
    for (const RunKey& key : keys) {
      const GviProblem p = make_problem(cfg, cfg.priors.front(), data.at(key, n));
      const SolveResult res = solve_checked(p, "run_concentration", n, key.seed);
      const double mass = mass_on_interval(res.posterior, a.lo, a.hi);
      out.rows.push_back({n, mass, key.seed});
      row_n.push_back(n);
      row_mass.push_back(mass);
    }
  }

  const std::vector<double> med = medians_per_n(cfg.n_schedule, row_n, row_mass);
  std::string why;
  bool ok = true;
  if (med.size() >= 2) {
    const std::size_t half = med.size() / 2;
    const double early =
        median(std::vector<double>(med.begin(), med.begin() + half));
    const double late = median(std::vector<double>(med.begin() + half, med.end()));
    if (late > early + 1e-9) {
      std::ostringstream os;
      os << "median mass trends upward (" << early << " -> " << late << ")";
      why = os.str();
      ok = false;
    }
  }
  if (ok && !(med.back() <= 0.01)) {
    std::ostringstream os;
    os << "final median mass " << med.back() << " > 0.01";
    why = os.str();
    ok = false;
  }

  ContractReport report;
  report.enforced = cfg.enforce_contracts;
  report.satisfied = ok;
  std::ostringstream os;
  os << "concentration contract (median mass of the separated interval "
        "non-increasing in trend, final <= 0.01): "
     << (ok ? "satisfied" : why);
  report.detail = os.str();
  out.contract = report;
  return out;
}

RatesOutput run_schedule(const ExperimentConfig& cfg) {
  cfg.validate();
  // The concentration argument needs n * eps_n * beta(n) / M(n) -> infinity;
  // verify the trend over the configured schedule before spending any solves.
  const std::int64_t n_first = cfg.n_schedule.front();
  const std::int64_t n_last = cfg.n_schedule.back();
  const auto ratio = [&](std::int64_t n) {
    return static_cast<double>(n) * cfg.eps_schedule.eps(n) * beta_for(cfg, n) /
           bound_for(cfg, n);
  };
  if (!(ratio(n_last) > ratio(n_first))) {
    std::ostringstream os;
    os << "run_schedule: n * eps_n * beta(n) / M(n) does not diverge on the "
          "configured schedule ("
       << ratio(n_first) << " at n = " << n_first << ", " << ratio(n_last)
       << " at n = " << n_last << ")";
    throw ScheduleViolationError(os.str());
  }
  return run_rate_curves(cfg, "run_schedule");
}

BayesOutput run_bayes_comparison(const ExperimentConfig& cfg,
                                 const std::vector<double>& mu_pi_offsets,
                                 std::int64_t n) {
  cfg.validate();
  require_single_prior(cfg, "run_bayes_comparison");
  if (n < 1) throw std::invalid_argument("run_bayes_comparison: n must be >= 1");
  if (mu_pi_offsets.empty())
    throw std::invalid_argument("run_bayes_comparison: empty prior-mean sweep");
  if (cfg.family.kind != FamilyKind::Gaussian)
    throw std::invalid_argument(
        "run_bayes_comparison: the conjugate comparison lives on the Gaussian track");
  const auto* base = std::get_if<GaussianMeasure>(&cfg.priors.front());
  if (base == nullptr || base->is_dirac())
    throw DegenerateMeasureError(
        "run_bayes_comparison: needs a non-degenerate Gaussian prior");

  const Dataset data =
      simulate_dataset(cfg.dgp, n, experiment_stream(cfg.seeds.front(), 0, n));
  const double xbar = data.mean();
  const double ball = bayes_prior_ball_radius(n, base->variance);

  BayesOutput out;
  bool all_gvi_in = true;
  bool any_outside = false;
  bool bayes_fails_outside = false;
  for (double offset : mu_pi_offsets) {
    const double mu_pi = xbar + offset;
    const GaussianMeasure prior(mu_pi, base->variance);
    const GviProblem p = make_problem(cfg, Measure(prior), data);
    const SolveResult res =
        solve_checked(p, "run_bayes_comparison", n, cfg.seeds.front());
    const GaussianMeasure bayes = bayes_posterior(data, prior, cfg.sigma_p);

    BayesRow row;
    row.mu_pi = mu_pi;
    row.bayes_mean = bayes.mean;
    row.gvi_mean = mean_of(res.posterior);
    row.bayes_in_rstar = is_in_rstar(p, Measure(bayes)).inside;
    row.gvi_in_rstar = res.in_rstar.value_or(false);
    row.prior_ball_ok = std::abs(mu_pi - xbar) <= ball;
    out.rows.push_back(row);

    all_gvi_in = all_gvi_in && row.gvi_in_rstar;
    if (!row.prior_ball_ok) {
      any_outside = true;
      if (!row.bayes_in_rstar) bayes_fails_outside = true;
    }
  }

  ContractReport report;
  report.enforced = cfg.enforce_contracts;
  std::string why;
  if (!all_gvi_in) {
    why = "a solved posterior fell outside the guaranteed region";
  } else if (!any_outside) {
    why = "sweep contains no prior mean outside the ball, so the contrast is unverifiable";
  } else if (!bayes_fails_outside) {
    why = "Bayes stayed inside the region for every prior mean outside the ball";
  }
  report.satisfied = why.empty();
  std::ostringstream os;
  os << "posterior-region comparison contract (solved posteriors always inside "
        "the region; Bayes leaves it for some prior mean outside the "
        "2/n + prior-variance ball): "
     << (why.empty() ? "satisfied" : why);
  report.detail = os.str();
  out.contract = report;
  return out;
}

UnboundedOutput run_unbounded_kl(const ExperimentConfig& cfg, const Interval& a) {
  cfg.validate();
  require_single_prior(cfg, "run_unbounded_kl");
  require_separated_interval(cfg, a, "run_unbounded_kl");
  if (cfg.divergence.kind != DivergenceKind::Kl)
    throw std::invalid_argument(
        "run_unbounded_kl: configure the KL divergence; bounded divergences "
        "belong to run_concentration");
  if (cfg.family.kind == FamilyKind::Gaussian) {
    const auto* g = std::get_if<GaussianMeasure>(&cfg.priors.front());
    if (g == nullptr || g->is_dirac())
      throw DegenerateMeasureError(
          "run_unbounded_kl: KL needs a prior whose support covers the truth");
  }

  DataProvider data(cfg);
  const std::vector<RunKey> keys = run_keys(cfg);
  UnboundedOutput out;
  std::vector<std::int64_t> row_n;
  std::vector<double> row_mass;
  std::vector<double> row_divn;
  for (std::int64_t n : cfg.n_schedule) {
    for (const RunKey& key : keys) {
      const GviProblem p = make_problem(cfg, cfg.priors.front(), data.at(key, n));
      const SolveResult res = solve_checked(p, "run_unbounded_kl", n, key.seed);
      const double mass = mass_on_interval(res.posterior, a.lo, a.hi);
      const double div_over_n =
          res.div_part * p.beta_at(n) / static_cast<double>(n);
      out.rows.push_back({n, mass, div_over_n, key.seed});
      row_n.push_back(n);
      row_mass.push_back(mass);
      row_divn.push_back(div_over_n);
    }
  }

  const std::vector<double> med_mass = medians_per_n(cfg.n_schedule, row_n, row_mass);
  const std::vector<double> med_divn = medians_per_n(cfg.n_schedule, row_n, row_divn);
  std::string why;
  if (!(med_mass.back() <= 0.02)) {
    std::ostringstream os;
    os << "final median mass " << med_mass.back() << " > 0.02";
    why = os.str();
  } else if (!(med_divn.back() <= 0.02)) {
    std::ostringstream os;
    os << "final median divergence/n " << med_divn.back() << " > 0.02";
    why = os.str();
  } else if (med_divn.size() >= 2 && !(med_divn.back() < med_divn.front())) {
    std::ostringstream os;
    os << "divergence/n did not shrink (" << med_divn.front() << " -> "
       << med_divn.back() << ")";
    why = os.str();
  }

  ContractReport report;
  report.enforced = cfg.enforce_contracts;
  report.satisfied = why.empty();
  std::ostringstream os;
  os << "unbounded-divergence contract (median mass of the separated interval "
        "and divergence/n both decay, final <= 0.02): "
     << (why.empty() ? "satisfied" : why);
  report.detail = os.str();
  out.contract = report;
  return out;
}

}  // namespace gvi
