#pragma once

#include <optional>

#include "gvi/divergences.hpp"
#include "gvi/losses.hpp"

namespace gvi {

// Positive function of the sample size; used to relax the divergence bound
// M(n) and the learning rate beta(n) as n grows.
struct Schedule {
  enum class Kind { Constant, Power, Log };
  Kind kind = Kind::Constant;
  double coeff = 1.0;
  double exponent = 1.0;

  // coeff            (Constant)
  // coeff * n^exponent   (Power)
  // coeff * log(n)       (Log)
  // Throws ScheduleViolationError when the value is not positive and finite.
  double operator()(std::int64_t n) const;
};

struct GviSchedules {
  std::optional<Schedule> m_of_n;
  std::optional<Schedule> beta_of_n;
};

// A complete variational problem: minimise
//   n * E_q[loss] + (1 / beta(n)) * D(q : prior)
// over the declared family. The sample size comes from the loss's dataset.
struct GviProblem {
  LossModel loss = LossModel::gaussian_nll(Dataset(Eigen::ArrayXd::Zero(1)));
  Measure prior = GaussianMeasure(0.0, 1.0);
  DivergenceSpec divergence = DivergenceSpec::tv();
  double beta = 1.0;
  FamilyDescriptor family = FamilyDescriptor::gaussian();
  GviSchedules schedules{};

  std::int64_t n() const { return loss.n(); }
  // Learning rate at sample size n: the beta(n) schedule when configured,
  // otherwise the constant beta.
  double beta_at(std::int64_t n) const;
  // Divergence bound at sample size n: the M(n) schedule when configured,
  // otherwise the divergence's own bound (with its c(n) scaling).
  std::optional<double> bound_at(std::int64_t n) const;

  // Enforces the structural invariants: positive beta, a sample size of at
  // least one, compatible prior/family tracks, and the existence of at least
  // one family member with finite objective.
  void validate() const;
};

struct ObjectiveParts {
  double total = 0.0;
  double loss_part = 0.0;  // n * E_q[loss]
  double div_part = 0.0;   // (1 / beta(n)) * D(q : prior), c(n) applied
};

// Evaluates the objective at a family-track measure. Divergence errors
// propagate (e.g. KL against a point mass).
ObjectiveParts objective(const GviProblem& p, const Measure& q);

struct SolveResult {
  Measure posterior = GaussianMeasure(0.0, 1.0);
  double objective = 0.0;
  double loss_part = 0.0;
  double div_part = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
  // Membership of the theory's near-minimiser region; absent when the
  // divergence carries no finite bound.
  std::optional<bool> in_rstar;
};

// Minimises the objective over the declared family.
//  - Gaussian family: quasi-Newton descent in (mu, log sigma) with
//    central-difference gradients (h = 1e-6), multi-start from the prior
//    mean, the sample mean, and their midpoint, termination on objective
//    improvement < 1e-11 or 10^4 iterations; plus an explicit sigma = 0
//    boundary probe whenever the divergence assigns point masses a finite
//    value, because the log parametrization alone can never reach a
//    degenerate optimum.
//  - Grid family with KL: exact closed form w_i proportional to
//    prior_i * exp(-beta n L_i).
//  - Grid family otherwise: projected gradient descent on the simplex from a
//    deterministic candidate set, with a reduced-space Newton polish for
//    smooth divergences.
// Ties between equal-objective optima (within 1e-9) break toward the smaller
// variance, then the mean closest to the sample mean.
// Throws InfeasibleProblemError when no start has finite objective; a result
// that stopped on the iteration cap, or landed outside the region a bounded
// divergence guarantees, reports converged = false rather than lying.
SolveResult solve(const GviProblem& p);

// Projected-gradient solve of a grid-family problem from a caller-supplied
// start; bypasses the closed forms so the iterative path itself can be
// validated against them.
SolveResult solve_discrete_projected(const GviProblem& p, const Eigen::ArrayXd& start);

// Exhaustive reference minimiser over a (mean, sigma) rectangle for the
// Gaussian family. Cells where the objective is undefined or infinite are
// skipped. Intended as the brute-force oracle that solve is tested against.
struct GridSearch {
  double mean_lo = 0.0;
  double mean_hi = 0.0;
  double sigma_lo = 0.0;
  double sigma_hi = 0.0;
  double step = 0.01;
};

SolveResult solve_grid_oracle(const GviProblem& p, const GridSearch& grid);

// The near-minimiser slack M / (n beta).
double rstar_slack(double m_bound, std::int64_t n, double beta);
// Schedule-aware slack of a problem; UnboundedDivergenceError without a bound.
double rstar_slack(const GviProblem& p);

struct RStarRegion {
  double j_star = 0.0;
  double slack = 0.0;
  FamilyDescriptor family;
};

RStarRegion rstar_region(const GviProblem& p);

struct Membership {
  bool inside = false;
  // slack - (E_q[loss] - j_star); membership means margin >= -1e-10.
  double margin = 0.0;
};

// Tests whether q is within slack of the family's best achievable expected
// loss. Requires a finite divergence bound.
Membership is_in_rstar(const GviProblem& p, const Measure& q);

// Region geometry for the Gaussian location model: expected-loss excess of
// N(mu, sigma^2) over the degenerate minimiser is
// ((mu - xbar)^2 + sigma^2) / (2 sigma_p^2), so membership is a disc:
//   (mu - xbar)^2 + sigma^2 <= 2 M sigma_p^2 / (beta n).
struct RStarGaussianBounds {
  double center = 0.0;     // sample mean
  double radius_sq = 0.0;  // 2 M sigma_p^2 / (beta n)

  // Admissible half-width for the mean at fixed sigma.
  double mean_radius(double sigma) const;
  // Admissible variance cap at fixed mean.
  double var_cap(double mu) const;
};

RStarGaussianBounds rstar_gaussian_bounds(const Dataset& data, double m_bound,
                                          double beta, std::int64_t n,
                                          double sigma_p = 1.0);

// Conjugate Gaussian posterior for the location model:
// variance (1/sigma_pi^2 + n/sigma_p^2)^-1, mean pulled between prior mean
// and sample mean by the precisions.
GaussianMeasure bayes_posterior(const Dataset& data, const GaussianMeasure& prior,
                                double sigma_p = 1.0);

// KL-GVI over the Gaussian family with the location loss reproduces the
// conjugate posterior exactly; kept as its own operation so the solver can be
// validated against it.
GaussianMeasure vb_kl_posterior(const Dataset& data, const GaussianMeasure& prior,
                                double sigma_p = 1.0);

// Radius of the prior-mean ball inside which the conjugate Bayes posterior
// stays in the region (at M = beta): 2/n + sigma_pi^2.
double bayes_prior_ball_radius(std::int64_t n, double sigma_pi_sq);

// Membership of the mixture a*q1 + (1-a)*q2. Expected loss is linear in the
// measure, so the mixture's membership follows from the endpoints' values;
// on the Gaussian track the mixture leaves the family (FamilyClosureError).
Membership mixture_membership_check(const GviProblem& p, const Measure& q1,
                                    const Measure& q2, double a);

}  // namespace gvi
