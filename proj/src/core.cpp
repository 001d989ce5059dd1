#include "gvi/core.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace gvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kImprovementTol = 1e-11;
constexpr double kGradStep = 1e-6;
constexpr std::int64_t kIterationCap = 10000;
const double kLogSigmaMin = std::log(1e-6);
const double kLogSigmaMax = std::log(1e6);

void require_track(const GviProblem& p, const Measure& q, const char* what) {
  const bool want_gaussian = p.family.kind == FamilyKind::Gaussian;
  const bool got_gaussian = std::holds_alternative<GaussianMeasure>(q);
  if (want_gaussian != got_gaussian)
    throw FamilyClosureError(std::string(what) +
                             ": measure is not on the problem's family track");
}

// Objective value with every library error mapped to +infinity, which is what
// an optimiser wants to see for an inadmissible point.
double guarded_objective(const GviProblem& p, const Measure& q) {
  try {
    return objective(p, q).total;
  } catch (const Error&) {
    return kInf;
  } catch (const std::invalid_argument&) {
    return kInf;
  }
}

// ---- Gaussian-family minimisation ------------------------------------------

struct PathOutcome {
  bool valid = false;
  double mu = 0.0;
  double sigma = 0.0;
  double value = kInf;
  std::int64_t iterations = 0;
  bool capped = false;
};

using Fn2 = std::function<double(double, double)>;  // (mu, log sigma)

Eigen::Vector2d central_gradient(const Fn2& f, const Eigen::Vector2d& x) {
  Eigen::Vector2d g;
  for (int i = 0; i < 2; ++i) {
    Eigen::Vector2d hi = x, lo = x;
    hi[i] += kGradStep;
    lo[i] -= kGradStep;
    g[i] = (f(hi[0], hi[1]) - f(lo[0], lo[1])) / (2.0 * kGradStep);
  }
  return g;
}

// Quasi-Newton descent (inverse-Hessian BFGS updates) over (mu, log sigma)
// with Armijo backtracking. Plain gradient steps stall an order of magnitude
// short of the agreement tolerances the closed forms are tested at; the
// curvature model is what buys the final digits.
PathOutcome bfgs_path(const Fn2& f, double mu0, double log_sigma0) {
  Eigen::Vector2d x(mu0, std::clamp(log_sigma0, kLogSigmaMin, kLogSigmaMax));
  double fx = f(x[0], x[1]);
  PathOutcome out;
  if (!std::isfinite(fx)) return out;
  out.valid = true;
  Eigen::Matrix2d h = Eigen::Matrix2d::Identity();
  Eigen::Vector2d g = central_gradient(f, x);
  std::int64_t iter = 0;
  for (;;) {
    if (iter >= kIterationCap) {
      out.capped = true;
      break;
    }
    ++iter;
    if (!g.allFinite()) break;
    Eigen::Vector2d d = -(h * g);
    if (d.dot(g) >= 0.0) {
      h.setIdentity();
      d = -g;
    }
    const double slope = d.dot(g);
    double t = 1.0;
    double fn = kInf;
    Eigen::Vector2d xn = x;
    bool accepted = false;
    while (t >= 1e-16) {
      xn = x + t * d;
      xn[1] = std::clamp(xn[1], kLogSigmaMin, kLogSigmaMax);
      fn = f(xn[0], xn[1]);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // stationary at our resolution
    const Eigen::Vector2d gn = central_gradient(f, xn);
    const Eigen::Vector2d s = xn - x;
    const Eigen::Vector2d y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
      h = (id - rho * s * y.transpose()) * h * (id - rho * y * s.transpose()) +
          rho * s * s.transpose();
    } else {
      h.setIdentity();
    }
    const double improvement = fx - fn;
    x = xn;
    fx = fn;
    g = gn;
    if (improvement < kImprovementTol) break;
  }
  out.mu = x[0];
  out.sigma = std::exp(x[1]);
  out.value = fx;
  out.iterations = iter;
  return out;
}

// Golden-section search along the sigma = 0 boundary. The loss term is a
// parabola in mu there and the divergence term is flat off the prior's atoms,
// so the line is unimodal up to isolated dips, which the explicit candidate
// evaluations cover.
PathOutcome dirac_probe(const GviProblem& p, double center, double radius) {
  const auto g = [&p](double mu) {
    return guarded_objective(p, Measure(GaussianMeasure(mu, 0.0)));
  };
  double a = center - radius;
  double b = center + radius;
  constexpr double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = g(c);
  double fd = g(d);
  std::int64_t evals = 2;
  for (int it = 0; it < 90; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = g(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = g(d);
    }
    ++evals;
  }
  PathOutcome out;
  out.mu = fc < fd ? c : d;
  out.sigma = 0.0;
  out.value = std::min(fc, fd);
  out.iterations = evals;
  out.valid = std::isfinite(out.value);
  return out;
}

struct GaussianEntry {
  GaussianMeasure q;
  double value = kInf;
  bool capped = false;
};

// Smaller objective wins; within 1e-9, the smaller variance, then the mean
// closest to the reference.
bool entry_better(double value_a, double var_a, double mean_a, double value_b,
                  double var_b, double mean_b, double ref) {
  if (value_a < value_b - 1e-9) return true;
  if (value_a > value_b + 1e-9) return false;
  if (var_a != var_b) return var_a < var_b;
  return std::abs(mean_a - ref) < std::abs(mean_b - ref);
}

void finalize_membership(const GviProblem& p, SolveResult& res) {
  if (!p.bound_at(p.n())) return;
  const Membership m = is_in_rstar(p, res.posterior);
  res.in_rstar = m.inside;
  // A bounded-divergence optimum is guaranteed to sit inside the region, so a
  // converged-looking point outside it is a failed solve, not an answer.
  if (res.converged && !m.inside) res.converged = false;
}

SolveResult assemble_result(const GviProblem& p, const Measure& q,
                            std::int64_t iterations, bool converged) {
  SolveResult res;
  res.posterior = q;
  const ObjectiveParts parts = objective(p, q);
  res.objective = parts.total;
  res.loss_part = parts.loss_part;
  res.div_part = parts.div_part;
  res.iterations = iterations;
  res.converged = converged;
  finalize_membership(p, res);
  return res;
}

SolveResult solve_gaussian(const GviProblem& p) {
  const Dataset& data = p.loss.data();
  const double xbar = data.mean();
  const std::int64_t n = p.n();
  const double prior_mean = mean_of(p.prior);
  double sigma0 = 1.0;
  if (const auto* g = std::get_if<GaussianMeasure>(&p.prior))
    if (!g->is_dirac()) sigma0 = g->sigma();

  const Fn2 f = [&p](double mu, double log_sigma) {
    const double s = std::exp(log_sigma);
    return guarded_objective(p, Measure(GaussianMeasure(mu, s * s)));
  };

  std::vector<GaussianEntry> entries;
  std::int64_t total_iters = 0;

  const double mu_starts[3] = {prior_mean, xbar, 0.5 * (prior_mean + xbar)};
  const double ls0 = std::log(std::max(sigma0, 1e-6));
  for (double mu0 : mu_starts) {
    const PathOutcome o = bfgs_path(f, mu0, ls0);
    total_iters += o.iterations;
    if (o.valid)
      entries.push_back({GaussianMeasure(o.mu, o.sigma * o.sigma), o.value, o.capped});
  }

  // Descent can overshoot a narrow low-sigma valley in a single accepted step
  // and then crawl in the flat spike region below it, so sweep a geometric
  // sigma ladder at the interesting means and polish from the best rung.
  {
    const double s_hi = 4.0 * std::max({sigma0, p.loss.sigma_p(), 1.0});
    double path_mu = xbar;
    double path_val = kInf;
    for (const GaussianEntry& e : entries)
      if (e.value < path_val) {
        path_val = e.value;
        path_mu = e.q.mean;
      }
    double best_mu = xbar, best_ls = ls0, best_val = kInf;
    for (double mu0 : {xbar, prior_mean, path_mu}) {
      for (double ls = std::log(1e-6); ls <= std::log(s_hi); ls += 0.25) {
        const double v = f(mu0, ls);
        if (v < best_val) {
          best_val = v;
          best_mu = mu0;
          best_ls = ls;
        }
      }
    }
    if (std::isfinite(best_val)) {
      entries.push_back({GaussianMeasure(best_mu, std::exp(2.0 * best_ls)), best_val,
                         false});
      const PathOutcome o = bfgs_path(f, best_mu, best_ls);
      total_iters += o.iterations;
      if (o.valid)
        entries.push_back({GaussianMeasure(o.mu, o.sigma * o.sigma), o.value, o.capped});
    }
  }

  // Directly evaluated candidates: the prior itself and, when the divergence
  // gives point masses finite values, the degenerate members the theory cares
  // about (sample mean, prior location, prior atoms).
  std::vector<GaussianMeasure> candidates;
  if (const auto* g = std::get_if<GaussianMeasure>(&p.prior)) candidates.push_back(*g);
  if (p.divergence.tolerates_point_mass()) {
    candidates.emplace_back(xbar, 0.0);
    if (const auto* g = std::get_if<GaussianMeasure>(&p.prior))
      candidates.emplace_back(g->mean, 0.0);
    if (const auto* d = std::get_if<DiscreteMeasure>(&p.prior))
      for (Eigen::Index i = 0; i < d->size(); ++i)
        candidates.emplace_back(d->grid[i], 0.0);
  }
  for (const GaussianMeasure& c : candidates) {
    const double v = guarded_objective(p, Measure(c));
    if (std::isfinite(v)) entries.push_back({c, v, false});
  }

  if (p.divergence.tolerates_point_mass()) {
    if (const auto m = p.bound_at(n)) {
      // Outside this radius the quadratic loss already exceeds the best
      // boundary value by more than the divergence term can repay.
      const double sp = p.loss.sigma_p();
      const double r =
          std::sqrt(std::max(2.0 * (*m) * sp * sp / (p.beta_at(n) * n), 0.0)) + 1.0;
      const PathOutcome o = dirac_probe(p, xbar, r);
      total_iters += o.iterations;
      if (o.valid) entries.push_back({GaussianMeasure(o.mu, 0.0), o.value, false});
    }
  }

  if (entries.empty())
    throw InfeasibleProblemError("solve: no family member with finite objective found");

  const GaussianEntry* best = &entries.front();
  for (const GaussianEntry& e : entries)
    if (entry_better(e.value, e.q.variance, e.q.mean, best->value, best->q.variance,
                     best->q.mean, xbar))
      best = &e;

  return assemble_result(p, Measure(best->q), total_iters, !best->capped);
}

// ---- grid-family machinery -------------------------------------------------

// The prior as seen from the family grid: weights on shared atoms plus the
// mass the family can never touch (off-grid atoms or a diffuse component).
struct PriorAtoms {
  Eigen::ArrayXd v;
  double off_mass = 0.0;
};

PriorAtoms align_prior(const GviProblem& p) {
  const Eigen::ArrayXd& grid = p.family.grid;
  PriorAtoms pa;
  pa.v = Eigen::ArrayXd::Zero(grid.size());
  if (const auto* g = std::get_if<GaussianMeasure>(&p.prior)) {
    if (g->is_dirac()) {
      bool hit = false;
      for (Eigen::Index i = 0; i < grid.size(); ++i)
        if (grid[i] == g->mean) {
          pa.v[i] = 1.0;
          hit = true;
        }
      if (!hit) pa.off_mass = 1.0;
    } else {
      pa.off_mass = 1.0;  // atomless: shares no atom with any grid
    }
    return pa;
  }
  const auto& d = std::get<DiscreteMeasure>(p.prior);
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    bool hit = false;
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      if (grid[i] == d.grid[j]) {
        pa.v[i] = d.weights[j];
        hit = true;
        break;
      }
    if (!hit) pa.off_mass += d.weights[j];
  }
  return pa;
}

struct WeightObjective {
  const GviProblem& p;
  Eigen::ArrayXd losses;
  PriorAtoms prior;
  std::int64_t n = 1;
  double inv_beta = 1.0;

  double operator()(const Eigen::ArrayXd& w) const {
    if ((w < 0.0).any()) return kInf;
    // One virtual atom carries the prior mass the grid cannot see.
    Eigen::ArrayXd we(w.size() + 1);
    Eigen::ArrayXd ve(w.size() + 1);
    we.head(w.size()) = w;
    we[w.size()] = 0.0;
    ve.head(w.size()) = prior.v;
    ve[w.size()] = prior.off_mass;
    double d = 0.0;
    try {
      d = weights_divergence(p.divergence, we, ve, n);
    } catch (const Error&) {
      return kInf;
    }
    if (!std::isfinite(d)) return kInf;
    return static_cast<double>(n) * (w * losses).sum() + inv_beta * d;
  }
};

WeightObjective make_weight_objective(const GviProblem& p) {
  const Eigen::ArrayXd& grid = p.family.grid;
  Eigen::ArrayXd losses(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) losses[i] = loss_at(p.loss, grid[i]);
  const std::int64_t n = p.n();
  return {p, std::move(losses), align_prior(p), n, 1.0 / p.beta_at(n)};
}

Eigen::ArrayXd project_simplex(const Eigen::ArrayXd& y) {
  const Eigen::Index k = y.size();
  std::vector<double> u(y.data(), y.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    css += u[j];
    const double cand = (css - 1.0) / static_cast<double>(j + 1);
    if (u[j] - cand > 0.0) tau = cand;
  }
  Eigen::ArrayXd w = (y - tau).max(0.0);
  const double total = w.sum();
  if (total > 0.0) w /= total;  // exact renormalisation guards rounding
  return w;
}

Eigen::ArrayXd weight_gradient(const WeightObjective& f, const Eigen::ArrayXd& w,
                               double fw) {
  Eigen::ArrayXd g = Eigen::ArrayXd::Zero(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double hp = kGradStep;
    const double hm = std::min(kGradStep, w[i]);
    Eigen::ArrayXd wp = w;
    wp[i] += hp;
    const double fp = f(wp);
    double slope;
    if (hm > 0.0) {
      Eigen::ArrayXd wm = w;
      wm[i] -= hm;
      slope = (fp - f(wm)) / (hp + hm);
    } else {
      slope = (fp - fw) / hp;
    }
    g[i] = std::isfinite(slope) ? slope : 0.0;
  }
  return g;
}

struct DiscretePath {
  bool valid = false;
  Eigen::ArrayXd w;
  double value = kInf;
  std::int64_t iterations = 0;
  bool capped = false;
};

DiscretePath projected_gradient(const WeightObjective& f, const Eigen::ArrayXd& start) {
  DiscretePath out;
  Eigen::ArrayXd w = project_simplex(start);
  double fw = f(w);
  if (!std::isfinite(fw)) return out;
  out.valid = true;
  double t = 1.0;
  std::int64_t iter = 0;
  for (;;) {
    if (iter >= kIterationCap) {
      out.capped = true;
      break;
    }
    ++iter;
    const Eigen::ArrayXd g = weight_gradient(f, w, fw);
    double tt = t;
    Eigen::ArrayXd wn;
    double fn = kInf;
    bool accepted = false;
    while (tt >= 1e-18) {
      wn = project_simplex(w - tt * g);
      fn = f(wn);
      const double dist_sq = (w - wn).square().sum();
      if (std::isfinite(fn) && fn <= fw - 1e-4 * dist_sq / tt) {
        accepted = true;
        break;
      }
      tt *= 0.5;
    }
    if (!accepted) break;
    t = std::min(tt * 1.5, 1e6);
    const double improvement = fw - fn;
    w = wn;
    fw = fn;
    if (improvement < kImprovementTol) break;
  }
  out.w = w;
  out.value = fw;
  out.iterations = iter;
  return out;
}

// Damped-Newton refinement in softmax coordinates over the feasible support.
// First-order simplex steps flatten out around 1e-4 of parameter error, far
// short of the closed-form agreement tolerances; the softmax chart removes
// the boundary so a few Newton steps can finish the job.
DiscretePath newton_polish(const WeightObjective& f, const std::vector<int>& support,
                           DiscretePath path) {
  const int m = static_cast<int>(support.size());
  if (!path.valid || m < 2) return path;
  const Eigen::Index k = path.w.size();

  const auto embed = [&](const Eigen::VectorXd& z) {
    Eigen::ArrayXd w = Eigen::ArrayXd::Zero(k);
    double peak = z.maxCoeff();
    double total = 0.0;
    for (int j = 0; j < m; ++j) {
      const double e = std::exp(z[j] - peak);
      w[support[j]] = e;
      total += e;
    }
    w /= total;
    return w;
  };
  const auto phi = [&](const Eigen::VectorXd& z) { return f(embed(z)); };

  Eigen::VectorXd z(m);
  for (int j = 0; j < m; ++j) z[j] = std::log(std::max(path.w[support[j]], 1e-12));
  double fz = phi(z);
  if (!std::isfinite(fz)) return path;

  const double hg = 1e-5;
  const double hh = 1e-4;
  std::int64_t steps = 0;
  for (int it = 0; it < 12; ++it) {
    Eigen::VectorXd g(m);
    for (int a = 0; a < m; ++a) {
      Eigen::VectorXd zp = z, zm = z;
      zp[a] += hg;
      zm[a] -= hg;
      g[a] = (phi(zp) - phi(zm)) / (2.0 * hg);
    }
    Eigen::MatrixXd hess(m, m);
    for (int a = 0; a < m; ++a) {
      for (int b = a; b < m; ++b) {
        Eigen::VectorXd zpp = z, zpm = z, zmp = z, zmm = z;
        zpp[a] += hh;
        zpp[b] += hh;
        zpm[a] += hh;
        zpm[b] -= hh;
        zmp[a] -= hh;
        zmp[b] += hh;
        zmm[a] -= hh;
        zmm[b] -= hh;
        const double v = (phi(zpp) - phi(zpm) - phi(zmp) + phi(zmm)) / (4.0 * hh * hh);
        hess(a, b) = v;
        hess(b, a) = v;
      }
    }
    double lambda = 1e-8 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
    bool accepted = false;
    Eigen::VectorXd zn;
    double fn = kInf;
    for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
      const Eigen::MatrixXd damped =
          hess + lambda * Eigen::MatrixXd::Identity(m, m);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd d = ldlt.solve(-g);
        double t = 1.0;
        for (int bt = 0; bt < 30; ++bt) {
          zn = z + t * d;
          fn = phi(zn);
          if (std::isfinite(fn) && fn < fz - 1e-14) {
            accepted = true;
            break;
          }
          t *= 0.5;
        }
      }
      if (!accepted) lambda *= 10.0;
    }
    if (!accepted) break;
    const double improvement = fz - fn;
    z = zn;
    fz = fn;
    ++steps;
    if (improvement < 1e-13) break;
  }

  if (fz < path.value) {
    path.w = embed(z);
    path.value = fz;
  }
  path.iterations += steps;
  return path;
}

bool divergence_smooth_in_weights(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::Kl:
    case DivergenceKind::LeCam:
    case DivergenceKind::GenericF:
      return true;
    default:
      return false;
  }
}

std::vector<int> feasible_support(const GviProblem& p, const PriorAtoms& prior) {
  std::vector<int> support;
  for (Eigen::Index i = 0; i < p.family.grid.size(); ++i) {
    if (p.divergence.kind == DivergenceKind::Kl && prior.v[i] <= 0.0) continue;
    support.push_back(static_cast<int>(i));
  }
  return support;
}

Eigen::Index loss_argmin(const Eigen::ArrayXd& losses) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < losses.size(); ++i)
    if (losses[i] < losses[best]) best = i;
  return best;
}

// Deterministic warm starts. Beyond the obvious ones (uniform, loss-argmin
// vertex, renormalised prior), the sweep keeps the prior weights below each
// loss level and dumps the remainder on the argmin vertex — the shape a
// mass-moving divergence like TV gives its optima.
std::vector<Eigen::ArrayXd> discrete_candidates(const Eigen::ArrayXd& losses,
                                                const PriorAtoms& prior) {
  const Eigen::Index k = losses.size();
  std::vector<Eigen::ArrayXd> out;
  out.push_back(Eigen::ArrayXd::Constant(k, 1.0 / static_cast<double>(k)));
  const Eigen::Index amin = loss_argmin(losses);
  Eigen::ArrayXd vertex = Eigen::ArrayXd::Zero(k);
  vertex[amin] = 1.0;
  out.push_back(vertex);
  const double on_grid = prior.v.sum();
  if (on_grid > 0.0) {
    out.push_back(prior.v / on_grid);
    std::vector<double> levels(losses.data(), losses.data() + k);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (double level : levels) {
      Eigen::ArrayXd w = Eigen::ArrayXd::Zero(k);
      for (Eigen::Index i = 0; i < k; ++i)
        if (losses[i] <= level) w[i] = prior.v[i];
      const double kept = w.sum();
      w[amin] += 1.0 - kept;
      out.push_back(std::move(w));
    }
  }
  return out;
}

SolveResult solve_gibbs(const GviProblem& p) {
  const WeightObjective f = make_weight_objective(p);
  const Eigen::Index k = f.losses.size();
  Eigen::ArrayXd logw(k);
  double peak = -kInf;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (f.prior.v[i] > 0.0) {
      logw[i] = std::log(f.prior.v[i]) -
                p.beta_at(p.n()) * static_cast<double>(p.n()) * f.losses[i];
      peak = std::max(peak, logw[i]);
    } else {
      logw[i] = -kInf;
    }
  }
  if (!std::isfinite(peak))
    throw InfeasibleProblemError(
        "solve: prior shares no support with the family grid under KL");
  Eigen::ArrayXd w(k);
  for (Eigen::Index i = 0; i < k; ++i)
    w[i] = std::isfinite(logw[i]) ? std::exp(logw[i] - peak) : 0.0;
  w /= w.sum();
  return assemble_result(p, Measure(DiscreteMeasure(p.family.grid, w)), 0, true);
}

DiscretePath run_discrete_path(const GviProblem& p, const WeightObjective& f,
                               const Eigen::ArrayXd& start) {
  DiscretePath path = projected_gradient(f, start);
  if (path.valid && divergence_smooth_in_weights(p.divergence.kind))
    path = newton_polish(f, feasible_support(p, f.prior), path);
  return path;
}

SolveResult discrete_result(const GviProblem& p, const DiscretePath& best,
                            std::int64_t total_iters) {
  Eigen::ArrayXd w = best.w;
  // Scrub projection dust so reported posteriors are exactly normalised.
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] < 1e-15) w[i] = 0.0;
  w /= w.sum();
  return assemble_result(p, Measure(DiscreteMeasure(p.family.grid, w)), total_iters,
                         !best.capped);
}

SolveResult solve_discrete(const GviProblem& p) {
  if (p.divergence.kind == DivergenceKind::Kl) return solve_gibbs(p);
  const WeightObjective f = make_weight_objective(p);

  std::vector<Eigen::ArrayXd> candidates = discrete_candidates(f.losses, f.prior);
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = f(candidates[i]);
    if (std::isfinite(v)) ranked.emplace_back(v, i);
  }
  if (ranked.empty())
    throw InfeasibleProblemError("solve: no family member with finite objective found");
  std::sort(ranked.begin(), ranked.end());

  std::int64_t total_iters = 0;
  const DiscretePath* best = nullptr;
  std::vector<DiscretePath> paths;
  paths.reserve(4);
  const std::size_t n_starts = std::min<std::size_t>(3, ranked.size());
  for (std::size_t s = 0; s < n_starts; ++s) {
    paths.push_back(run_discrete_path(p, f, candidates[ranked[s].second]));
    total_iters += paths.back().iterations;
  }
  paths.push_back(run_discrete_path(p, f, candidates.front()));  // uniform
  total_iters += paths.back().iterations;

  for (const DiscretePath& path : paths) {
    if (!path.valid) continue;
    if (best == nullptr || path.value < best->value) best = &path;
  }
  if (best == nullptr)
    throw InfeasibleProblemError("solve: no finite descent path on the simplex");
  return discrete_result(p, *best, total_iters);
}

// Feasibility probe behind the structural validation: find any family member
// with finite objective.
bool has_finite_member(const GviProblem& p) {
  if (p.family.kind == FamilyKind::Gaussian) {
    std::vector<GaussianMeasure> candidates;
    if (const auto* g = std::get_if<GaussianMeasure>(&p.prior)) candidates.push_back(*g);
    if (p.loss.is_gaussian_nll() && !p.loss.data().empty()) {
      const double xbar = p.loss.data().mean();
      candidates.emplace_back(xbar, 1.0);
      if (p.divergence.tolerates_point_mass()) candidates.emplace_back(xbar, 0.0);
    }
    candidates.emplace_back(mean_of(p.prior), 1.0);
    for (const GaussianMeasure& c : candidates)
      if (std::isfinite(guarded_objective(p, Measure(c)))) return true;
    return false;
  }
  const WeightObjective f = make_weight_objective(p);
  std::vector<Eigen::ArrayXd> candidates;
  const double on_grid = f.prior.v.sum();
  if (on_grid > 0.0) candidates.push_back(f.prior.v / on_grid);
  const Eigen::Index k = p.family.grid.size();
  candidates.push_back(Eigen::ArrayXd::Constant(k, 1.0 / static_cast<double>(k)));
  Eigen::ArrayXd vertex = Eigen::ArrayXd::Zero(k);
  vertex[loss_argmin(f.losses)] = 1.0;
  candidates.push_back(std::move(vertex));
  for (const Eigen::ArrayXd& c : candidates)
    if (std::isfinite(f(c))) return true;
  return false;
}

}  // namespace

// ---- Schedule / problem plumbing -------------------------------------------

double Schedule::operator()(std::int64_t n) const {
  if (n < 1) throw std::invalid_argument("Schedule: n must be >= 1");
  double v = 0.0;
  switch (kind) {
    case Kind::Constant:
      v = coeff;
      break;
    case Kind::Power:
      v = coeff * std::pow(static_cast<double>(n), exponent);
      break;
    case Kind::Log:
      v = coeff * std::log(static_cast<double>(n));
      break;
  }
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << "Schedule: value must be positive and finite (got " << v << " at n = " << n
       << ")";
    throw ScheduleViolationError(os.str());
  }
  return v;
}

double GviProblem::beta_at(std::int64_t at_n) const {
  if (schedules.beta_of_n) return (*schedules.beta_of_n)(at_n);
  return beta;
}

std::optional<double> GviProblem::bound_at(std::int64_t at_n) const {
  if (schedules.m_of_n) return (*schedules.m_of_n)(at_n);
  return divergence.bound_at(at_n);
}

void GviProblem::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("GviProblem: beta must be positive and finite");
  if (n() < 1) throw std::invalid_argument("GviProblem: sample size must be >= 1");
  if (family.kind == FamilyKind::Gaussian && loss.is_table())
    throw std::invalid_argument(
        "GviProblem: a table loss has no Gaussian-family extension");
  if (family.kind == FamilyKind::Discrete && loss.is_table()) {
    const Eigen::ArrayXd& tg = loss.table_grid();
    for (Eigen::Index i = 0; i < family.grid.size(); ++i) {
      bool found = false;
      for (Eigen::Index j = 0; j < tg.size(); ++j)
        if (tg[j] == family.grid[i]) {
          found = true;
          break;
        }
      if (!found)
        throw GridMismatchError(
            "GviProblem: family grid point missing from the loss table");
    }
  }
  const bool prior_gaussian = std::holds_alternative<GaussianMeasure>(prior);
  const bool family_gaussian = family.kind == FamilyKind::Gaussian;
  if (prior_gaussian != family_gaussian) {
    // Only the total-variation family of divergences (and squared Hellinger)
    // has meaningful finite values across the continuous/grid boundary.
    switch (divergence.kind) {
      case DivergenceKind::Tv:
      case DivergenceKind::HellingerSq:
      case DivergenceKind::ScaledTv:
        break;
      default:
        throw std::invalid_argument(
            "GviProblem: prior and family live on different tracks and the "
            "divergence does not tolerate that");
    }
  }
  if (!has_finite_member(*this))
    throw InfeasibleProblemError(
        "GviProblem: no family member has finite objective");
}

// ---- objective and solvers -------------------------------------------------

ObjectiveParts objective(const GviProblem& p, const Measure& q) {
  require_track(p, q, "objective");
  const std::int64_t n = p.n();
  if (n < 1) throw std::invalid_argument("objective: sample size must be >= 1");
  ObjectiveParts parts;
  parts.loss_part = static_cast<double>(n) * expected_loss(p.loss, q);
  parts.div_part = evaluate(p.divergence, q, p.prior, n) / p.beta_at(n);
  parts.total = parts.loss_part + parts.div_part;
  return parts;
}

SolveResult solve(const GviProblem& p) {
  p.validate();
  if (p.family.kind == FamilyKind::Gaussian) return solve_gaussian(p);
  return solve_discrete(p);
}

SolveResult solve_discrete_projected(const GviProblem& p, const Eigen::ArrayXd& start) {
  p.validate();
  if (p.family.kind != FamilyKind::Discrete)
    throw std::invalid_argument("solve_discrete_projected: grid family required");
  if (start.size() != p.family.grid.size())
    throw GridMismatchError("solve_discrete_projected: start length mismatch");
  const WeightObjective f = make_weight_objective(p);
  const DiscretePath path = run_discrete_path(p, f, start);
  if (!path.valid)
    throw InfeasibleProblemError("solve_discrete_projected: start has no finite value");
  return discrete_result(p, path, path.iterations);
}

SolveResult solve_grid_oracle(const GviProblem& p, const GridSearch& grid) {
  if (p.family.kind != FamilyKind::Gaussian)
    throw std::invalid_argument("solve_grid_oracle: covers the Gaussian family only");
  if (!(std::isfinite(grid.mean_lo) && std::isfinite(grid.mean_hi) &&
        std::isfinite(grid.sigma_lo) && std::isfinite(grid.sigma_hi)))
    throw std::invalid_argument("solve_grid_oracle: ranges must be finite");
  if (!(grid.step > 0.0)) throw std::invalid_argument("solve_grid_oracle: step must be > 0");
  if (!(grid.mean_lo <= grid.mean_hi) || !(grid.sigma_lo <= grid.sigma_hi) ||
      grid.sigma_lo < 0.0)
    throw std::invalid_argument("solve_grid_oracle: malformed ranges");

  const double xbar =
      p.loss.is_gaussian_nll() && !p.loss.data().empty() ? p.loss.data().mean() : 0.0;
  const auto count = [&](double lo, double hi) {
    return static_cast<Eigen::Index>(std::floor((hi - lo) / grid.step + 1e-9)) + 1;
  };
  const Eigen::Index n_mu = count(grid.mean_lo, grid.mean_hi);
  const Eigen::Index n_sigma = count(grid.sigma_lo, grid.sigma_hi);

  bool have_best = false;
  double best_value = kInf;
  GaussianMeasure best_q(0.0, 1.0);
  std::int64_t cells = 0;
  for (Eigen::Index i = 0; i < n_mu; ++i) {
    const double mu = grid.mean_lo + static_cast<double>(i) * grid.step;
    for (Eigen::Index j = 0; j < n_sigma; ++j) {
      const double sigma = grid.sigma_lo + static_cast<double>(j) * grid.step;
      ++cells;
      const GaussianMeasure q(mu, sigma * sigma);
      const double v = guarded_objective(p, Measure(q));
      if (!std::isfinite(v)) continue;
      if (!have_best || entry_better(v, q.variance, q.mean, best_value, best_q.variance,
                                     best_q.mean, xbar)) {
        have_best = true;
        best_value = v;
        best_q = q;
      }
    }
  }
  if (!have_best)
    throw InfeasibleProblemError("solve_grid_oracle: every cell had infinite objective");
  return assemble_result(p, Measure(best_q), cells, true);
}

// ---- region machinery ------------------------------------------------------

double rstar_slack(double m_bound, std::int64_t n, double beta) {
  if (!(m_bound > 0.0) || !(beta > 0.0) || n < 1)
    throw std::invalid_argument("rstar_slack: all arguments must be positive");
  return m_bound / (static_cast<double>(n) * beta);
}

double rstar_slack(const GviProblem& p) {
  const std::int64_t n = p.n();
  const auto m = p.bound_at(n);
  if (!m)
    throw UnboundedDivergenceError(
        "rstar_slack: the configured divergence carries no finite bound");
  return rstar_slack(*m, n, p.beta_at(n));
}

RStarRegion rstar_region(const GviProblem& p) {
  RStarRegion region;
  region.j_star = empirical_loss_minimiser(p.loss, p.family).value;
  region.slack = rstar_slack(p);
  region.family = p.family;
  return region;
}

Membership is_in_rstar(const GviProblem& p, const Measure& q) {
  require_track(p, q, "is_in_rstar");
  const double slack = rstar_slack(p);
  const double j = expected_loss(p.loss, q);
  const double j_star = empirical_loss_minimiser(p.loss, p.family).value;
  const double margin = slack - (j - j_star);
  return {margin >= -1e-10, margin};
}

double RStarGaussianBounds::mean_radius(double sigma) const {
  if (!(sigma >= 0.0)) throw std::invalid_argument("mean_radius: sigma must be >= 0");
  return std::sqrt(std::max(0.0, radius_sq - sigma * sigma));
}

double RStarGaussianBounds::var_cap(double mu) const {
  const double d = mu - center;
  return std::max(0.0, radius_sq - d * d);
}

RStarGaussianBounds rstar_gaussian_bounds(const Dataset& data, double m_bound,
                                          double beta, std::int64_t n,
                                          double sigma_p) {
  if (!(m_bound > 0.0) || !(beta > 0.0) || n < 1 || !(sigma_p > 0.0))
    throw std::invalid_argument("rstar_gaussian_bounds: all parameters must be positive");
  if (data.empty()) throw EmptyDataError("rstar_gaussian_bounds: needs observations");
  RStarGaussianBounds b;
  b.center = data.mean();
  b.radius_sq = 2.0 * m_bound * sigma_p * sigma_p / (beta * static_cast<double>(n));
  return b;
}

// ---- conjugate posteriors --------------------------------------------------

GaussianMeasure bayes_posterior(const Dataset& data, const GaussianMeasure& prior,
                                double sigma_p) {
  if (!(prior.variance > 0.0))
    throw DegenerateMeasureError("bayes_posterior: prior must be non-degenerate");
  if (data.empty()) throw EmptyDataError("bayes_posterior: needs observations");
  if (!(sigma_p > 0.0) || !std::isfinite(sigma_p))
    throw std::invalid_argument("bayes_posterior: sigma_p must be positive");
  const double vp = sigma_p * sigma_p;
  const double precision = 1.0 / prior.variance + static_cast<double>(data.n()) / vp;
  const double variance = 1.0 / precision;
  const double mean =
      variance * (prior.mean / prior.variance + data.values().sum() / vp);
  return {mean, variance};
}

GaussianMeasure vb_kl_posterior(const Dataset& data, const GaussianMeasure& prior,
                                double sigma_p) {
  return bayes_posterior(data, prior, sigma_p);
}

double bayes_prior_ball_radius(std::int64_t n, double sigma_pi_sq) {
  if (n < 1 || !(sigma_pi_sq > 0.0))
    throw std::invalid_argument("bayes_prior_ball_radius: need n >= 1 and a positive prior variance");
  return 2.0 / static_cast<double>(n) + sigma_pi_sq;
}

// ---- mixtures --------------------------------------------------------------

Membership mixture_membership_check(const GviProblem& p, const Measure& q1,
                                    const Measure& q2, double a) {
  if (!(a >= 0.0 && a <= 1.0))
    throw std::invalid_argument("mixture_membership_check: a must lie in [0, 1]");
  if (p.family.kind == FamilyKind::Gaussian)
    throw FamilyClosureError(
        "mixture_membership_check: a mixture of Gaussians leaves the Gaussian family");
  if (!p.family.contains(q1) || !p.family.contains(q2))
    throw FamilyClosureError(
        "mixture_membership_check: both endpoints must belong to the family");
  const auto& d1 = std::get<DiscreteMeasure>(q1);
  const auto& d2 = std::get<DiscreteMeasure>(q2);
  Eigen::ArrayXd w = a * d1.weights + (1.0 - a) * d2.weights;
  w /= w.sum();
  return is_in_rstar(p, Measure(DiscreteMeasure(p.family.grid, std::move(w))));
}

}  // namespace gvi
