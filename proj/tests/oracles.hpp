// Independent reference implementations the tests check the library against.
// Everything here is deliberately written from first principles — fixed-grid
// composite Simpson instead of adaptive panels, its own RNG instead of the
// library's stream derivation, long-double softmax instead of the solver —
// so that agreement between the two is evidence, not tautology.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// xorshift64* — a different generator family from anything the library uses.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next() {
    std::uint64_t x = state;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box–Muller without caching; both uniforms drawn fresh every call.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};

inline double normal_pdf(double mean, double var, double x) {
  const double d = x - mean;
  return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * kPi * var);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Composite Simpson with 2*panels + 1 nodes.
inline double simpson(const std::function<double(double)>& f, double lo, double hi,
                      int panels) {
  const double h = (hi - lo) / (2.0 * panels);
  double sum = f(lo) + f(hi);
  for (int i = 1; i < 2 * panels; ++i) sum += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

struct GaussianPair {
  double m1, v1, m2, v2;
};

// Integrates h(q(x), p(x)) over a window generously covering both densities.
inline double pair_integral(const GaussianPair& g,
                            const std::function<double(double, double)>& h,
                            int panels = 40000) {
  const double s1 = std::sqrt(g.v1);
  const double s2 = std::sqrt(g.v2);
  const double lo = std::min(g.m1 - 14.0 * s1, g.m2 - 14.0 * s2);
  const double hi = std::max(g.m1 + 14.0 * s1, g.m2 + 14.0 * s2);
  return simpson(
      [&](double x) { return h(normal_pdf(g.m1, g.v1, x), normal_pdf(g.m2, g.v2, x)); },
      lo, hi, panels);
}

inline double tv_ref(const GaussianPair& g) {
  return 0.5 * pair_integral(g, [](double q, double p) { return std::abs(q - p); });
}

inline double hellinger_sq_ref(const GaussianPair& g) {
  const double bc = pair_integral(g, [](double q, double p) { return std::sqrt(q * p); });
  return 1.0 - bc;
}

inline double le_cam_ref(const GaussianPair& g) {
  return pair_integral(g, [](double q, double p) {
    const double s = q + p;
    if (s <= 0.0) return 0.0;
    const double d = q - p;
    return d * d / s;
  });
}

// Integrates q (log q - log p) with log densities formed directly, so narrow
// reference tails cannot underflow the ratio to infinity.
inline double kl_ref(const GaussianPair& g) {
  const double s1 = std::sqrt(g.v1);
  const double lo = g.m1 - 14.0 * s1;
  const double hi = g.m1 + 14.0 * s1;
  const auto log_pdf = [](double m, double v, double x) {
    const double z = x - m;
    return -0.5 * std::log(2.0 * kPi * v) - z * z / (2.0 * v);
  };
  return simpson(
      [&](double x) {
        const double lq = log_pdf(g.m1, g.v1, x);
        const double lp = log_pdf(g.m2, g.v2, x);
        return std::exp(lq) * (lq - lp);
      },
      lo, hi, 40000);
}

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;
};

// Conjugate Gaussian-location posterior for known observation variance.
inline MeanVar conjugate_posterior_ref(double prior_mean, double prior_var,
                                       double sum_x, std::int64_t n, double sigma_p) {
  const double prec = 1.0 / prior_var + static_cast<double>(n) / (sigma_p * sigma_p);
  MeanVar out;
  out.variance = 1.0 / prec;
  out.mean = out.variance * (prior_mean / prior_var + sum_x / (sigma_p * sigma_p));
  return out;
}

// Exponentially tilted prior weights, evaluated in long double with an
// explicit max-shift so the reference is immune to overflow.
inline std::vector<double> gibbs_weights_ref(const std::vector<double>& prior,
                                             const std::vector<double>& losses,
                                             double beta, std::int64_t n) {
  long double best = -1e4900L;
  std::vector<long double> expo(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    expo[i] = std::log(static_cast<long double>(prior[i])) -
              static_cast<long double>(beta) * static_cast<long double>(n) *
                  static_cast<long double>(losses[i]);
    if (prior[i] > 0.0 && expo[i] > best) best = expo[i];
  }
  long double z = 0.0L;
  for (std::size_t i = 0; i < prior.size(); ++i)
    if (prior[i] > 0.0) z += std::exp(expo[i] - best);
  std::vector<double> out(prior.size(), 0.0);
  for (std::size_t i = 0; i < prior.size(); ++i)
    if (prior[i] > 0.0)
      out[i] = static_cast<double>(std::exp(expo[i] - best) / z);
  return out;
}

// The achieved minimum of the exponentially tilted objective,
// -(1/beta) log sum_i prior_i exp(-beta n L_i).
inline double gibbs_min_total_ref(const std::vector<double>& prior,
                                  const std::vector<double>& losses, double beta,
                                  std::int64_t n) {
  long double best = -1e4900L;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const long double e = std::log(static_cast<long double>(prior[i] > 0 ? prior[i] : 1)) -
                          static_cast<long double>(beta) * n * losses[i];
    if (prior[i] > 0.0 && e > best) best = e;
  }
  long double z = 0.0L;
  for (std::size_t i = 0; i < prior.size(); ++i)
    if (prior[i] > 0.0)
      z += std::exp(std::log(static_cast<long double>(prior[i])) -
                    static_cast<long double>(beta) * n * losses[i] - best);
  return static_cast<double>(-(best + std::log(z)) / beta);
}

inline double gaussian_interval_mass_ref(double mean, double var, double lo, double hi) {
  if (var == 0.0) return (mean >= lo && mean <= hi) ? 1.0 : 0.0;
  const double s = std::sqrt(var);
  return normal_cdf((hi - mean) / s) - normal_cdf((lo - mean) / s);
}

// Monte Carlo average of f over N(mean, var) — used to validate expectations.
inline double mc_gaussian_expectation(const std::function<double(double)>& f,
                                      double mean, double var, int draws, Rng& rng) {
  double acc = 0.0;
  const double s = std::sqrt(var);
  for (int i = 0; i < draws; ++i) acc += f(mean + s * rng.normal());
  return acc / draws;
}

inline Eigen::ArrayXd to_array(const std::vector<double>& xs) {
  Eigen::ArrayXd out(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = xs[i];
  return out;
}

// Random simplex point by normalized exponentials (strictly positive weights).
inline std::vector<double> random_simplex(Rng& rng, std::size_t k) {
  std::vector<double> w(k);
  double total = 0.0;
  for (double& x : w) {
    x = std::exp(rng.uniform(-2.0, 2.0));
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace oracle
