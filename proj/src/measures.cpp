#include "gvi/measures.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace gvi {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

[[noreturn]] void fail_invalid(const std::string& msg) {
  throw std::invalid_argument(msg);
}

}  // namespace

GaussianMeasure::GaussianMeasure(double mean_, double variance_)
    : mean(mean_), variance(variance_) {
  if (!std::isfinite(mean)) fail_invalid("GaussianMeasure: mean must be finite");
  if (!std::isfinite(variance) || variance < 0.0)
    fail_invalid("GaussianMeasure: variance must be finite and >= 0");
}

double GaussianMeasure::sigma() const { return std::sqrt(variance); }

DiscreteMeasure::DiscreteMeasure(Eigen::ArrayXd grid_, Eigen::ArrayXd weights_)
    : grid(std::move(grid_)), weights(std::move(weights_)) {
  if (grid.size() == 0) fail_invalid("DiscreteMeasure: grid must be non-empty");
  if (grid.size() != weights.size())
    fail_invalid("DiscreteMeasure: grid and weights must have equal length");
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) fail_invalid("DiscreteMeasure: grid points must be finite");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      fail_invalid("DiscreteMeasure: grid must be strictly increasing");
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      fail_invalid("DiscreteMeasure: weights must be finite and >= 0");
  }
  const double total = weights.sum();
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "DiscreteMeasure: weights must sum to 1 (got " << total << ")";
    fail_invalid(os.str());
  }
}

bool is_dirac(const Measure& m) {
  if (const auto* g = std::get_if<GaussianMeasure>(&m)) return g->is_dirac();
  const auto& d = std::get<DiscreteMeasure>(m);
  return (d.weights == 1.0).count() == 1 && d.weights.sum() == 1.0;
}

double mean_of(const Measure& m) {
  if (const auto* g = std::get_if<GaussianMeasure>(&m)) return g->mean;
  const auto& d = std::get<DiscreteMeasure>(m);
  return (d.grid * d.weights).sum();
}

Dataset::Dataset(Eigen::ArrayXd values, std::optional<DataGeneratingProcess> dgp)
    : values_(std::move(values)), dgp_(std::move(dgp)) {
  for (Eigen::Index i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      fail_invalid("Dataset: observations must be finite");
  if (values_.size() > 0) {
    mean_ = values_.mean();
    sum_squares_ = values_.square().sum();
    variance_ = (values_ - mean_).square().mean();
  }
  if (dgp_ && !(dgp_->sigma0 > 0.0 && std::isfinite(dgp_->sigma0)))
    fail_invalid("Dataset: sampling sigma0 must be positive and finite");
}

double Dataset::mean() const {
  if (empty()) throw EmptyDataError("Dataset::mean: dataset is empty");
  return mean_;
}

double Dataset::sum_squares() const {
  if (empty()) throw EmptyDataError("Dataset::sum_squares: dataset is empty");
  return sum_squares_;
}

double Dataset::variance() const {
  if (empty()) throw EmptyDataError("Dataset::variance: dataset is empty");
  return variance_;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double gaussian_log_density(const GaussianMeasure& g, double x) {
  if (g.is_dirac())
    throw DegenerateMeasureError(
        "gaussian_log_density: point mass has no density");
  const double d = x - g.mean;
  return -0.5 * (kLogTwoPi + std::log(g.variance)) - d * d / (2.0 * g.variance);
}

Eigen::ArrayXd sample(const GaussianMeasure& g, std::uint64_t seed,
                      Eigen::Index count) {
  if (count < 0) fail_invalid("sample: count must be >= 0");
  Eigen::ArrayXd out(count);
  if (count == 0) return out;
  if (g.is_dirac()) {
    out.setConstant(g.mean);
    return out;
  }
  std::mt19937_64 engine(seed);
  // 53-bit uniforms in (0, 1]; the +1 keeps log() away from zero.
  const auto unit = [&engine] {
    return static_cast<double>((engine() >> 11) + 1) * 0x1.0p-53;
  };
  const double s = g.sigma();
  for (Eigen::Index i = 0; i < count; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(unit()));
    const double t = kTwoPi * unit();
    out[i] = g.mean + s * r * std::cos(t);
    if (i + 1 < count) out[i + 1] = g.mean + s * r * std::sin(t);
  }
  return out;
}

double mass_on_interval(const GaussianMeasure& m, double lo, double hi) {
  if (std::isnan(lo) || std::isnan(hi) || !(lo <= hi))
    fail_invalid("mass_on_interval: need lo <= hi");
  if (m.is_dirac()) return (m.mean >= lo && m.mean <= hi) ? 1.0 : 0.0;
  const double s = m.sigma();
  const double upper = std::isinf(hi) && hi > 0 ? 1.0 : normal_cdf((hi - m.mean) / s);
  const double lower = std::isinf(lo) && lo < 0 ? 0.0 : normal_cdf((lo - m.mean) / s);
  return std::max(0.0, upper - lower);
}

double mass_on_interval(const DiscreteMeasure& m, double lo, double hi) {
  if (std::isnan(lo) || std::isnan(hi) || !(lo <= hi))
    fail_invalid("mass_on_interval: need lo <= hi");
  double total = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (m.grid[i] >= lo && m.grid[i] <= hi) total += m.weights[i];
  return total;
}

double mass_on_interval(const Measure& m, double lo, double hi) {
  return std::visit([&](const auto& inner) { return mass_on_interval(inner, lo, hi); }, m);
}

DiscreteMeasure discretize(const GaussianMeasure& g, const Eigen::ArrayXd& grid) {
  if (grid.size() == 0) fail_invalid("discretize: grid must be non-empty");
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      fail_invalid("discretize: grid must be strictly increasing");

  if (g.is_dirac()) {
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      if (grid[i] == g.mean) {
        Eigen::ArrayXd w = Eigen::ArrayXd::Zero(grid.size());
        w[i] = 1.0;
        return DiscreteMeasure(grid, w);
      }
    }
    throw DegenerateMeasureError(
        "discretize: point mass lies off the target grid");
  }

  const Eigen::Index k = grid.size();
  Eigen::ArrayXd logw(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    // Cell widths from midpoints between neighbours; edge cells reflect.
    const double left = i == 0 ? grid[0] - (grid.size() > 1 ? (grid[1] - grid[0]) / 2.0 : 0.5)
                               : (grid[i - 1] + grid[i]) / 2.0;
    const double right = i + 1 == k ? grid[k - 1] + (k > 1 ? (grid[k - 1] - grid[k - 2]) / 2.0 : 0.5)
                                    : (grid[i] + grid[i + 1]) / 2.0;
    logw[i] = gaussian_log_density(g, grid[i]) + std::log(right - left);
  }
  const double peak = logw.maxCoeff();
  Eigen::ArrayXd w = (logw - peak).exp();
  w /= w.sum();
  return DiscreteMeasure(grid, std::move(w));
}

}  // namespace gvi
