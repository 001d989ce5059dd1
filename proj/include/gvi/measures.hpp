#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <variant>

#include "gvi/errors.hpp"

namespace gvi {

// One-dimensional Gaussian, with variance == 0 encoding a point mass (Dirac)
// at the mean. Point masses are first-class citizens here because variational
// optima under total-variation-style divergences routinely degenerate to them.
struct GaussianMeasure {
  double mean = 0.0;
  double variance = 1.0;

  GaussianMeasure() = default;
  GaussianMeasure(double mean, double variance);

  bool is_dirac() const { return variance == 0.0; }
  double sigma() const;
};

// Finitely supported probability measure on a strictly increasing grid.
struct DiscreteMeasure {
  Eigen::ArrayXd grid;
  Eigen::ArrayXd weights;

  DiscreteMeasure(Eigen::ArrayXd grid, Eigen::ArrayXd weights);

  Eigen::Index size() const { return grid.size(); }
};

using Measure = std::variant<GaussianMeasure, DiscreteMeasure>;

bool is_dirac(const Measure& m);
// Center of mass; used as an optimisation start hint.
double mean_of(const Measure& m);

// The sampling distribution behind a simulated dataset: X_i ~ N(theta0, sigma0^2).
struct DataGeneratingProcess {
  double theta0 = 0.0;
  double sigma0 = 1.0;
};

// Observation vector with cached empirical summaries. Summaries of an empty
// dataset throw EmptyDataError on access; construction of an empty dataset is
// allowed (count-only losses need it).
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Eigen::ArrayXd values,
                   std::optional<DataGeneratingProcess> dgp = std::nullopt);

  const Eigen::ArrayXd& values() const { return values_; }
  Eigen::Index n() const { return values_.size(); }
  bool empty() const { return values_.size() == 0; }

  double mean() const;
  double sum_squares() const;
  double variance() const;  // population variance, (1/n) sum (x - mean)^2

  const std::optional<DataGeneratingProcess>& dgp() const { return dgp_; }

 private:
  Eigen::ArrayXd values_;
  double mean_ = 0.0;
  double sum_squares_ = 0.0;
  double variance_ = 0.0;
  std::optional<DataGeneratingProcess> dgp_;
};

// Standard normal CDF, computed as erfc(-z / sqrt(2)) / 2. The C library erfc
// is good to a couple of ulps, so absolute error is far below 1e-12 everywhere.
double normal_cdf(double z);

// log density of a non-degenerate Gaussian; DegenerateMeasureError for a Dirac.
double gaussian_log_density(const GaussianMeasure& g, double x);

// Deterministic sampling: a fixed seed fully determines the draw. Uses a
// mt19937_64 stream through a Box-Muller transform rather than
// std::normal_distribution, whose output is implementation-defined.
Eigen::ArrayXd sample(const GaussianMeasure& g, std::uint64_t seed,
                      Eigen::Index count);

// Probability of the closed interval [lo, hi]; lo <= hi required, infinite
// endpoints allowed.
double mass_on_interval(const GaussianMeasure& m, double lo, double hi);
double mass_on_interval(const DiscreteMeasure& m, double lo, double hi);
double mass_on_interval(const Measure& m, double lo, double hi);

// Projects a non-degenerate Gaussian onto a grid: cell weights proportional to
// density times cell width (cells split halfway between neighbouring points),
// renormalised. Computed in log space so distant grids still normalise.
// A Dirac projects to its own atom when the mean lies exactly on the grid and
// is an error otherwise.
DiscreteMeasure discretize(const GaussianMeasure& g, const Eigen::ArrayXd& grid);

}  // namespace gvi
