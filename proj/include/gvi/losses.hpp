#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "gvi/measures.hpp"

namespace gvi {

// Closed interval of parameter values; endpoints may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

// Which variational family a problem optimises over.
enum class FamilyKind { Gaussian, Discrete };

struct FamilyDescriptor {
  FamilyKind kind = FamilyKind::Gaussian;
  Eigen::ArrayXd grid;  // Discrete only

  static FamilyDescriptor gaussian();
  static FamilyDescriptor discrete(Eigen::ArrayXd grid);

  // Family membership; grid families require the exact same grid.
  bool contains(const Measure& m) const;
};

// Empirical loss attached to a dataset. Two kinds:
//  - GaussianNll: theta -> (1/n) sum_i -log N(x_i; theta, sigma_p^2),
//    the average negative log likelihood of a location model;
//  - Table: explicit values on a parameter grid, dataset supplying only the
//    sample size that multiplies the loss inside an objective.
class LossModel {
 public:
  enum class Kind { GaussianNll, Table };

  static LossModel gaussian_nll(Dataset data, double sigma_p = 1.0);
  static LossModel table(Eigen::ArrayXd grid, Eigen::ArrayXd values, Dataset data);

  Kind kind() const { return kind_; }
  bool is_gaussian_nll() const { return kind_ == Kind::GaussianNll; }
  bool is_table() const { return kind_ == Kind::Table; }

  const Dataset& data() const { return data_; }
  std::int64_t n() const { return static_cast<std::int64_t>(data_.n()); }

  double sigma_p() const;
  const Eigen::ArrayXd& table_grid() const;
  const Eigen::ArrayXd& table_values() const;

 private:
  LossModel() = default;

  Kind kind_ = Kind::GaussianNll;
  Dataset data_;
  double sigma_p_ = 1.0;
  Eigen::ArrayXd grid_;
  Eigen::ArrayXd values_;
};

// Pointwise empirical loss. GaussianNll needs observations (EmptyDataError
// otherwise); Table requires theta to be a grid point (GridMismatchError).
double loss_at(const LossModel& m, double theta);

// E_q[loss]. Gaussian q against the location model has the closed form
//   (1/2) log(2 pi sigma_p^2) + [SS/(2n) - mu xbar + (mu^2 + s^2)/2] / sigma_p^2
// and a point mass reduces exactly to loss_at(mean). Table losses have no
// continuous extension, so a non-degenerate Gaussian q against one is an error.
double expected_loss_gaussian(const LossModel& m, const GaussianMeasure& q);
double expected_loss_discrete(const LossModel& m, const DiscreteMeasure& q);
double expected_loss(const LossModel& m, const Measure& q);

// inf_theta-in-A of the empirical loss, over an interval or an explicit set
// of parameter values. Empty restriction sets throw EmptySetError.
double inf_loss(const LossModel& m, const Interval& a);
double inf_loss(const LossModel& m, const std::vector<double>& thetas);

// Population counterpart of the location-model loss when data come from
// N(theta0, sigma0^2): the n -> infinity limit of loss_at and the induced
// divergence rate between model points.
struct LimitLoss {
  DataGeneratingProcess dgp{};
  double sigma_p = 1.0;
};

// L(theta) = (1/2) log(2 pi sigma_p^2) + (sigma0^2 + (theta - theta0)^2) / (2 sigma_p^2)
double limit_loss(const LimitLoss& m, double theta);

// KL(N(theta0, sigma0^2) : N(theta, sigma_p^2)); vanishes iff the model point
// matches the sampling distribution exactly.
double kl_rate(const LimitLoss& m, double theta);

// The sublevel set {theta : L(theta) <= inf L + eps}: an interval centred at
// theta0 with half-width sqrt(2 sigma_p^2 eps).
Interval n_eps_interval(const LimitLoss& m, double eps);

// Family member with the smallest expected empirical loss, and that value.
// Gaussian family: the point mass at the sample mean. Grid family: the vertex
// at the loss argmin (ties resolved toward the smallest parameter).
struct LossMinimiser {
  Measure measure;
  double value = 0.0;
};

LossMinimiser empirical_loss_minimiser(const LossModel& m, const FamilyDescriptor& family);

}  // namespace gvi
