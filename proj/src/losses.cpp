#include "gvi/losses.hpp"

#include <algorithm>
#include <cmath>

namespace gvi {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double require_table_value(const Eigen::ArrayXd& grid, const Eigen::ArrayXd& values,
                           double theta) {
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    if (grid[i] == theta) return values[i];
  throw GridMismatchError("loss_at: parameter is not a point of the loss table");
}

}  // namespace

FamilyDescriptor FamilyDescriptor::gaussian() { return {FamilyKind::Gaussian, {}}; }

FamilyDescriptor FamilyDescriptor::discrete(Eigen::ArrayXd grid) {
  if (grid.size() == 0)
    throw std::invalid_argument("FamilyDescriptor::discrete: grid must be non-empty");
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument(
          "FamilyDescriptor::discrete: grid must be strictly increasing");
  return {FamilyKind::Discrete, std::move(grid)};
}

bool FamilyDescriptor::contains(const Measure& m) const {
  if (kind == FamilyKind::Gaussian) return std::holds_alternative<GaussianMeasure>(m);
  const auto* d = std::get_if<DiscreteMeasure>(&m);
  if (d == nullptr || d->size() != grid.size()) return false;
  return (d->grid == grid).all();
}

LossModel LossModel::gaussian_nll(Dataset data, double sigma_p) {
  if (!(sigma_p > 0.0) || !std::isfinite(sigma_p))
    throw std::invalid_argument("LossModel: sigma_p must be positive and finite");
  LossModel m;
  m.kind_ = Kind::GaussianNll;
  m.data_ = std::move(data);
  m.sigma_p_ = sigma_p;
  return m;
}

LossModel LossModel::table(Eigen::ArrayXd grid, Eigen::ArrayXd values, Dataset data) {
  if (grid.size() == 0 || grid.size() != values.size())
    throw std::invalid_argument("LossModel: table grid and values must match and be non-empty");
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || !std::isfinite(values[i]))
      throw std::invalid_argument("LossModel: table entries must be finite");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument("LossModel: table grid must be strictly increasing");
  }
  LossModel m;
  m.kind_ = Kind::Table;
  m.data_ = std::move(data);
  m.grid_ = std::move(grid);
  m.values_ = std::move(values);
  return m;
}

double LossModel::sigma_p() const {
  if (kind_ != Kind::GaussianNll)
    throw std::logic_error("LossModel::sigma_p: not a location-model loss");
  return sigma_p_;
}

const Eigen::ArrayXd& LossModel::table_grid() const {
  if (kind_ != Kind::Table) throw std::logic_error("LossModel::table_grid: not a table loss");
  return grid_;
}

const Eigen::ArrayXd& LossModel::table_values() const {
  if (kind_ != Kind::Table)
    throw std::logic_error("LossModel::table_values: not a table loss");
  return values_;
}

double loss_at(const LossModel& m, double theta) {
  if (!std::isfinite(theta))
    throw std::invalid_argument("loss_at: parameter must be finite");
  if (m.is_table()) return require_table_value(m.table_grid(), m.table_values(), theta);
  const Dataset& d = m.data();
  if (d.empty()) throw EmptyDataError("loss_at: location-model loss needs observations");
  const double vp = m.sigma_p() * m.sigma_p();
  const double quad = d.sum_squares() / d.n() - 2.0 * theta * d.mean() + theta * theta;
  return 0.5 * (kLogTwoPi + std::log(vp)) + quad / (2.0 * vp);
}

double expected_loss_gaussian(const LossModel& m, const GaussianMeasure& q) {
  if (q.is_dirac()) return loss_at(m, q.mean);
  if (m.is_table())
    throw MixedTrackError(
        "expected_loss: a table loss has no extension off its grid");
  const Dataset& d = m.data();
  if (d.empty())
    throw EmptyDataError("expected_loss: location-model loss needs observations");
  const double vp = m.sigma_p() * m.sigma_p();
  const double mixed = d.sum_squares() / (2.0 * d.n()) - q.mean * d.mean() +
                       0.5 * (q.mean * q.mean + q.variance);
  return 0.5 * (kLogTwoPi + std::log(vp)) + mixed / vp;
}

double expected_loss_discrete(const LossModel& m, const DiscreteMeasure& q) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q.weights[i] > 0.0) total += q.weights[i] * loss_at(m, q.grid[i]);
  return total;
}

double expected_loss(const LossModel& m, const Measure& q) {
  if (const auto* g = std::get_if<GaussianMeasure>(&q)) return expected_loss_gaussian(m, *g);
  return expected_loss_discrete(m, std::get<DiscreteMeasure>(q));
}

double inf_loss(const LossModel& m, const Interval& a) {
  if (std::isnan(a.lo) || std::isnan(a.hi) || !(a.lo <= a.hi))
    throw std::invalid_argument("inf_loss: need lo <= hi");
  if (m.is_gaussian_nll()) {
    // Quadratic in theta, so the restricted minimiser is the projection of
    // the sample mean onto the interval.
    const Dataset& d = m.data();
    if (d.empty()) throw EmptyDataError("inf_loss: location-model loss needs observations");
    return loss_at(m, std::clamp(d.mean(), a.lo, a.hi));
  }
  const Eigen::ArrayXd& grid = m.table_grid();
  const Eigen::ArrayXd& values = m.table_values();
  bool found = false;
  double best = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (grid[i] < a.lo || grid[i] > a.hi) continue;
    if (!found || values[i] < best) best = values[i];
    found = true;
  }
  if (!found) throw EmptySetError("inf_loss: no table point inside the interval");
  return best;
}

double inf_loss(const LossModel& m, const std::vector<double>& thetas) {
  if (thetas.empty()) throw EmptySetError("inf_loss: empty restriction set");
  double best = loss_at(m, thetas.front());
  for (std::size_t i = 1; i < thetas.size(); ++i)
    best = std::min(best, loss_at(m, thetas[i]));
  return best;
}

double limit_loss(const LimitLoss& m, double theta) {
  if (!(m.sigma_p > 0.0)) throw std::invalid_argument("limit_loss: sigma_p must be positive");
  const double vp = m.sigma_p * m.sigma_p;
  const double d = theta - m.dgp.theta0;
  const double v0 = m.dgp.sigma0 * m.dgp.sigma0;
  return 0.5 * (kLogTwoPi + std::log(vp)) + (v0 + d * d) / (2.0 * vp);
}

double kl_rate(const LimitLoss& m, double theta) {
  if (!(m.sigma_p > 0.0)) throw std::invalid_argument("kl_rate: sigma_p must be positive");
  const double vp = m.sigma_p * m.sigma_p;
  const double v0 = m.dgp.sigma0 * m.dgp.sigma0;
  const double d = theta - m.dgp.theta0;
  const double r = v0 / vp;
  return d * d / (2.0 * vp) + 0.5 * (r - 1.0 - std::log(r));
}

Interval n_eps_interval(const LimitLoss& m, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("n_eps_interval: eps must be >= 0");
  if (!(m.sigma_p > 0.0))
    throw std::invalid_argument("n_eps_interval: sigma_p must be positive");
  const double half = std::sqrt(2.0 * m.sigma_p * m.sigma_p * eps);
  return {m.dgp.theta0 - half, m.dgp.theta0 + half};
}

LossMinimiser empirical_loss_minimiser(const LossModel& m, const FamilyDescriptor& family) {
  if (family.kind == FamilyKind::Gaussian) {
    if (m.is_table())
      throw MixedTrackError(
          "empirical_loss_minimiser: a table loss has no Gaussian-family extension");
    const Dataset& d = m.data();
    if (d.empty())
      throw EmptyDataError("empirical_loss_minimiser: needs observations");
    const double mu = d.mean();
    return {GaussianMeasure(mu, 0.0), loss_at(m, mu)};
  }
  const Eigen::ArrayXd& grid = family.grid;
  Eigen::Index best = 0;
  double best_value = loss_at(m, grid[0]);
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    const double v = loss_at(m, grid[i]);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(grid.size());
  w[best] = 1.0;
  return {DiscreteMeasure(grid, std::move(w)), best_value};
}

}  // namespace gvi
