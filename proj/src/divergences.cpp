#include "gvi/divergences.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <vector>

namespace gvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LimitEstimate {
  bool finite = false;
  double value = 0.0;
  bool conclusive = false;
};

// Limit of h(u) as u -> 0+ along u = 2^-k. See f_div_upper_bound for the
// decision rules.
LimitEstimate estimate_zero_limit(const std::function<double(double)>& h) {
  constexpr int kBudget = 60;
  std::vector<double> vals;
  vals.reserve(kBudget);
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int k = 1; k <= kBudget; ++k) {
    const double u = std::ldexp(1.0, -k);
    const double v = h(u);
    if (!std::isfinite(v) || std::abs(v) > 1e12) return {false, kInf, true};
    if (k > 1 && std::abs(v - prev) < 1e-9) return {true, v, true};
    vals.push_back(v);
    prev = v;
  }
  // No plateau and no ceiling hit. Call it divergent when the increments in
  // the tail are all positive and are not decaying.
  const int tail = 20;
  double increment_sum = 0.0;
  bool all_positive = true;
  for (int i = kBudget - tail; i < kBudget; ++i) {
    const double d = vals[i - 1] - vals[i - 2];
    if (d <= 0.0) all_positive = false;
    increment_sum += d;
  }
  const double last = vals[kBudget - 2] - vals[kBudget - 3];
  const double avg = increment_sum / tail;
  if (all_positive && last >= 0.5 * avg && avg > 1e-9) return {false, kInf, true};
  return {vals.back() > 0 ? true : false, vals.back(), false};
}

// f(0+) and lim_{u->0+} u f(1/u): the two constants that govern how an
// f-divergence charges mass the other measure does not see.
struct GeneratorLimits {
  LimitEstimate f_zero;
  LimitEstimate c_inf;
};

GeneratorLimits generator_limits(const std::function<double(double)>& f) {
  GeneratorLimits gl;
  gl.f_zero = estimate_zero_limit(f);
  gl.c_inf = estimate_zero_limit([&f](double u) { return u * f(1.0 / u); });
  return gl;
}

double limit_or_inf(const LimitEstimate& e) {
  return (e.conclusive && e.finite) ? e.value : kInf;
}

// ---- Gaussian pair quadrature plumbing -------------------------------------

void push_if_inside(std::vector<double>& pts, double x, double lo, double hi) {
  if (x > lo && x < hi && std::isfinite(x)) pts.push_back(x);
}

// Points where two non-degenerate Gaussian densities cross (log densities are
// equal); a quadratic in x.
void crossing_points(const GaussianMeasure& a, const GaussianMeasure& b,
                     std::vector<double>& pts, double lo, double hi) {
  const double c2 = 0.5 / b.variance - 0.5 / a.variance;
  const double c1 = a.mean / a.variance - b.mean / b.variance;
  const double c0 = b.mean * b.mean / (2.0 * b.variance) -
                    a.mean * a.mean / (2.0 * a.variance) +
                    0.5 * std::log(b.variance / a.variance);
  if (std::abs(c2) < 1e-300) {
    if (std::abs(c1) > 1e-300) push_if_inside(pts, -c0 / c1, lo, hi);
    return;
  }
  const double disc = c1 * c1 - 4.0 * c2 * c0;
  if (disc < 0.0) return;
  const double root = std::sqrt(disc);
  push_if_inside(pts, (-c1 - root) / (2.0 * c2), lo, hi);
  push_if_inside(pts, (-c1 + root) / (2.0 * c2), lo, hi);
}

// Panel seeds for integrating any smooth functional of two non-degenerate
// Gaussian densities: window endpoints, shoulders of both bells, and their
// crossing points. With these in place narrow spikes cannot slip between
// initial panels.
std::vector<double> panel_points(const GaussianMeasure& a, const GaussianMeasure& b,
                                 double padding) {
  const double sa = a.sigma();
  const double sb = b.sigma();
  const double lo = std::min(a.mean - padding * sa, b.mean - padding * sb);
  const double hi = std::max(a.mean + padding * sa, b.mean + padding * sb);
  std::vector<double> pts{lo, hi};
  constexpr double offsets[] = {0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0};
  for (const auto& g : {a, b}) {
    const double s = g.sigma();
    for (double c : offsets) {
      push_if_inside(pts, g.mean + c * s, lo, hi);
      if (c > 0.0) push_if_inside(pts, g.mean - c * s, lo, hi);
    }
  }
  crossing_points(a, b, pts, lo, hi);
  std::sort(pts.begin(), pts.end());
  const double merge_eps = 1e-12 * (hi - lo);
  std::vector<double> out;
  out.reserve(pts.size());
  for (double x : pts)
    if (out.empty() || x - out.back() > merge_eps) out.push_back(x);
  if (out.size() < 2) out = {lo, hi};
  return out;
}

// Upper bound on the density overlap int min(q, p): each density's tail mass
// beyond the midpoint between the means. Valid for every variance pairing.
double overlap_upper_bound(const GaussianMeasure& a, const GaussianMeasure& b) {
  const double half = 0.5 * std::abs(a.mean - b.mean);
  if (half == 0.0) return 1.0;
  return normal_cdf(-half / a.sigma()) + normal_cdf(-half / b.sigma());
}

double density(const GaussianMeasure& g, double x) {
  return std::exp(gaussian_log_density(g, x));
}

double run_quadrature(const std::function<double(double)>& f,
                      const std::vector<double>& pts, const QuadratureSettings& qs,
                      const char* what) {
  const QuadratureOutcome out = integrate_adaptive(f, pts, qs.abs_tol);
  if (!out.finite)
    throw NonIntegrableError(std::string(what) + ": integrand is not finite");
  if (!out.converged)
    throw NonIntegrableError(std::string(what) +
                             ": quadrature failed to reach the requested tolerance");
  return out.value;
}

// ---- discrete pair plumbing ------------------------------------------------

// Union of the atoms of two grid measures; exact double comparison, because
// atoms are identities, not approximations.
struct AlignedAtoms {
  std::vector<double> theta;
  std::vector<double> wq, wp;
};

AlignedAtoms align_atoms(const DiscreteMeasure& q, const DiscreteMeasure& p) {
  AlignedAtoms out;
  Eigen::Index i = 0, j = 0;
  while (i < q.size() || j < p.size()) {
    if (j >= p.size() || (i < q.size() && q.grid[i] < p.grid[j])) {
      out.theta.push_back(q.grid[i]);
      out.wq.push_back(q.weights[i]);
      out.wp.push_back(0.0);
      ++i;
    } else if (i >= q.size() || p.grid[j] < q.grid[i]) {
      out.theta.push_back(p.grid[j]);
      out.wq.push_back(0.0);
      out.wp.push_back(p.weights[j]);
      ++j;
    } else {
      out.theta.push_back(q.grid[i]);
      out.wq.push_back(q.weights[i]);
      out.wp.push_back(p.weights[j]);
      ++i;
      ++j;
    }
  }
  return out;
}

// Weight an atomic measure assigns to a single point.
double atom_weight(const DiscreteMeasure& m, double x) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (m.grid[i] == x) return m.weights[i];
  return 0.0;
}

[[noreturn]] void throw_mixed(const char* what) {
  throw MixedTrackError(std::string(what) +
                        ": continuous vs. grid operands have no finite value here");
}

}  // namespace

// ---- bound probe -----------------------------------------------------------

FBound f_div_upper_bound(const std::function<double(double)>& f) {
  if (!f) throw std::invalid_argument("f_div_upper_bound: generator must be callable");
  const LimitEstimate e =
      estimate_zero_limit([&f](double u) { return f(u) + u * f(1.0 / u); });
  if (!e.conclusive)
    throw InconclusiveBoundError(
        "f_div_upper_bound: probe neither settled nor clearly diverged within "
        "its evaluation budget");
  return {e.finite, e.finite ? e.value : kInf};
}

// ---- DivergenceSpec --------------------------------------------------------

DivergenceSpec DivergenceSpec::kl() { return {DivergenceKind::Kl, std::nullopt, {}, 0.5, {}}; }

DivergenceSpec DivergenceSpec::tv() { return {DivergenceKind::Tv, 1.0, {}, 0.5, {}}; }

DivergenceSpec DivergenceSpec::hellinger_sq() {
  return {DivergenceKind::HellingerSq, 1.0, {}, 0.5, {}};
}

DivergenceSpec DivergenceSpec::le_cam() { return {DivergenceKind::LeCam, 2.0, {}, 0.5, {}}; }

DivergenceSpec DivergenceSpec::scaled_tv(double exponent) {
  if (!(exponent > 0.0) || !std::isfinite(exponent))
    throw std::invalid_argument("scaled_tv: exponent must be positive and finite");
  return {DivergenceKind::ScaledTv, std::nullopt, {}, exponent, {}};
}

DivergenceSpec DivergenceSpec::generic_f(std::function<double(double)> f) {
  if (!f) throw std::invalid_argument("generic_f: generator must be callable");
  if (std::abs(f(1.0)) > 1e-12)
    throw std::invalid_argument("generic_f: generator must satisfy f(1) = 0");
  DivergenceSpec spec{DivergenceKind::GenericF, std::nullopt, {}, 0.5, std::move(f)};
  const FBound b = f_div_upper_bound(spec.generator);
  if (b.finite) spec.bound = b.value;
  return spec;
}

double DivergenceSpec::scale(std::int64_t n) const {
  if (n < 1) throw std::invalid_argument("DivergenceSpec::scale: n must be >= 1");
  return kind == DivergenceKind::ScaledTv ? std::pow(static_cast<double>(n), scale_exponent)
                                          : 1.0;
}

std::optional<double> DivergenceSpec::bound_at(std::int64_t n) const {
  if (kind == DivergenceKind::ScaledTv) return scale(n) * 1.0;
  return bound;
}

bool DivergenceSpec::tolerates_point_mass() const {
  switch (kind) {
    case DivergenceKind::Kl:
      return false;
    case DivergenceKind::Tv:
    case DivergenceKind::HellingerSq:
    case DivergenceKind::LeCam:
    case DivergenceKind::ScaledTv:
      return true;
    case DivergenceKind::GenericF:
      return bound.has_value();
  }
  return false;
}

std::string divergence_name(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::Kl: return "kl";
    case DivergenceKind::Tv: return "tv";
    case DivergenceKind::HellingerSq: return "hellinger";
    case DivergenceKind::LeCam: return "lecam";
    case DivergenceKind::ScaledTv: return "tv-sqrt-n";
    case DivergenceKind::GenericF: return "generic-f";
  }
  return "unknown";
}

DivergenceKind divergence_from_name(const std::string& name) {
  if (name == "kl") return DivergenceKind::Kl;
  if (name == "tv") return DivergenceKind::Tv;
  if (name == "hellinger") return DivergenceKind::HellingerSq;
  if (name == "lecam") return DivergenceKind::LeCam;
  if (name == "tv-sqrt-n") return DivergenceKind::ScaledTv;
  throw std::invalid_argument("unknown divergence name: " + name);
}

// ---- KL --------------------------------------------------------------------

double kl_gaussian(const GaussianMeasure& q, const GaussianMeasure& p) {
  if (q.is_dirac() && p.is_dirac()) {
    if (q.mean == p.mean) return 0.0;
    throw DegenerateInputError("kl_gaussian: KL between distinct point masses is infinite");
  }
  if (q.is_dirac() || p.is_dirac())
    throw DegenerateInputError(
        "kl_gaussian: KL between a point mass and a non-atomic measure is infinite");
  const double d = q.mean - p.mean;
  return 0.5 * std::log(p.variance / q.variance) +
         (q.variance + d * d) / (2.0 * p.variance) - 0.5;
}

double kl_discrete(const DiscreteMeasure& q, const DiscreteMeasure& p) {
  const AlignedAtoms a = align_atoms(q, p);
  double total = 0.0;
  for (std::size_t i = 0; i < a.theta.size(); ++i) {
    if (a.wq[i] <= 0.0) continue;
    if (a.wp[i] <= 0.0)
      throw DegenerateInputError(
          "kl_discrete: first argument puts mass outside the second's support");
    total += a.wq[i] * std::log(a.wq[i] / a.wp[i]);
  }
  return std::max(0.0, total);
}

// ---- total variation -------------------------------------------------------

namespace {

// P(lo < X < hi) for X ~ N(m, s^2), staying accurate when the interval sits in
// a far tail by switching to the survival form there.
double interval_prob(double m, double s, double lo, double hi) {
  const double zl = (lo - m) / s;
  const double zh = (hi - m) / s;
  if (zl + zh > 0.0) return normal_cdf(-zl) - normal_cdf(-zh);
  return normal_cdf(zh) - normal_cdf(zl);
}

double tv_gaussian(const GaussianMeasure& a, const GaussianMeasure& b,
                   const QuadratureSettings&) {
  if (a.is_dirac() && b.is_dirac()) return a.mean == b.mean ? 0.0 : 1.0;
  if (a.is_dirac() || b.is_dirac()) return 1.0;
  if (a.mean == b.mean && a.variance == b.variance) return 0.0;
  if (a.variance == b.variance)
    return 2.0 * normal_cdf(std::abs(a.mean - b.mean) / (2.0 * a.sigma())) - 1.0;
  // Exact evaluation off the density crossings: with unequal variances the
  // log-density difference c2 x^2 + c1 x + c0 is a genuine parabola, the
  // narrower density exceeds the wider one exactly between its two roots, and
  // the total variation is the probability gap of that interval.
  const GaussianMeasure& narrow = a.variance < b.variance ? a : b;
  const GaussianMeasure& wide = a.variance < b.variance ? b : a;
  const double c2 = 0.5 / wide.variance - 0.5 / narrow.variance;  // < 0
  const double c1 = narrow.mean / narrow.variance - wide.mean / wide.variance;
  const double c0 = wide.mean * wide.mean / (2.0 * wide.variance) -
                    narrow.mean * narrow.mean / (2.0 * narrow.variance) +
                    0.5 * std::log(wide.variance / narrow.variance);
  const double disc = c1 * c1 - 4.0 * c2 * c0;
  if (!(disc > 0.0)) return 0.0;  // densities coincide to machine precision
  // Stable quadratic roots: the textbook (-c1 +/- sqrt) / (2 c2) form loses
  // the near root to cancellation when the variances almost agree (c2 -> 0),
  // which is exactly where every solver start sits. q never cancels, the far
  // root may overflow to +/-inf and the interval probabilities absorb that.
  const double root = std::sqrt(disc);
  const double q = -0.5 * (c1 + std::copysign(root, c1 == 0.0 ? 1.0 : c1));
  const double r1 = q / c2;
  const double r2 = c0 / q;
  const double lo = std::min(r1, r2);
  const double hi = std::max(r1, r2);
  const double v = interval_prob(narrow.mean, narrow.sigma(), lo, hi) -
                   interval_prob(wide.mean, wide.sigma(), lo, hi);
  return std::clamp(v, 0.0, 1.0);
}

double tv_mixed(const GaussianMeasure& g, const DiscreteMeasure& d) {
  // A non-degenerate Gaussian and a grid measure are mutually singular; a
  // point mass overlaps the grid only through the atom it sits on.
  if (!g.is_dirac()) return 1.0;
  return 1.0 - atom_weight(d, g.mean);
}

}  // namespace

double tv(const Measure& q, const Measure& p, const QuadratureSettings& qs) {
  if (const auto* gq = std::get_if<GaussianMeasure>(&q)) {
    if (const auto* gp = std::get_if<GaussianMeasure>(&p)) return tv_gaussian(*gq, *gp, qs);
    return tv_mixed(*gq, std::get<DiscreteMeasure>(p));
  }
  const auto& dq = std::get<DiscreteMeasure>(q);
  if (const auto* gp = std::get_if<GaussianMeasure>(&p)) return tv_mixed(*gp, dq);
  const AlignedAtoms a = align_atoms(dq, std::get<DiscreteMeasure>(p));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.theta.size(); ++i) sum += std::abs(a.wq[i] - a.wp[i]);
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

// ---- squared Hellinger -----------------------------------------------------

double hellinger_sq(const Measure& q, const Measure& p, const QuadratureSettings&) {
  if (const auto* gq = std::get_if<GaussianMeasure>(&q)) {
    if (const auto* gp = std::get_if<GaussianMeasure>(&p)) {
      const auto& a = *gq;
      const auto& b = *gp;
      if (a.is_dirac() && b.is_dirac()) return a.mean == b.mean ? 0.0 : 1.0;
      if (a.is_dirac() || b.is_dirac()) return 1.0;
      const double vsum = a.variance + b.variance;
      const double d = a.mean - b.mean;
      const double bc = std::sqrt(2.0 * std::sqrt(a.variance * b.variance) / vsum) *
                        std::exp(-d * d / (4.0 * vsum));
      return std::clamp(1.0 - bc, 0.0, 1.0);
    }
    // Bhattacharyya affinity across the continuous/grid boundary comes only
    // from shared atoms.
    const auto& d = std::get<DiscreteMeasure>(p);
    if (!gq->is_dirac()) return 1.0;
    return std::clamp(1.0 - std::sqrt(atom_weight(d, gq->mean)), 0.0, 1.0);
  }
  const auto& dq = std::get<DiscreteMeasure>(q);
  if (const auto* gp = std::get_if<GaussianMeasure>(&p)) {
    if (!gp->is_dirac()) return 1.0;
    return std::clamp(1.0 - std::sqrt(atom_weight(dq, gp->mean)), 0.0, 1.0);
  }
  const AlignedAtoms a = align_atoms(dq, std::get<DiscreteMeasure>(p));
  double bc = 0.0;
  for (std::size_t i = 0; i < a.theta.size(); ++i) bc += std::sqrt(a.wq[i] * a.wp[i]);
  return std::clamp(1.0 - bc, 0.0, 1.0);
}

// ---- Le Cam ----------------------------------------------------------------

double le_cam(const Measure& q, const Measure& p, const QuadratureSettings& qs) {
  if (const auto* gq = std::get_if<GaussianMeasure>(&q)) {
    if (const auto* gp = std::get_if<GaussianMeasure>(&p)) {
      const auto& a = *gq;
      const auto& b = *gp;
      if (a.is_dirac() && b.is_dirac()) return a.mean == b.mean ? 0.0 : 2.0;
      if (a.is_dirac() || b.is_dirac()) return 2.0;
      if (a.mean == b.mean && a.variance == b.variance) return 0.0;
      // (q-p)^2/(q+p) = (q+p) - 4qp/(q+p) and qp/(q+p) is within a factor two
      // of min(q,p), so far-apart pairs sit within 4*overlap of the bound.
      const double ovl = overlap_upper_bound(a, b);
      if (4.0 * ovl < qs.abs_tol) return 2.0 - 2.0 * ovl;
      const auto integrand = [&a, &b](double x) {
        const double qa = density(a, x);
        const double qb = density(b, x);
        const double s = qa + qb;
        if (s <= 0.0) return 0.0;
        const double d = qa - qb;
        return d * d / s;
      };
      const double v =
          run_quadrature(integrand, panel_points(a, b, qs.support_padding), qs, "le_cam");
      return std::clamp(v, 0.0, 2.0);
    }
    if (gq->is_dirac()) {
      const double w = atom_weight(std::get<DiscreteMeasure>(p), gq->mean);
      return 2.0 * (1.0 - w) / (1.0 + w);
    }
    throw_mixed("le_cam");
  }
  const auto& dq = std::get<DiscreteMeasure>(q);
  if (const auto* gp = std::get_if<GaussianMeasure>(&p)) {
    if (gp->is_dirac()) {
      const double w = atom_weight(dq, gp->mean);
      return 2.0 * (1.0 - w) / (1.0 + w);
    }
    throw_mixed("le_cam");
  }
  const AlignedAtoms a = align_atoms(dq, std::get<DiscreteMeasure>(p));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.theta.size(); ++i) {
    const double s = a.wq[i] + a.wp[i];
    if (s <= 0.0) continue;
    const double d = a.wq[i] - a.wp[i];
    sum += d * d / s;
  }
  return std::clamp(sum, 0.0, 2.0);
}

// ---- generic f-divergence --------------------------------------------------

namespace {

double dirac_vs_diffuse_f(const GeneratorLimits& gl, const char* what) {
  const double f0 = limit_or_inf(gl.f_zero);
  const double ci = limit_or_inf(gl.c_inf);
  if (!std::isfinite(f0) || !std::isfinite(ci))
    throw DegenerateInputError(
        std::string(what) +
        ": infinite for a point mass against a non-atomic measure");
  return f0 + ci;
}

double generic_f_atoms(const std::function<double(double)>& f,
                       const GeneratorLimits& gl, const std::vector<double>& wq,
                       const std::vector<double>& wp, const char* what) {
  double total = 0.0;
  for (std::size_t i = 0; i < wq.size(); ++i) {
    if (wq[i] > 0.0) {
      if (wp[i] <= 0.0) {
        const double f0 = limit_or_inf(gl.f_zero);
        if (!std::isfinite(f0))
          throw DegenerateInputError(
              std::string(what) + ": first argument puts mass where the second has none");
        total += wq[i] * f0;
      } else {
        total += wq[i] * f(wp[i] / wq[i]);
      }
    } else if (wp[i] > 0.0) {
      const double ci = limit_or_inf(gl.c_inf);
      if (!std::isfinite(ci))
        throw DegenerateInputError(
            std::string(what) + ": second argument puts mass where the first has none");
      total += wp[i] * ci;
    }
  }
  return total;
}

}  // namespace

double f_divergence(const std::function<double(double)>& f, const Measure& q,
                    const Measure& p, const QuadratureSettings& qs) {
  if (!f) throw std::invalid_argument("f_divergence: generator must be callable");
  if (std::abs(f(1.0)) > 1e-12)
    throw std::invalid_argument("f_divergence: generator must satisfy f(1) = 0");
  const GeneratorLimits gl = generator_limits(f);

  if (const auto* gq = std::get_if<GaussianMeasure>(&q)) {
    if (const auto* gp = std::get_if<GaussianMeasure>(&p)) {
      const auto& a = *gq;
      const auto& b = *gp;
      if (a.is_dirac() && b.is_dirac())
        return a.mean == b.mean ? 0.0 : dirac_vs_diffuse_f(gl, "f_divergence");
      if (a.is_dirac() || b.is_dirac()) return dirac_vs_diffuse_f(gl, "f_divergence");
      const double c_inf = limit_or_inf(gl.c_inf);
      const auto integrand = [&](double x) {
        const double lq = gaussian_log_density(a, x);
        const double lp = gaussian_log_density(b, x);
        const double qv = std::exp(lq);
        const double pv = std::exp(lp);
        if (qv <= 0.0 && pv <= 0.0) return 0.0;
        if (qv <= 0.0) return pv * c_inf;  // +inf here surfaces as non-integrable
        // Underflowed or overflowed ratios are floored/capped at the double
        // range; for any generator of at most logarithmic growth the error
        // committed is below every tolerance in use.
        const double t = pv <= 0.0 ? DBL_MIN : std::clamp(pv / qv, DBL_MIN, DBL_MAX);
        return qv * f(t);
      };
      return run_quadrature(integrand, panel_points(a, b, qs.support_padding), qs,
                            "f_divergence");
    }
    if (gq->is_dirac()) {
      const auto& d = std::get<DiscreteMeasure>(p);
      // Atoms of the pair: the point mass and every grid atom.
      std::vector<double> wq, wp;
      bool matched = false;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        const bool at = d.grid[i] == gq->mean;
        wq.push_back(at ? 1.0 : 0.0);
        wp.push_back(d.weights[i]);
        matched = matched || at;
      }
      if (!matched) {
        wq.push_back(1.0);
        wp.push_back(0.0);
      }
      return generic_f_atoms(f, gl, wq, wp, "f_divergence");
    }
    throw_mixed("f_divergence");
  }
  const auto& dq = std::get<DiscreteMeasure>(q);
  if (const auto* gp = std::get_if<GaussianMeasure>(&p)) {
    if (gp->is_dirac()) {
      std::vector<double> wq, wp;
      bool matched = false;
      for (Eigen::Index i = 0; i < dq.size(); ++i) {
        const bool at = dq.grid[i] == gp->mean;
        wq.push_back(dq.weights[i]);
        wp.push_back(at ? 1.0 : 0.0);
        matched = matched || at;
      }
      if (!matched) {
        wq.push_back(0.0);
        wp.push_back(1.0);
      }
      return generic_f_atoms(f, gl, wq, wp, "f_divergence");
    }
    throw_mixed("f_divergence");
  }
  const AlignedAtoms a = align_atoms(dq, std::get<DiscreteMeasure>(p));
  return generic_f_atoms(f, gl, a.wq, a.wp, "f_divergence");
}

// ---- dispatcher ------------------------------------------------------------

double evaluate(const DivergenceSpec& spec, const Measure& q, const Measure& p,
                std::int64_t n) {
  if (n < 1) throw std::invalid_argument("evaluate: n must be >= 1");
  switch (spec.kind) {
    case DivergenceKind::Kl: {
      if (const auto* gq = std::get_if<GaussianMeasure>(&q)) {
        if (const auto* gp = std::get_if<GaussianMeasure>(&p))
          return kl_gaussian(*gq, *gp);
        throw DegenerateInputError(
            "evaluate: KL across the continuous/grid boundary is infinite");
      }
      if (const auto* dp = std::get_if<DiscreteMeasure>(&p))
        return kl_discrete(std::get<DiscreteMeasure>(q), *dp);
      throw DegenerateInputError(
          "evaluate: KL across the continuous/grid boundary is infinite");
    }
    case DivergenceKind::Tv:
      return tv(q, p, spec.quadrature);
    case DivergenceKind::HellingerSq:
      return hellinger_sq(q, p, spec.quadrature);
    case DivergenceKind::LeCam:
      return le_cam(q, p, spec.quadrature);
    case DivergenceKind::ScaledTv:
      return spec.scale(n) * tv(q, p, spec.quadrature);
    case DivergenceKind::GenericF:
      if (!spec.generator)
        throw std::invalid_argument("evaluate: GenericF spec lacks a generator");
      return f_divergence(spec.generator, q, p, spec.quadrature);
  }
  throw std::logic_error("evaluate: unknown divergence kind");
}

// ---- weight-vector kernels -------------------------------------------------

double weights_kl(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v) {
  if (w.size() != v.size())
    throw GridMismatchError("weights_kl: weight vectors differ in length");
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    if (v[i] <= 0.0)
      throw DegenerateInputError("weights_kl: mass outside the reference support");
    total += w[i] * std::log(w[i] / v[i]);
  }
  return total;
}

double weights_tv(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v) {
  if (w.size() != v.size())
    throw GridMismatchError("weights_tv: weight vectors differ in length");
  return 0.5 * (w - v).abs().sum();
}

double weights_hellinger_sq(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v) {
  if (w.size() != v.size())
    throw GridMismatchError("weights_hellinger_sq: weight vectors differ in length");
  // 1 - sum sqrt(w v) on the simplex; written so it stays meaningful for the
  // slightly off-simplex vectors finite differences produce.
  return 0.5 * (w.sum() + v.sum()) - (w * v).sqrt().sum();
}

double weights_le_cam(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v) {
  if (w.size() != v.size())
    throw GridMismatchError("weights_le_cam: weight vectors differ in length");
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double s = w[i] + v[i];
    if (s <= 0.0) continue;
    const double d = w[i] - v[i];
    total += d * d / s;
  }
  return total;
}

double weights_divergence(const DivergenceSpec& spec, const Eigen::ArrayXd& w,
                          const Eigen::ArrayXd& v, std::int64_t n) {
  switch (spec.kind) {
    case DivergenceKind::Kl:
      return weights_kl(w, v);
    case DivergenceKind::Tv:
      return weights_tv(w, v);
    case DivergenceKind::HellingerSq:
      return weights_hellinger_sq(w, v);
    case DivergenceKind::LeCam:
      return weights_le_cam(w, v);
    case DivergenceKind::ScaledTv:
      return spec.scale(n) * weights_tv(w, v);
    case DivergenceKind::GenericF: {
      if (!spec.generator)
        throw std::invalid_argument("weights_divergence: GenericF spec lacks a generator");
      const GeneratorLimits gl = generator_limits(spec.generator);
      std::vector<double> wq(w.data(), w.data() + w.size());
      std::vector<double> wp(v.data(), v.data() + v.size());
      return generic_f_atoms(spec.generator, gl, wq, wp, "weights_divergence");
    }
  }
  throw std::logic_error("weights_divergence: unknown divergence kind");
}

}  // namespace gvi
