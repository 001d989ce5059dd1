#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "gvi/measures.hpp"
#include "gvi/quadrature.hpp"

namespace gvi {

enum class DivergenceKind { Kl, Tv, HellingerSq, LeCam, ScaledTv, GenericF };

// Result of the numerical probe for sup_{Q,P} D_f(Q:P), obtained as the
// u -> 0+ limit of f(u) + u f(1/u). finite == false means the probe showed
// clear divergence (the supremum is +infinity).
struct FBound {
  bool finite = false;
  double value = 0.0;
};

// Probes the limit above on the dyadic sequence u = 2^-k, k = 1..60. Settles
// on a value once successive evaluations differ by < 1e-9; declares +infinity
// when an evaluation exceeds 1e12 or when the increments through the tail of
// the budget stay positive without decaying (a generator like -log u grows
// without bound but far too slowly to hit any fixed ceiling by k = 60).
// Anything else throws InconclusiveBoundError.
FBound f_div_upper_bound(const std::function<double(double)>& f);

// A divergence together with everything needed to use it inside an objective:
// its finite bound (if any), quadrature controls, and the sample-size scaling
// c(n) for the rescaled total-variation family.
struct DivergenceSpec {
  DivergenceKind kind = DivergenceKind::Tv;
  // sup over measure pairs; present exactly for the uniformly bounded kinds.
  std::optional<double> bound;
  QuadratureSettings quadrature{};
  // ScaledTv multiplies total variation by c(n) = n^scale_exponent.
  double scale_exponent = 0.5;
  // GenericF only: convex generator with f(1) = 0.
  std::function<double(double)> generator;

  static DivergenceSpec kl();
  static DivergenceSpec tv();
  static DivergenceSpec hellinger_sq();
  static DivergenceSpec le_cam();
  static DivergenceSpec scaled_tv(double exponent = 0.5);
  // Probes the generator's bound; the spec ends up bounded iff the probe does.
  static DivergenceSpec generic_f(std::function<double(double)> f);

  double scale(std::int64_t n) const;
  // Finite bound at sample size n (c(n) * 1 for ScaledTv), or nullopt when
  // the divergence is unbounded.
  std::optional<double> bound_at(std::int64_t n) const;
  // Whether a point mass compared against a non-atomic measure yields a
  // finite value under this divergence.
  bool tolerates_point_mass() const;
};

// Canonical names used by configs and the CLI.
std::string divergence_name(DivergenceKind kind);
DivergenceKind divergence_from_name(const std::string& name);

// Closed-form KL between Gaussians. Point masses: KL(d_x : d_x) = 0; any
// other pairing involving a point mass is infinite and throws
// DegenerateInputError.
double kl_gaussian(const GaussianMeasure& q, const GaussianMeasure& p);

// KL between finitely supported measures, computed over the union of their
// atoms. Mass of q outside p's support makes it infinite (thrown).
double kl_discrete(const DiscreteMeasure& q, const DiscreteMeasure& p);

// Total variation sup_A |Q(A) - P(A)|. Equal-variance Gaussian pairs use the
// closed form 2 Phi(|dmu| / (2 sigma)) - 1; other non-degenerate pairs are
// integrated as (1/2) int |q - p|. Continuous-vs-grid pairs are mutually
// singular (value 1) except for a point mass sitting on an atom.
double tv(const Measure& q, const Measure& p, const QuadratureSettings& qs = {});

// Squared Hellinger distance normalised to [0, 1]: (1/2) int (sqrt q - sqrt p)^2,
// i.e. 1 - int sqrt(q p). At this normalisation its bound is 1 and it never
// exceeds total variation.
double hellinger_sq(const Measure& q, const Measure& p,
                    const QuadratureSettings& qs = {});

// Le Cam divergence, generator (u-1)^2 / (u+1), integrated in the symmetric
// form int (q-p)^2 / (q+p). Bounded by 2, attained by mutually singular pairs.
double le_cam(const Measure& q, const Measure& p, const QuadratureSettings& qs = {});

// E_Q[f(dP/dQ)] for a convex generator with f(1) = 0. Handles singular parts
// through the limits f(0+) and lim u f(1/u); density ratios are clamped to
// the representable double range, so generators that explode faster than the
// clamp can absorb surface as NonIntegrableError rather than a wrong number.
double f_divergence(const std::function<double(double)>& f, const Measure& q,
                    const Measure& p, const QuadratureSettings& qs = {});

// Dispatch on kind; applies c(n) scaling for ScaledTv. n >= 1 required.
double evaluate(const DivergenceSpec& spec, const Measure& q, const Measure& p,
                std::int64_t n);

// Raw kernels on weight vectors over one common grid. They extend off the
// probability simplex in the natural algebraic way, which is exactly what the
// finite-difference machinery inside the simplex solver needs. The dispatcher
// applies c(n) scaling like evaluate().
double weights_kl(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v);
double weights_tv(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v);
double weights_hellinger_sq(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v);
double weights_le_cam(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v);
double weights_divergence(const DivergenceSpec& spec, const Eigen::ArrayXd& w,
                          const Eigen::ArrayXd& v, std::int64_t n);

}  // namespace gvi
