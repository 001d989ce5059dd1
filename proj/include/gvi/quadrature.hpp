#pragma once

#include <functional>
#include <vector>

namespace gvi {

struct QuadratureSettings {
  double abs_tol = 1e-10;
  // How many standard deviations beyond each mean the integration window
  // extends for Gaussian integrands.
  double support_padding = 10.0;
};

struct QuadratureOutcome {
  double value = 0.0;
  bool converged = false;
  // Integrand returned a non-finite value somewhere.
  bool finite = true;
  long evaluations = 0;
};

// Adaptive Simpson integration over [breakpoints.front(), breakpoints.back()],
// seeded with one panel per consecutive breakpoint pair. Callers are expected
// to place breakpoints at every feature they know about (means, shoulders,
// density crossings); the adaptive refinement then only has to mop up.
QuadratureOutcome integrate_adaptive(const std::function<double(double)>& f,
                                     const std::vector<double>& breakpoints,
                                     double abs_tol, int max_depth = 48);

}  // namespace gvi
