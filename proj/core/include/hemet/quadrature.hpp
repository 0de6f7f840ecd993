#pragma once

#include <complex>
#include <cstddef>
#include <functional>

#include "hemet/errors.hpp"

namespace hemet {

/// Controls the composite Simpson rules used for kernel inversion and the
/// x-space integration paths.
struct QuadratureConfig {
  int nodes_per_unit = 2048;   // panels per unit of integration range
  int refinement_factor = 2;   // node multiplier between convergence passes
  double rel_tol = 1e-8;

  void validate() const {
    if (nodes_per_unit < 2) throw Error(errc::invalid_argument, "nodes_per_unit must be >= 2");
    if (refinement_factor < 2) throw Error(errc::invalid_argument, "refinement_factor must be >= 2");
    if (!(rel_tol > 0.0) || rel_tol > 1e-3)
      throw Error(errc::invalid_argument, "rel_tol must lie in (0, 1e-3]");
  }

  std::size_t panels_for(double range_len) const {
    auto p = static_cast<std::size_t>(nodes_per_unit * range_len);
    if (p < 16) p = 16;
    return p + (p % 2);  // Simpson needs an even panel count
  }
};

/// Composite Simpson over [a, b] with n panels (n even).
double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n);
std::complex<double> simpson_c(const std::function<std::complex<double>(double)>& f, double a,
                               double b, std::size_t n);

/// Simpson with node-doubling until successive passes agree to rel_tol.
/// Throws quadrature_not_converged after max_refines refinements.
double integrate_to_tol(const std::function<double(double)>& f, double a, double b,
                        const QuadratureConfig& cfg, int max_refines = 4);

}  // namespace hemet
