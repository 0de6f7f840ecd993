#include "hemet/quadrature.hpp"

#include <cmath>

namespace hemet {

namespace {

template <class T, class F>
T simpson_impl(const F& f, double a, double b, std::size_t n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / static_cast<double>(n);
  T odd{};
  T even{};
  for (std::size_t i = 1; i < n; i += 2) odd += f(a + h * static_cast<double>(i));
  for (std::size_t i = 2; i < n; i += 2) even += f(a + h * static_cast<double>(i));
  return (f(a) + f(b) + 4.0 * odd + 2.0 * even) * (h / 3.0);
}

}  // namespace

double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  return simpson_impl<double>(f, a, b, n);
}

std::complex<double> simpson_c(const std::function<std::complex<double>(double)>& f, double a,
                               double b, std::size_t n) {
  return simpson_impl<std::complex<double>>(f, a, b, n);
}

double integrate_to_tol(const std::function<double(double)>& f, double a, double b,
                        const QuadratureConfig& cfg, int max_refines) {
  cfg.validate();
  std::size_t n = cfg.panels_for(b - a);
  double prev = simpson(f, a, b, n);
  for (int pass = 0; pass < max_refines; ++pass) {
    n *= static_cast<std::size_t>(cfg.refinement_factor);
    const double cur = simpson(f, a, b, n);
    if (std::abs(cur - prev) <= cfg.rel_tol * (1.0 + std::abs(cur))) return cur;
    prev = cur;
  }
  throw Error(errc::quadrature_not_converged, "integrate_to_tol: no convergence after refinement");
}

}  // namespace hemet
