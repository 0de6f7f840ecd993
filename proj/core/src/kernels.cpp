#include "hemet/kernels.hpp"

#include <cmath>

namespace hemet {

namespace {

constexpr double kFlatEdge = 0.05;

// Exponent q(s) = exp(-(s - 0.05)^-2) / (s - 1)^2 on the transition band,
// with first and second derivatives. Outside representable magnitudes the
// kernel is exactly flat (1) or exactly zero in double precision; the
// cutoffs below are chosen where q or its leading factor underflows.
struct Band {
  double q, q1, q2;
};

Band band_exponent(double s) {
  const double u = s - kFlatEdge;   // > 0
  const double v = s - 1.0;         // < 0
  const double e = std::exp(-1.0 / (u * u));
  const double inv_v2 = 1.0 / (v * v);
  const double q = e * inv_v2;
  // d/ds e = e * 2 u^-3 ; d/ds v^-2 = -2 v^-3
  const double du = 2.0 / (u * u * u);
  const double q1 = q * (du - 2.0 / v);
  // q'' = q * [(du - 2/v)^2 + du' + 2/v^2], du' = -6 u^-4
  const double q2 = q * ((du - 2.0 / v) * (du - 2.0 / v) - 6.0 / (u * u * u * u) + 2.0 * inv_v2);
  return {q, q1, q2};
}

bool in_flat(double s) { return s <= kFlatEdge + 0.04; }  // exp(-1/u^2) < 1e-269 for u <= 0.04

}  // namespace

double flat_top_kft(double t) {
  const double s = std::abs(t);
  if (s >= 1.0) return 0.0;
  if (in_flat(s)) return 1.0;
  const auto b = band_exponent(s);
  return b.q > 745.0 ? 0.0 : std::exp(-b.q);
}

double flat_top_kft_d1(double t) {
  const double s = std::abs(t);
  if (s >= 1.0 || in_flat(s)) return 0.0;
  const auto b = band_exponent(s);
  if (b.q > 700.0) return 0.0;
  const double d = -b.q1 * std::exp(-b.q);
  return t < 0 ? -d : d;
}

double flat_top_kft_d2(double t) {
  const double s = std::abs(t);
  if (s >= 1.0 || in_flat(s)) return 0.0;
  const auto b = band_exponent(s);
  if (b.q > 700.0) return 0.0;
  return (b.q1 * b.q1 - b.q2) * std::exp(-b.q);
}

KernelSpec flat_top_kernel() {
  return KernelSpec{flat_top_kft, flat_top_kft_d1, flat_top_kft_d2, 1.0};
}

double decon_kernel(double x, Bandwidth b, const ErrorCF& fe, const KernelSpec& k,
                    const QuadratureConfig& cfg) {
  cfg.validate();
  const double c0 = k.support_halfwidth;
  const auto integrand = [&](double t) -> std::complex<double> {
    const double denom = fe(t / b.value);
    if (!(std::abs(denom) > 0.0))
      throw Error(errc::degenerate_cf, "decon_kernel: error CF vanishes inside support");
    return std::polar(1.0, -t * x) * (k.ft(t) / denom);
  };
  std::size_t n = cfg.panels_for(2.0 * c0);
  std::complex<double> prev = simpson_c(integrand, -c0, c0, n);
  std::complex<double> cur = prev;
  bool converged = false;
  for (int pass = 0; pass < 4; ++pass) {
    n *= static_cast<std::size_t>(cfg.refinement_factor);
    cur = simpson_c(integrand, -c0, c0, n);
    if (std::abs(cur - prev) <= cfg.rel_tol * (1.0 + std::abs(cur))) {
      converged = true;
      break;
    }
    prev = cur;
  }
  if (!converged)
    throw Error(errc::quadrature_not_converged, "decon_kernel: refinement did not converge");
  const double scale = 1.0 / (2.0 * 3.14159265358979323846 * b.value);
  const std::complex<double> val = cur * scale;
  if (std::abs(val.imag()) > cfg.rel_tol * (1.0 + std::abs(val)))
    throw Error(errc::quadrature_not_converged,
                "decon_kernel: imaginary residue exceeds tolerance");
  return val.real();
}

std::complex<double> fourier_weight(double xi, double w, Bandwidth b, const ErrorCF& fe,
                                    const KernelSpec& k) {
  const double denom = fe(xi);
  if (!(std::abs(denom) >= (fe.is_estimated() ? fe.floor_rho() : 1e-12)))
    throw Error(errc::degenerate_cf, "fourier_weight: error CF below floor at xi");
  return std::polar(1.0, w * xi) * (k.ft(b.value * xi) / denom);
}

namespace detail {

std::complex<double> moment_a0(double xi, Bandwidth b, const ErrorCF& fe, const KernelSpec& k) {
  const double denom = fe(xi);
  if (!(std::abs(denom) >= (fe.is_estimated() ? fe.floor_rho() : 1e-12)))
    throw Error(errc::degenerate_cf, "moment_a0: error CF below floor at xi");
  return {k.ft(b.value * xi) / denom, 0.0};
}

// a_0(xi) = A(xi)/B(xi) with A = ft(b xi), B = fe(xi);
// a_1 = -i a_0', a_2 = -a_0''.
std::complex<double> moment_a1(double xi, Bandwidth b, const ErrorCF& fe, const KernelSpec& k) {
  const double A = k.ft(b.value * xi);
  const double A1 = b.value * k.ft_d1(b.value * xi);
  const double B = fe(xi);
  const double B1 = fe.d1(xi);
  const double d = (A1 * B - A * B1) / (B * B);
  return {0.0, -d};
}

std::complex<double> moment_a2(double xi, Bandwidth b, const ErrorCF& fe, const KernelSpec& k) {
  const double A = k.ft(b.value * xi);
  const double A1 = b.value * k.ft_d1(b.value * xi);
  const double A2 = b.value * b.value * k.ft_d2(b.value * xi);
  const double B = fe(xi);
  const double B1 = fe.d1(xi);
  const double B2 = fe.d2(xi);
  const double dd =
      A2 / B - 2.0 * A1 * B1 / (B * B) + A * (2.0 * B1 * B1 - B2 * B) / (B * B * B);
  return {-dd, 0.0};
}

}  // namespace detail

std::complex<double> fourier_moment(int m, double xi, double w, Bandwidth b, const ErrorCF& fe,
                                    const KernelSpec& k) {
  if (m < 0 || m > 2)
    throw Error(errc::unsupported_order, "fourier_moment: order must be 0, 1 or 2");
  const std::complex<double> phase = std::polar(1.0, w * xi);
  const std::complex<double> a0 = detail::moment_a0(xi, b, fe, k);
  if (m == 0) return phase * a0;
  const std::complex<double> a1 = detail::moment_a1(xi, b, fe, k);
  if (m == 1) return phase * (w * a0 + a1);
  const std::complex<double> a2 = detail::moment_a2(xi, b, fe, k);
  return phase * (w * w * a0 + 2.0 * w * a1 + a2);
}

}  // namespace hemet
