#pragma once

#include <complex>
#include <functional>

#include "hemet/error_cf.hpp"
#include "hemet/quadrature.hpp"

namespace hemet {

/// Smoothing bandwidth, in the units of the observed covariate.
struct Bandwidth {
  double value;
  explicit Bandwidth(double v) : value(v) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(errc::invalid_argument, "Bandwidth must be positive and finite");
  }
};

/// Smoothing kernel described through its Fourier transform. ft is even,
/// equals 1 at the origin, and vanishes outside [-support_halfwidth,
/// support_halfwidth]; ft_d1/ft_d2 are its analytic derivatives.
struct KernelSpec {
  std::function<double(double)> ft;
  std::function<double(double)> ft_d1;
  std::function<double(double)> ft_d2;
  double support_halfwidth = 1.0;
};

/// Infinite-order flat-top transform: identically 1 on |t| <= 0.05, then
/// exp{-exp(-(|t|-0.05)^-2) / (|t|-1)^2}, and 0 for |t| >= 1.
double flat_top_kft(double t);
double flat_top_kft_d1(double t);
double flat_top_kft_d2(double t);

/// The flat-top kernel bundled with its derivatives and support.
KernelSpec flat_top_kernel();

/// Deconvolution kernel value at a point:
///   (1 / 2 pi b) * integral of exp(-i t x) ft(t) / fe(t / b) dt
/// over the kernel support, by composite Simpson with node doubling. The
/// exact integral is real; the numerical imaginary residue is checked
/// against cfg.rel_tol and discarded.
double decon_kernel(double x, Bandwidth b, const ErrorCF& fe, const KernelSpec& k,
                    const QuadratureConfig& cfg = {});

/// Closed form of the Fourier-weighted kernel integral
///   integral of K_b((x - w)/b) exp(i x xi) dx = exp(i w xi) ft(b xi) / fe(xi).
std::complex<double> fourier_weight(double xi, double w, Bandwidth b, const ErrorCF& fe,
                                    const KernelSpec& k);

/// Closed form of integral of x^m K_b((x - w)/b) exp(i x xi) dx for
/// m in {0, 1, 2}, via (-i)^m d^m/dxi^m of fourier_weight. Needs analytic
/// first/second derivatives of both ft and fe.
std::complex<double> fourier_moment(int m, double xi, double w, Bandwidth b, const ErrorCF& fe,
                                    const KernelSpec& k);

namespace detail {

/// Scaled frequency-domain moments of the deconvolution kernel,
///   a_l(xi) = b^l * b * integral of v^l K_b(v) exp(i b v xi) dv,
/// so that  integral of x^m K_b((x-w)/b) e^{i x xi} dx
///        = e^{i w xi} * sum_l C(m,l) w^(m-l) a_l(xi).
/// Analytic values: a_0 = ft(b xi)/fe(xi), a_1 = -i a_0', a_2 = -a_0''.
std::complex<double> moment_a0(double xi, Bandwidth b, const ErrorCF& fe, const KernelSpec& k);
std::complex<double> moment_a1(double xi, Bandwidth b, const ErrorCF& fe, const KernelSpec& k);
std::complex<double> moment_a2(double xi, Bandwidth b, const ErrorCF& fe, const KernelSpec& k);

}  // namespace detail

}  // namespace hemet
