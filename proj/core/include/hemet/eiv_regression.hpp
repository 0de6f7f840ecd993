#pragma once

#include <array>
#include <optional>
#include <vector>

#include "hemet/sample.hpp"

namespace hemet {

enum class MeanFamily { constant, linear, quadratic };

/// Parametric conditional-mean function g(x) = theta_0 + theta_1 x + ...
/// with degree at most 2.
struct MeanModel {
  MeanFamily family = MeanFamily::constant;
  std::vector<double> theta;  // length degree + 1

  int degree() const noexcept {
    switch (family) {
      case MeanFamily::constant: return 0;
      case MeanFamily::linear: return 1;
      case MeanFamily::quadratic: return 2;
    }
    return 0;
  }

  double operator()(double x) const {
    double acc = 0.0;
    for (std::size_t l = theta.size(); l-- > 0;) acc = acc * x + theta[l];
    return acc;
  }

  /// Coefficients of (y - g(x))^2 as a polynomial in x (degree <= 4).
  std::array<double, 5> residual_sq_coeffs(double y) const {
    const double t0 = theta.size() > 0 ? theta[0] : 0.0;
    const double t1 = theta.size() > 1 ? theta[1] : 0.0;
    const double t2 = theta.size() > 2 ? theta[2] : 0.0;
    const double r = y - t0;
    return {r * r, -2.0 * r * t1, t1 * t1 - 2.0 * r * t2, 2.0 * t1 * t2, t2 * t2};
  }
};

/// Central moments of the measurement error needed by the degree-2
/// corrected-score fit.
struct ErrorMoments {
  double m2 = 0.0;  // E[eps^2]
  double m4 = 0.0;  // E[eps^4]
};

ErrorMoments gaussian_error_moments(double variance);
ErrorMoments laplace_error_moments(double variance);

/// Corrected least squares for the mean parameters under classical
/// measurement error with known (or externally estimated) error variance.
/// With sigma_eps_sq = 0 this is ordinary least squares on (w, y).
/// The quadratic family needs the fourth error moment and therefore the
/// error_moments argument.
MeanModel fit_corrected_ls(const Sample& sample, MeanFamily family, double sigma_eps_sq,
                           std::optional<ErrorMoments> error_moments = std::nullopt);

/// Error-variance estimate from replicate differences:
/// Var(W - W^r) = 2 sigma_eps^2, so sigma_eps^2 = mean(delta^2) / 2.
double sigma_eps_from_replicates(const ReplicateSet& reps);

}  // namespace hemet
