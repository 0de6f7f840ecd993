#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "hemet/errors.hpp"

namespace hemet {

/// Decay class of a measurement-error characteristic function. Drives the
/// bandwidth rule and is carried as metadata on every ErrorCF.
enum class Smoothness { ordinary, supersmooth, estimated };

/// Differences W_i - W_i^r between a pair of repeated measurements of the
/// same latent covariate. Read-only after construction.
class ReplicateSet {
public:
  explicit ReplicateSet(std::vector<double> deltas);
  static ReplicateSet from_pairs(std::span<const double> w, std::span<const double> w_rep);

  const std::vector<double>& deltas() const noexcept { return deltas_; }
  std::size_t size() const noexcept { return deltas_.size(); }

private:
  std::vector<double> deltas_;
};

/// Default lower floor applied to the estimated characteristic function
/// inside deconvolution denominators.
inline constexpr double kDefaultCfFloor = 0.05;

/// Raw replicate-based estimate |mean cos(t*delta)|^(1/2), without floor.
double estimate_cf_raw(const ReplicateSet& reps, double t);
/// Floored estimate max(rho, raw).
double estimate_cf(const ReplicateSet& reps, double t, double rho = kDefaultCfFloor);

/// Multiplier-perturbed variant |mean V_j cos(t*delta_j)|^(1/2), floored.
double perturb_cf(const ReplicateSet& reps, std::span<const double> multipliers, double t,
                  double rho = kDefaultCfFloor);

/// Measurement-error characteristic function. All supported variants are
/// real, even, and equal to 1 at t = 0. Values are immutable and cheap to
/// copy; estimated variants share their replicate data.
class ErrorCF {
public:
  enum class Kind { poly_reciprocal, gaussian, estimated, perturbed_estimated };

  /// 1 / (c_0 + c_1 t + ... + c_a t^a) with c_0 = 1. Odd-power coefficients
  /// must vanish so the function stays even; the denominator is scanned for
  /// zeros on [-scan_range, scan_range] at construction.
  static ErrorCF poly_reciprocal(std::vector<double> coeffs, double scan_range = 64.0);
  /// Laplace error with the given variance: 1 / (1 + (variance/2) t^2).
  static ErrorCF laplace(double variance);
  /// Gaussian error with the given variance: exp(-mu t^2), mu = variance/2.
  static ErrorCF gaussian(double variance);
  /// Error-free limit (CF identically one).
  static ErrorCF identity();
  /// Replicate-estimated CF with ridge floor rho.
  static ErrorCF estimated(std::shared_ptr<const ReplicateSet> reps,
                           double rho = kDefaultCfFloor);
  /// Estimated CF perturbed by unit-mean multipliers (bootstrap use).
  static ErrorCF perturbed(std::shared_ptr<const ReplicateSet> reps,
                           std::shared_ptr<const std::vector<double>> multipliers,
                           double rho = kDefaultCfFloor);

  Kind kind() const noexcept { return kind_; }
  Smoothness smoothness() const noexcept { return smoothness_; }
  bool is_estimated() const noexcept {
    return kind_ == Kind::estimated || kind_ == Kind::perturbed_estimated;
  }
  double floor_rho() const noexcept { return rho_; }

  /// CF value; estimated variants are floored at rho.
  double operator()(double t) const;
  /// Value without the floor (identical to operator() for known CFs).
  double unfloored(double t) const;
  /// True when the floor is binding at t.
  bool floored_at(double t) const;

  /// First and second derivatives in t. For estimated variants these are
  /// computed from the analytic derivatives of the cosine mean; within the
  /// floor region the chain rule through |.|^(1/2) breaks down and
  /// degenerate_cf is thrown.
  double d1(double t) const;
  double d2(double t) const;

  /// True when d1/d2 are well defined at every point of ts.
  bool analytic_derivs_ok(std::span<const double> ts) const;

  /// Second moment of the error implied by the CF: -f''(0).
  double variance() const { return -d2(0.0); }

  const ReplicateSet* replicates() const noexcept { return reps_.get(); }

private:
  ErrorCF() = default;

  Kind kind_ = Kind::poly_reciprocal;
  Smoothness smoothness_ = Smoothness::ordinary;
  double rho_ = kDefaultCfFloor;
  // poly_reciprocal
  std::vector<double> coeffs_;
  // gaussian
  double mu_ = 0.0;
  // estimated / perturbed
  std::shared_ptr<const ReplicateSet> reps_;
  std::shared_ptr<const std::vector<double>> weights_;

  double cos_mean(double t) const;
  double cos_mean_d1(double t) const;
  double cos_mean_d2(double t) const;
};

ErrorCF laplace_cf(double variance);
ErrorCF gaussian_cf(double variance);

/// Mean-zero diagnostic 1/2 - cos(t*delta) / (2 f(t)^2) for the accuracy of
/// the replicate-based CF estimate.
double pi_epsilon(double t, double delta, const ErrorCF& true_cf);

}  // namespace hemet
