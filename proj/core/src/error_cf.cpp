#include "hemet/error_cf.hpp"

#include <algorithm>
#include <cmath>

namespace hemet {

ReplicateSet::ReplicateSet(std::vector<double> deltas) : deltas_(std::move(deltas)) {
  if (deltas_.size() < 2)
    throw Error(errc::empty_replicates, "ReplicateSet: need at least 2 replicate pairs");
  for (double d : deltas_)
    if (!std::isfinite(d))
      throw Error(errc::invalid_argument, "ReplicateSet: non-finite difference");
}

ReplicateSet ReplicateSet::from_pairs(std::span<const double> w, std::span<const double> w_rep) {
  if (w.size() != w_rep.size())
    throw Error(errc::length_mismatch, "ReplicateSet: w and w_rep lengths differ");
  std::vector<double> d(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) d[i] = w[i] - w_rep[i];
  return ReplicateSet(std::move(d));
}

double estimate_cf_raw(const ReplicateSet& reps, double t) {
  double acc = 0.0;
  for (double d : reps.deltas()) acc += std::cos(t * d);
  return std::sqrt(std::abs(acc / static_cast<double>(reps.size())));
}

double estimate_cf(const ReplicateSet& reps, double t, double rho) {
  return std::max(rho, estimate_cf_raw(reps, t));
}

double perturb_cf(const ReplicateSet& reps, std::span<const double> multipliers, double t,
                  double rho) {
  if (multipliers.size() != reps.size())
    throw Error(errc::length_mismatch, "perturb_cf: multiplier count != replicate count");
  double acc = 0.0;
  const auto& d = reps.deltas();
  for (std::size_t j = 0; j < d.size(); ++j) acc += multipliers[j] * std::cos(t * d[j]);
  return std::max(rho, std::sqrt(std::abs(acc / static_cast<double>(d.size()))));
}

ErrorCF ErrorCF::poly_reciprocal(std::vector<double> coeffs, double scan_range) {
  if (coeffs.empty() || coeffs[0] != 1.0)
    throw Error(errc::invalid_argument, "poly_reciprocal: leading coefficient must be 1");
  for (std::size_t l = 1; l < coeffs.size(); l += 2)
    if (coeffs[l] != 0.0)
      throw Error(errc::invalid_argument,
                  "poly_reciprocal: odd-power coefficients must vanish (CF must be even)");
  ErrorCF cf;
  cf.kind_ = Kind::poly_reciprocal;
  cf.smoothness_ = Smoothness::ordinary;
  cf.coeffs_ = std::move(coeffs);
  // reject denominators that vanish anywhere on the working range
  const int kScanPoints = 4096;
  for (int i = 0; i <= kScanPoints; ++i) {
    const double t = -scan_range + 2.0 * scan_range * i / kScanPoints;
    double p = 0.0;
    for (std::size_t l = cf.coeffs_.size(); l-- > 0;) p = p * t + cf.coeffs_[l];
    if (!(std::abs(p) > 1e-12))
      throw Error(errc::degenerate_cf, "poly_reciprocal: denominator vanishes on scan grid");
  }
  return cf;
}

ErrorCF ErrorCF::laplace(double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw Error(errc::non_positive_variance, "laplace_cf: variance must be positive");
  return poly_reciprocal({1.0, 0.0, variance / 2.0});
}

ErrorCF ErrorCF::gaussian(double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw Error(errc::non_positive_variance, "gaussian_cf: variance must be positive");
  ErrorCF cf;
  cf.kind_ = Kind::gaussian;
  cf.smoothness_ = Smoothness::supersmooth;
  cf.mu_ = variance / 2.0;
  return cf;
}

ErrorCF ErrorCF::identity() {
  ErrorCF cf;
  cf.kind_ = Kind::poly_reciprocal;
  cf.smoothness_ = Smoothness::ordinary;
  cf.coeffs_ = {1.0};
  return cf;
}

ErrorCF ErrorCF::estimated(std::shared_ptr<const ReplicateSet> reps, double rho) {
  if (!reps) throw Error(errc::empty_replicates, "estimated cf: null replicate set");
  if (!(rho > 0.0)) throw Error(errc::invalid_argument, "estimated cf: floor must be positive");
  ErrorCF cf;
  cf.kind_ = Kind::estimated;
  cf.smoothness_ = Smoothness::estimated;
  cf.rho_ = rho;
  cf.reps_ = std::move(reps);
  return cf;
}

ErrorCF ErrorCF::perturbed(std::shared_ptr<const ReplicateSet> reps,
                           std::shared_ptr<const std::vector<double>> multipliers, double rho) {
  if (!reps) throw Error(errc::empty_replicates, "perturbed cf: null replicate set");
  if (!multipliers || multipliers->size() != reps->size())
    throw Error(errc::length_mismatch, "perturbed cf: multiplier count != replicate count");
  ErrorCF cf;
  cf.kind_ = Kind::perturbed_estimated;
  cf.smoothness_ = Smoothness::estimated;
  cf.rho_ = rho;
  cf.reps_ = std::move(reps);
  cf.weights_ = std::move(multipliers);
  return cf;
}

double ErrorCF::cos_mean(double t) const {
  const auto& d = reps_->deltas();
  double acc = 0.0;
  if (kind_ == Kind::perturbed_estimated) {
    const auto& v = *weights_;
    for (std::size_t j = 0; j < d.size(); ++j) acc += v[j] * std::cos(t * d[j]);
  } else {
    for (double dj : d) acc += std::cos(t * dj);
  }
  return acc / static_cast<double>(d.size());
}

double ErrorCF::cos_mean_d1(double t) const {
  const auto& d = reps_->deltas();
  double acc = 0.0;
  if (kind_ == Kind::perturbed_estimated) {
    const auto& v = *weights_;
    for (std::size_t j = 0; j < d.size(); ++j) acc -= v[j] * d[j] * std::sin(t * d[j]);
  } else {
    for (double dj : d) acc -= dj * std::sin(t * dj);
  }
  return acc / static_cast<double>(d.size());
}

double ErrorCF::cos_mean_d2(double t) const {
  const auto& d = reps_->deltas();
  double acc = 0.0;
  if (kind_ == Kind::perturbed_estimated) {
    const auto& v = *weights_;
    for (std::size_t j = 0; j < d.size(); ++j) acc -= v[j] * d[j] * d[j] * std::cos(t * d[j]);
  } else {
    for (double dj : d) acc -= dj * dj * std::cos(t * dj);
  }
  return acc / static_cast<double>(d.size());
}

double ErrorCF::unfloored(double t) const {
  switch (kind_) {
    case Kind::poly_reciprocal: {
      double p = 0.0;
      for (std::size_t l = coeffs_.size(); l-- > 0;) p = p * t + coeffs_[l];
      return 1.0 / p;
    }
    case Kind::gaussian:
      return std::exp(-mu_ * t * t);
    default:
      return std::sqrt(std::abs(cos_mean(t)));
  }
}

double ErrorCF::operator()(double t) const {
  const double v = unfloored(t);
  return is_estimated() ? std::max(rho_, v) : v;
}

bool ErrorCF::floored_at(double t) const {
  return is_estimated() && unfloored(t) < rho_;
}

double ErrorCF::d1(double t) const {
  switch (kind_) {
    case Kind::poly_reciprocal: {
      double p = 0.0, dp = 0.0;
      for (std::size_t l = coeffs_.size(); l-- > 0;) {
        dp = dp * t + (l + 1 < coeffs_.size() ? coeffs_[l + 1] * static_cast<double>(l + 1) : 0.0);
        p = p * t + coeffs_[l];
      }
      return -dp / (p * p);
    }
    case Kind::gaussian:
      return -2.0 * mu_ * t * std::exp(-mu_ * t * t);
    default: {
      const double phi = cos_mean(t);
      if (std::abs(phi) <= rho_ * rho_)
        throw Error(errc::degenerate_cf, "estimated cf: derivative undefined inside floor region");
      const double f = std::sqrt(std::abs(phi));
      const double sgn = phi < 0 ? -1.0 : 1.0;
      return sgn * cos_mean_d1(t) / (2.0 * f);
    }
  }
}

double ErrorCF::d2(double t) const {
  switch (kind_) {
    case Kind::poly_reciprocal: {
      double p = 0.0, dp = 0.0, d2p = 0.0;
      const std::size_t m = coeffs_.size();
      for (std::size_t l = m; l-- > 0;) {
        d2p = d2p * t +
              (l + 2 < m ? coeffs_[l + 2] * static_cast<double>((l + 2) * (l + 1)) : 0.0);
        dp = dp * t + (l + 1 < m ? coeffs_[l + 1] * static_cast<double>(l + 1) : 0.0);
        p = p * t + coeffs_[l];
      }
      return (2.0 * dp * dp - d2p * p) / (p * p * p);
    }
    case Kind::gaussian: {
      const double e = std::exp(-mu_ * t * t);
      return (4.0 * mu_ * mu_ * t * t - 2.0 * mu_) * e;
    }
    default: {
      const double phi = cos_mean(t);
      if (std::abs(phi) <= rho_ * rho_)
        throw Error(errc::degenerate_cf, "estimated cf: derivative undefined inside floor region");
      const double f = std::sqrt(std::abs(phi));
      const double sgn = phi < 0 ? -1.0 : 1.0;
      const double fd1 = sgn * cos_mean_d1(t) / (2.0 * f);
      return (sgn * cos_mean_d2(t) - 2.0 * fd1 * fd1) / (2.0 * f);
    }
  }
}

bool ErrorCF::analytic_derivs_ok(std::span<const double> ts) const {
  if (!is_estimated()) return true;
  for (double t : ts)
    if (std::abs(cos_mean(t)) <= rho_ * rho_) return false;
  return true;
}

ErrorCF laplace_cf(double variance) { return ErrorCF::laplace(variance); }
ErrorCF gaussian_cf(double variance) { return ErrorCF::gaussian(variance); }

double pi_epsilon(double t, double delta, const ErrorCF& true_cf) {
  const double f = true_cf.unfloored(t);
  if (!(std::abs(f) > 0.0))
    throw Error(errc::degenerate_cf, "pi_epsilon: characteristic function vanishes at t");
  return 0.5 - std::cos(t * delta) / (2.0 * f * f);
}

}  // namespace hemet
