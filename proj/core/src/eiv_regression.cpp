#include "hemet/eiv_regression.hpp"

#include <cmath>

namespace hemet {

namespace {

// Gaussian elimination with partial pivoting for the tiny (<= 3x3)
// corrected normal equations.
template <int N>
std::array<double, N> solve(std::array<std::array<double, N>, N> a, std::array<double, N> rhs) {
  for (int col = 0; col < N; ++col) {
    int piv = col;
    for (int r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-12)
      throw Error(errc::non_invertible_corrected_moments,
                  "fit_corrected_ls: corrected moment matrix is singular");
    std::swap(a[col], a[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (int r = col + 1; r < N; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < N; ++c) a[r][c] -= f * a[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::array<double, N> x{};
  for (int r = N - 1; r >= 0; --r) {
    double acc = rhs[r];
    for (int c = r + 1; c < N; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

}  // namespace

ErrorMoments gaussian_error_moments(double variance) {
  if (!(variance >= 0.0))
    throw Error(errc::non_positive_variance, "gaussian_error_moments: negative variance");
  return {variance, 3.0 * variance * variance};
}

ErrorMoments laplace_error_moments(double variance) {
  if (!(variance >= 0.0))
    throw Error(errc::non_positive_variance, "laplace_error_moments: negative variance");
  return {variance, 6.0 * variance * variance};
}

MeanModel fit_corrected_ls(const Sample& sample, MeanFamily family, double sigma_eps_sq,
                           std::optional<ErrorMoments> error_moments) {
  sample.validate();
  if (!(sigma_eps_sq >= 0.0) || !std::isfinite(sigma_eps_sq))
    throw Error(errc::non_positive_variance, "fit_corrected_ls: sigma_eps_sq must be >= 0");
  const auto n = static_cast<double>(sample.size());
  const auto& y = sample.y;
  const auto& w = sample.w;

  double sy = 0.0, sw = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    sy += y[i];
    sw += w[i];
  }
  const double ybar = sy / n;
  const double wbar = sw / n;

  switch (family) {
    case MeanFamily::constant:
      return {MeanFamily::constant, {ybar}};

    case MeanFamily::linear: {
      double s_wy = 0.0, s_ww = 0.0;
      for (std::size_t i = 0; i < sample.size(); ++i) {
        s_wy += (w[i] - wbar) * (y[i] - ybar);
        s_ww += (w[i] - wbar) * (w[i] - wbar);
      }
      s_wy /= n;
      s_ww /= n;
      const double denom = s_ww - sigma_eps_sq;
      if (!(denom > 0.0))
        throw Error(errc::non_invertible_corrected_moments,
                    "fit_corrected_ls: corrected covariate variance is not positive");
      const double slope = s_wy / denom;
      return {MeanFamily::linear, {ybar - slope * wbar, slope}};
    }

    case MeanFamily::quadratic: {
      if (!error_moments)
        throw Error(errc::invalid_argument,
                    "fit_corrected_ls: quadratic family needs error moments");
      const double m2 = sigma_eps_sq;
      const double m4 = error_moments->m4;
      // t_k(W) with E[t_k(W) | X] = X^k for a symmetric error law:
      //   t_1 = W, t_2 = W^2 - m2, t_3 = W^3 - 3 m2 W,
      //   t_4 = W^4 - 6 m2 W^2 + 6 m2^2 - m4.
      std::array<double, 5> tk_mean{1.0, 0.0, 0.0, 0.0, 0.0};
      std::array<double, 3> ty{0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < sample.size(); ++i) {
        const double wi = w[i];
        const double w2 = wi * wi;
        const std::array<double, 5> tk = {1.0, wi, w2 - m2, w2 * wi - 3.0 * m2 * wi,
                                          w2 * w2 - 6.0 * m2 * w2 + 6.0 * m2 * m2 - m4};
        for (int k = 1; k < 5; ++k) tk_mean[k] += tk[k];
        for (int k = 0; k < 3; ++k) ty[k] += tk[k] * y[i];
      }
      for (int k = 1; k < 5; ++k) tk_mean[k] /= n;
      for (int k = 0; k < 3; ++k) ty[k] /= n;
      std::array<std::array<double, 3>, 3> a{};
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a[r][c] = tk_mean[r + c];
      const auto theta = solve<3>(a, ty);
      return {MeanFamily::quadratic, {theta[0], theta[1], theta[2]}};
    }
  }
  throw Error(errc::invalid_argument, "fit_corrected_ls: unknown mean family");
}

double sigma_eps_from_replicates(const ReplicateSet& reps) {
  double acc = 0.0;
  for (double d : reps.deltas()) acc += d * d;
  return acc / (2.0 * static_cast<double>(reps.size()));
}

}  // namespace hemet
