#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "hemet/error_cf.hpp"
#include "hemet/errors.hpp"

namespace hemet {

/// Observed data: response y, contaminated covariate w, and optionally a
/// second (replicate) measurement of the same latent covariate.
struct Sample {
  std::vector<double> y;
  std::vector<double> w;
  std::optional<std::vector<double>> w_rep;

  std::size_t size() const noexcept { return y.size(); }
  bool has_replicates() const noexcept { return w_rep.has_value(); }

  void validate() const {
    if (y.size() != w.size())
      throw Error(errc::length_mismatch, "Sample: y and w lengths differ");
    if (w_rep && w_rep->size() != w.size())
      throw Error(errc::length_mismatch, "Sample: w_rep length differs");
    if (y.size() < 5) throw Error(errc::too_few_rows, "Sample: need at least 5 observations");
    auto finite = [](const std::vector<double>& v) {
      for (double x : v)
        if (!std::isfinite(x)) return false;
      return true;
    };
    if (!finite(y) || !finite(w) || (w_rep && !finite(*w_rep)))
      throw Error(errc::invalid_argument, "Sample: non-finite value");
  }

  std::shared_ptr<const ReplicateSet> replicates() const {
    if (!w_rep) throw Error(errc::empty_replicates, "Sample: no replicate column");
    return std::make_shared<const ReplicateSet>(ReplicateSet::from_pairs(w, *w_rep));
  }
};

}  // namespace hemet
