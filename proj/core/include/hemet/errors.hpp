#pragma once

#include <stdexcept>
#include <string>

namespace hemet {

enum class errc {
  // numerical
  quadrature_not_converged,
  degenerate_cf,
  negative_variance_estimate,
  non_invertible_corrected_moments,
  unsupported_order,
  // construction / input validation
  non_positive_variance,
  empty_replicates,
  length_mismatch,
  insufficient_replicates,
  invalid_argument,
  // data ingestion
  missing_column,
  non_numeric_cell,
  too_few_rows,
  io_failure,
  config,
};

/// Library-wide exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

  /// True for errors caused by bad configuration or malformed input,
  /// as opposed to numerical failures during computation.
  bool is_config() const noexcept {
    switch (code_) {
      case errc::non_positive_variance:
      case errc::empty_replicates:
      case errc::length_mismatch:
      case errc::insufficient_replicates:
      case errc::invalid_argument:
      case errc::missing_column:
      case errc::non_numeric_cell:
      case errc::too_few_rows:
      case errc::config:
        return true;
      default:
        return false;
    }
  }

private:
  errc code_;
};

}  // namespace hemet
