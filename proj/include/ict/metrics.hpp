#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "ict/patches.hpp"
#include "ict/types.hpp"

namespace ict {

// Sentinel PSNR reported for an exact (zero-MSE) reconstruction.
inline constexpr double psnr_cap_db = 999.0;

// Default magnitude below which a coefficient counts as zero; the Cauchy
// operator with gamma > 0 never produces exact zeros.
inline constexpr double default_zero_epsilon = 1e-6;

struct MetricsRecord {
  std::string dataset;
  std::string algorithm;
  double lambda{0};
  double psnr_db{0};
  double mse{0};
  double percent_nonzero{0};
  int iterations{0};
};

template <typename Scalar>
Scalar mse(const Image<Scalar>& reference, const Image<Scalar>& estimate) {
  if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols())
    throw std::invalid_argument("mse: image dimensions differ");
  return (reference.pixels - estimate.pixels).squaredNorm() /
         Scalar(reference.rows() * reference.cols());
}

template <typename Scalar>
Scalar psnr(const Image<Scalar>& reference, const Image<Scalar>& estimate) {
  if (reference.peak != estimate.peak)
    throw std::invalid_argument("psnr: images must share a peak value");
  const Scalar err = mse(reference, estimate);
  if (err == Scalar(0)) return Scalar(psnr_cap_db);
  const Scalar value = Scalar(10) * std::log10(reference.peak * reference.peak / err);
  return std::min(value, Scalar(psnr_cap_db));
}

// Share (in percent) of coefficients with |x_i| > epsilon, over every entry
// of the given matrix (one column per coded patch).
template <typename Derived>
double percent_nonzero(const Eigen::MatrixBase<Derived>& coeffs,
                       double epsilon = default_zero_epsilon) {
  if (epsilon < 0) throw std::invalid_argument("percent_nonzero: epsilon must be non-negative");
  if (coeffs.size() == 0) return 0.0;
  const Eigen::Index active =
      (coeffs.derived().array().abs() > typename Derived::Scalar(epsilon)).count();
  return 100.0 * double(active) / double(coeffs.size());
}

}  // namespace ict
