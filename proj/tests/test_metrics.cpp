#include <stdexcept>

#include "doctest.h"
#include "ict/metrics.hpp"
#include "oracles.hpp"

namespace {

ict::Image<double> constant_image(Eigen::Index rows, Eigen::Index cols, double value,
                                  double peak = 1.0) {
  ict::Image<double> image;
  image.pixels = Eigen::MatrixXd::Constant(rows, cols, value);
  image.peak = peak;
  return image;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("mse basics") {
    const auto zeros = constant_image(4, 4, 0.0);
    const auto ones = constant_image(4, 4, 1.0);
    CHECK(ict::mse(zeros, zeros) == 0.0);
    CHECK(ict::mse(zeros, ones) == 1.0);
    CHECK(ict::mse(ones, zeros) == 1.0);
    CHECK_THROWS_AS(ict::mse(zeros, constant_image(4, 5, 0.0)), std::invalid_argument);
  }

  TEST_CASE("mse matches the brute-force loop") {
    oracle::TestRng rng(21);
    ict::Image<double> a, b;
    a.pixels.resize(7, 5);
    b.pixels.resize(7, 5);
    for (Eigen::Index r = 0; r < 7; ++r)
      for (Eigen::Index c = 0; c < 5; ++c) {
        a.pixels(r, c) = rng.uniform();
        b.pixels(r, c) = rng.uniform();
      }
    double sum = 0.0;
    for (Eigen::Index r = 0; r < 7; ++r)
      for (Eigen::Index c = 0; c < 5; ++c) {
        const double d = a.pixels(r, c) - b.pixels(r, c);
        sum += d * d;
      }
    CHECK(ict::mse(a, b) == doctest::Approx(sum / 35.0).epsilon(1e-12));
  }

  TEST_CASE("psnr frozen values and the cap") {
    const auto zeros = constant_image(4, 4, 0.0);
    CHECK(ict::psnr(zeros, zeros) == 999.0);

    const auto zeros255 = constant_image(4, 4, 0.0, 255.0);
    const auto ones255 = constant_image(4, 4, 1.0, 255.0);
    CHECK(ict::psnr(zeros255, ones255) ==
          doctest::Approx(48.1308036086791034).epsilon(1e-13));

    const auto half = constant_image(4, 4, 0.5);
    CHECK(ict::psnr(zeros, half) == doctest::Approx(6.02059991327962390).epsilon(1e-13));
  }

  TEST_CASE("psnr symmetry and monotonicity") {
    const auto zeros = constant_image(3, 3, 0.0);
    const auto small = constant_image(3, 3, 0.25);
    const auto large = constant_image(3, 3, 0.5);
    CHECK(ict::psnr(zeros, small) == ict::psnr(small, zeros));
    CHECK(ict::psnr(zeros, small) > ict::psnr(zeros, large));
    auto other_peak = constant_image(3, 3, 0.25);
    other_peak.peak = 2.0;
    CHECK_THROWS_AS(ict::psnr(zeros, other_peak), std::invalid_argument);
  }

  TEST_CASE("percent nonzero") {
    CHECK(ict::percent_nonzero(Eigen::VectorXd(Eigen::VectorXd::Zero(10))) == 0.0);

    Eigen::VectorXd half = Eigen::VectorXd::Zero(10);
    for (int i = 0; i < 5; ++i) half[i] = 1.0;
    CHECK(ict::percent_nonzero(half, 1e-6) == 50.0);

    Eigen::MatrixXd coeffs(2, 3);
    coeffs << 1.0, 1e-7, 0.5, 0.0, 2e-3, 0.0;
    CHECK(ict::percent_nonzero(coeffs, 1e-6) == doctest::Approx(300.0 / 6.0));

    int manual = 0;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i)
      if (std::abs(coeffs(i % 2, i / 2)) > 1e-6) ++manual;
    CHECK(ict::percent_nonzero(coeffs, 1e-6) == doctest::Approx(100.0 * manual / 6.0));

    double previous = 200.0;
    for (double eps : {0.0, 1e-7, 1e-3, 0.4, 0.9, 2.0}) {
      const double value = ict::percent_nonzero(coeffs, eps);
      CHECK(value <= previous);
      previous = value;
    }
    CHECK_THROWS_AS(ict::percent_nonzero(coeffs, -1.0), std::invalid_argument);
  }
}
