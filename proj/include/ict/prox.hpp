#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "ict/types.hpp"

namespace ict {

// Parameters of the negative-log-Cauchy penalty -lambda*log(gamma/(pi*(gamma^2+z^2))).
// Only the zero-location (delta == 0) penalty is supported.
template <typename Scalar>
struct CauchyPenalty {
  Scalar lambda{1};
  Scalar gamma{Scalar(0.1)};
  Scalar delta{0};
};

// Which real root of the shrinkage cubic becomes the operator output.
// ObjectiveMin picks the global minimizer of the proximal objective;
// PaperLargestAbs picks the root with the largest magnitude.
enum class RootPolicy { ObjectiveMin, PaperLargestAbs };

// Real roots of a monic cubic, ascending. `count` is 1 exactly when the
// depressed-cubic discriminant is positive; duplicates may appear for
// (near-)degenerate cubics.
template <typename Scalar>
struct CubicRealRoots {
  std::array<Scalar, 3> roots{};
  int count{0};
  Scalar discriminant{0};
};

template <typename Scalar>
void validate(const CauchyPenalty<Scalar>& penalty) {
  if (!std::isfinite(penalty.lambda) || penalty.lambda < Scalar(0))
    throw std::invalid_argument("CauchyPenalty: lambda must be finite and non-negative");
  if (!std::isfinite(penalty.gamma) || penalty.gamma < Scalar(0))
    throw std::invalid_argument("CauchyPenalty: gamma must be finite and non-negative");
  if (penalty.delta != Scalar(0))
    throw std::invalid_argument("CauchyPenalty: only delta == 0 is supported");
}

template <typename Scalar>
Scalar hard_threshold(Scalar x, Scalar tau) {
  return std::abs(x) > tau ? x : Scalar(0);
}

template <typename Scalar>
Scalar soft_threshold(Scalar x, Scalar tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return Scalar(0);
}

namespace detail {

template <typename Scalar>
Scalar eval_cubic(Scalar z, Scalar b, Scalar c, Scalar d) {
  return ((z + b) * z + c) * z + d;
}

template <typename Scalar>
Scalar eval_cubic_magnitude(Scalar z, Scalar b, Scalar c, Scalar d) {
  const Scalar az = std::abs(z);
  return ((az + std::abs(b)) * az + std::abs(c)) * az + std::abs(d);
}

// Guarded Newton polish; steps are only accepted while they reduce |f|.
template <typename Scalar>
Scalar polish_root(Scalar z, Scalar b, Scalar c, Scalar d) {
  constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar f = eval_cubic(z, b, c, d);
  for (int it = 0; it < 6 && f != Scalar(0); ++it) {
    if (std::abs(f) <= Scalar(8) * eps * eval_cubic_magnitude(z, b, c, d)) break;
    const Scalar df = (Scalar(3) * z + Scalar(2) * b) * z + c;
    if (df == Scalar(0)) break;
    const Scalar zn = z - f / df;
    if (!std::isfinite(zn)) break;
    const Scalar fn = eval_cubic(zn, b, c, d);
    if (std::abs(fn) >= std::abs(f)) break;
    z = zn;
    f = fn;
  }
  return z;
}

// Bisection fallback for roots Newton could not finish (simple roots with a
// sign change nearby); near-double roots without a bracket keep the Newton value.
template <typename Scalar>
Scalar bisect_if_bracketed(Scalar z, Scalar b, Scalar c, Scalar d) {
  constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar f = eval_cubic(z, b, c, d);
  if (std::abs(f) <= Scalar(64) * eps * eval_cubic_magnitude(z, b, c, d)) return z;
  Scalar h = std::max(Scalar(1e-12), std::abs(z) * Scalar(1e-10));
  for (int grow = 0; grow < 12; ++grow, h *= Scalar(8)) {
    Scalar lo = z - h, hi = z + h;
    Scalar flo = eval_cubic(lo, b, c, d), fhi = eval_cubic(hi, b, c, d);
    if (std::signbit(flo) == std::signbit(fhi)) continue;
    for (int it = 0; it < 120; ++it) {
      const Scalar mid = (lo + hi) / Scalar(2);
      if (mid == lo || mid == hi) break;
      const Scalar fm = eval_cubic(mid, b, c, d);
      if (fm == Scalar(0)) return mid;
      if (std::signbit(fm) == std::signbit(flo)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const Scalar mid = (lo + hi) / Scalar(2);
    return std::abs(eval_cubic(mid, b, c, d)) < std::abs(f) ? mid : z;
  }
  return z;
}

template <typename Scalar>
Scalar finish_root(Scalar z, Scalar b, Scalar c, Scalar d) {
  return bisect_if_bracketed(polish_root(z, b, c, d), b, c, d);
}

// Solves t^3 + p t + q = 0, reporting roots of the monic cubic
// z^3 + b z^2 + c z + d with z = shift + t. Single real root via Cardano when
// the discriminant is positive, trigonometric (Viete) form otherwise; the
// acos argument is clamped so near-degenerate cubics land on the limiting
// double/single root pair instead of NaN.
template <typename Scalar>
CubicRealRoots<Scalar> solve_depressed_cubic(Scalar p, Scalar q, Scalar shift, Scalar b, Scalar c,
                                             Scalar d) {
  CubicRealRoots<Scalar> out;
  out.discriminant = q * q / Scalar(4) + p * p * p / Scalar(27);
  if (out.discriminant > Scalar(0)) {
    const Scalar s = std::sqrt(out.discriminant);
    // Take the cube root of whichever of -q/2 +- s has the larger magnitude;
    // the partner root comes from u*v = -p/3, avoiding cancellation.
    const Scalar u = std::cbrt(-q / Scalar(2) - std::copysign(s, q));
    const Scalar t = u - p / (Scalar(3) * u);
    out.roots[0] = finish_root(shift + t, b, c, d);
    out.count = 1;
    return out;
  }
  if (p >= Scalar(0)) {
    // Discriminant <= 0 forces p <= 0; equality only with q == 0 (triple root).
    out.roots[0] = finish_root(shift + std::cbrt(-q), b, c, d);
    out.count = 1;
    return out;
  }
  const Scalar m = Scalar(2) * std::sqrt(-p / Scalar(3));
  const Scalar arg =
      std::clamp(Scalar(3) * q / (Scalar(2) * p) * std::sqrt(Scalar(-3) / p), Scalar(-1), Scalar(1));
  const Scalar theta = std::acos(arg) / Scalar(3);
  constexpr Scalar two_thirds_pi = Scalar(2) * std::numbers::pi_v<Scalar> / Scalar(3);
  for (int k = 0; k < 3; ++k) {
    const Scalar t = m * std::cos(theta - two_thirds_pi * Scalar(k));
    out.roots[k] = finish_root(shift + t, b, c, d);
  }
  std::sort(out.roots.begin(), out.roots.end());
  out.count = 3;
  return out;
}

}  // namespace detail

// Real roots of z^3 + b z^2 + c z + d = 0.
template <typename Scalar>
CubicRealRoots<Scalar> solve_cubic_real(Scalar b, Scalar c, Scalar d) {
  if (!std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d))
    throw std::domain_error("solve_cubic_real: non-finite coefficient");
  const Scalar p = c - b * b / Scalar(3);
  const Scalar q = Scalar(2) * b * b * b / Scalar(27) - b * c / Scalar(3) + d;
  return detail::solve_depressed_cubic(p, q, -b / Scalar(3), b, c, d);
}

// Real roots of the shrinkage cubic z^3 - x z^2 + (gamma^2+lambda) z - gamma^2 x = 0
// via the depressed substitution z = x/3 + t.
template <typename Scalar>
CubicRealRoots<Scalar> solve_prox_cubic(Scalar x, const CauchyPenalty<Scalar>& penalty) {
  validate(penalty);
  if (!std::isfinite(x)) throw std::domain_error("solve_prox_cubic: non-finite input");
  const Scalar g2 = penalty.gamma * penalty.gamma;
  const Scalar lambda = penalty.lambda;
  const Scalar p = lambda + g2 - x * x / Scalar(3);
  const Scalar q =
      Scalar(-2) / Scalar(27) * x * x * x + (lambda - Scalar(2) * g2) * x / Scalar(3);
  return detail::solve_depressed_cubic(p, q, x / Scalar(3), -x, g2 + lambda, -g2 * x);
}

// Proximal objective (z-x)^2 - lambda*log(gamma/(pi*(gamma^2+z^2))).
template <typename Scalar>
Scalar prox_objective(Scalar z, Scalar x, const CauchyPenalty<Scalar>& penalty) {
  validate(penalty);
  if (penalty.gamma == Scalar(0))
    throw std::invalid_argument("prox_objective: gamma == 0 is singular; use the gamma-zero operator");
  const Scalar g = penalty.gamma;
  const Scalar diff = z - x;
  return diff * diff -
         penalty.lambda * std::log(g / (std::numbers::pi_v<Scalar> * (g * g + z * z)));
}

// Closed-form shrinkage in the gamma -> 0 limit. The stationary points
// x/2 +- sqrt(x^2-4*lambda)/2 are real only when x^2 >= 4*lambda, hence the
// extra guard alongside the |x| >= 2*lambda branch condition.
template <typename Scalar>
Scalar cauchy_shrink_gamma_zero(Scalar x, Scalar lambda) {
  if (!std::isfinite(lambda) || lambda <= Scalar(0))
    throw std::invalid_argument("cauchy_shrink_gamma_zero: lambda must be positive");
  if (!std::isfinite(x)) throw std::domain_error("cauchy_shrink_gamma_zero: non-finite input");
  const Scalar disc = x * x - Scalar(4) * lambda;
  if (disc >= Scalar(0)) {
    if (x >= Scalar(2) * lambda) return x / Scalar(2) + std::sqrt(disc) / Scalar(2);
    if (x <= Scalar(-2) * lambda) return x / Scalar(2) - std::sqrt(disc) / Scalar(2);
  }
  return Scalar(0);
}

namespace detail {

// Shrinkage core on prevalidated parameters. Works on |x| and restores the
// sign afterwards, which makes odd symmetry exact in floating point.
template <typename Scalar>
struct CauchyShrinkOp {
  Scalar lambda;
  Scalar gamma;
  RootPolicy policy;

  Scalar operator()(Scalar x) const {
    if (!std::isfinite(x)) throw std::domain_error("cauchy_shrink: non-finite input");
    if (lambda == Scalar(0)) return x;
    if (gamma == Scalar(0)) return cauchy_shrink_gamma_zero(x, lambda);
    if (x == Scalar(0)) return Scalar(0);
    const Scalar ax = std::abs(x);
    const Scalar g2 = gamma * gamma;
    const Scalar p = lambda + g2 - ax * ax / Scalar(3);
    const Scalar q =
        Scalar(-2) / Scalar(27) * ax * ax * ax + (lambda - Scalar(2) * g2) * ax / Scalar(3);
    const auto cubic =
        solve_depressed_cubic(p, q, ax / Scalar(3), -ax, g2 + lambda, -g2 * ax);
    Scalar z = cubic.roots[0];
    if (cubic.count > 1) {
      if (policy == RootPolicy::PaperLargestAbs) {
        for (int i = 1; i < cubic.count; ++i)
          if (std::abs(cubic.roots[i]) > std::abs(z)) z = cubic.roots[i];
      } else {
        // Compare (z-ax)^2 + lambda*log(gamma^2+z^2); same ordering as the
        // full objective, stable for extreme gamma. Ties keep the smaller |z|.
        std::array<Scalar, 3> by_mag{};
        std::copy(cubic.roots.begin(), cubic.roots.begin() + cubic.count, by_mag.begin());
        std::sort(by_mag.begin(), by_mag.begin() + cubic.count,
                  [](Scalar a, Scalar b) { return std::abs(a) < std::abs(b); });
        auto objective = [&](Scalar r) {
          const Scalar diff = r - ax;
          return diff * diff + lambda * std::log(g2 + r * r);
        };
        z = by_mag[0];
        Scalar best = objective(z);
        for (int i = 1; i < cubic.count; ++i) {
          const Scalar value = objective(by_mag[i]);
          if (value < best) {
            best = value;
            z = by_mag[i];
          }
        }
      }
    }
    z = std::clamp(z, Scalar(0), ax);
    return x < Scalar(0) ? -z : z;
  }
};

}  // namespace detail

template <typename Scalar>
Scalar cauchy_shrink(Scalar x, const CauchyPenalty<Scalar>& penalty,
                     RootPolicy policy = RootPolicy::ObjectiveMin) {
  validate(penalty);
  return detail::CauchyShrinkOp<Scalar>{penalty.lambda, penalty.gamma, policy}(x);
}

// Reports whether both root policies produce the same output at x within
// tol*max(1,|x|); the benchmark CLI uses this to map the disagreement region.
template <typename Scalar>
bool root_policies_agree(Scalar x, const CauchyPenalty<Scalar>& penalty,
                         Scalar tol = Scalar(1e-9)) {
  const Scalar a = cauchy_shrink(x, penalty, RootPolicy::ObjectiveMin);
  const Scalar b = cauchy_shrink(x, penalty, RootPolicy::PaperLargestAbs);
  return std::abs(a - b) <= tol * std::max(Scalar(1), std::abs(x));
}

namespace penalties {

template <typename Scalar>
struct Hard {
  Scalar tau{1};
};

template <typename Scalar>
struct Soft {
  Scalar tau{1};
};

template <typename Scalar>
struct Cauchy {
  CauchyPenalty<Scalar> params{};
  RootPolicy policy{RootPolicy::ObjectiveMin};
};

}  // namespace penalties

template <typename Scalar>
using Penalty =
    std::variant<penalties::Hard<Scalar>, penalties::Soft<Scalar>, penalties::Cauchy<Scalar>>;

template <typename Scalar>
void validate(const Penalty<Scalar>& penalty) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, penalties::Cauchy<Scalar>>) {
          validate(p.params);
        } else {
          if (!std::isfinite(p.tau) || p.tau < Scalar(0))
            throw std::invalid_argument("Penalty: tau must be finite and non-negative");
        }
      },
      penalty);
}

template <typename Scalar>
Scalar shrink_scalar(Scalar x, const Penalty<Scalar>& penalty) {
  validate(penalty);
  return std::visit(
      [x](const auto& p) -> Scalar {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, penalties::Hard<Scalar>>)
          return hard_threshold(x, p.tau);
        else if constexpr (std::is_same_v<P, penalties::Soft<Scalar>>)
          return soft_threshold(x, p.tau);
        else
          return detail::CauchyShrinkOp<Scalar>{p.params.lambda, p.params.gamma, p.policy}(x);
      },
      penalty);
}

// Entrywise shrinkage of a vector or matrix of coefficients, in place.
template <typename Derived>
void shrink_in_place(Eigen::MatrixBase<Derived>& values,
                     const Penalty<typename Derived::Scalar>& penalty) {
  using Scalar = typename Derived::Scalar;
  validate(penalty);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, penalties::Hard<Scalar>>) {
          values.derived() =
              (values.derived().array().abs() > p.tau).select(values.derived(), Scalar(0));
        } else if constexpr (std::is_same_v<P, penalties::Soft<Scalar>>) {
          values.derived() = (values.derived().array().sign() *
                              (values.derived().array().abs() - p.tau).max(Scalar(0)))
                                 .matrix();
        } else {
          const detail::CauchyShrinkOp<Scalar> op{p.params.lambda, p.params.gamma, p.policy};
          for (Index j = 0; j < values.cols(); ++j) {
            for (Index i = 0; i < values.rows(); ++i) {
              Scalar& v = values.derived().coeffRef(i, j);
              if (!std::isfinite(v))
                throw std::domain_error("shrink: non-finite coefficient at index (" +
                                        std::to_string(i) + ", " + std::to_string(j) + ")");
              v = op(v);
            }
          }
        }
      },
      penalty);
}

template <typename Scalar>
VectorX<Scalar> shrink_vector(const VectorX<Scalar>& values, const Penalty<Scalar>& penalty) {
  VectorX<Scalar> out = values;
  shrink_in_place(out, penalty);
  return out;
}

}  // namespace ict
