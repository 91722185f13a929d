#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ict/dictionary.hpp"
#include "ict/metrics.hpp"
#include "ict/prox.hpp"
#include "ict/types.hpp"

namespace ict {

template <typename Scalar>
struct SolverConfig {
  Scalar step_size{Scalar(0.005)};
  int max_iterations{200};
  // Secondary stop: |cost_k - cost_{k-1}| / max(1, |cost_k|) < cost_tolerance.
  // Zero disables it and the iteration budget alone applies.
  Scalar cost_tolerance{0};
  bool record_trace{false};
  // When set, shrinkage performs the textbook proximal step for eta times
  // the penalty's cost term (soft tau -> 2*eta*tau, hard tau ->
  // sqrt(2*eta)*tau, Cauchy lambda -> 2*eta*lambda); with the soft penalty
  // and eta <= 1/(2*sigma_max(A)^2) that makes cost() non-increasing every
  // iteration. Off by default: the operator parameter is used as given.
  bool scale_threshold_by_step{false};
  Scalar trace_epsilon{Scalar(default_zero_epsilon)};
};

// Per-iteration snapshot: cost under the caller's (unscaled) penalty,
// percent of coefficients above trace_epsilon, and PSNR of A*x against the
// observed signal y at peak 1.
template <typename Scalar>
struct IterationTrace {
  Scalar cost{0};
  Scalar percent_nonzero{0};
  Scalar psnr_db{0};
};

template <typename Scalar>
struct CodingResult {
  VectorX<Scalar> coefficients;
  int iterations_run{0};
  std::vector<IterationTrace<Scalar>> trace;
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(int iteration)
      : std::runtime_error("sparse_code: non-finite values at iteration " +
                           std::to_string(iteration) + "; the step size may be too large"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

template <typename Scalar>
void validate(const SolverConfig<Scalar>& config) {
  if (!(config.step_size > Scalar(0)) || !std::isfinite(config.step_size))
    throw std::invalid_argument("SolverConfig: step_size must be positive");
  if (config.max_iterations < 1)
    throw std::invalid_argument("SolverConfig: max_iterations must be at least 1");
  if (!(config.cost_tolerance >= Scalar(0)))
    throw std::invalid_argument("SolverConfig: cost_tolerance must be non-negative");
  if (!(config.trace_epsilon >= Scalar(0)))
    throw std::invalid_argument("SolverConfig: trace_epsilon must be non-negative");
}

// Penalty rescaled so the shrinkage operator equals the standard proximal
// map argmin_z 0.5*(z-v)^2 + eta*g(z) of the penalty's cost term g (soft
// g = 2*tau*|z|, hard g = tau^2*[z != 0], Cauchy g = lambda*log(gamma^2 +
// z^2)). The operators minimize (z-v)^2 + ... without the half, hence the
// extra factor 2 over eta alone.
template <typename Scalar>
Penalty<Scalar> scaled_penalty(const Penalty<Scalar>& penalty, Scalar eta) {
  return std::visit(
      [eta](auto p) -> Penalty<Scalar> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, penalties::Hard<Scalar>>)
          p.tau *= std::sqrt(Scalar(2) * eta);
        else if constexpr (std::is_same_v<P, penalties::Soft<Scalar>>)
          p.tau *= Scalar(2) * eta;
        else
          p.params.lambda *= Scalar(2) * eta;
        return p;
      },
      penalty);
}

// One exact gradient step on L(x) = ||y - A x||^2.
template <typename Scalar>
VectorX<Scalar> gradient_step(const VectorX<Scalar>& x, const Dictionary<Scalar>& dictionary,
                              const VectorX<Scalar>& y, Scalar eta) {
  if (x.size() != dictionary.atom_count())
    throw std::invalid_argument("gradient_step: coefficient length does not match atom count");
  if (y.size() != dictionary.signal_size())
    throw std::invalid_argument("gradient_step: signal length does not match dictionary");
  if (!(eta > Scalar(0)) || !std::isfinite(eta))
    throw std::invalid_argument("gradient_step: eta must be positive");
  return x - Scalar(2) * eta * (dictionary.atoms.transpose() * (dictionary.atoms * x - y));
}

// Penalized coding cost of a coefficient vector. The penalty weights are
// lambda_l1 = 2*tau for the soft cost and lambda_l0 = tau^2 for the hard
// cost; the Cauchy term is -sum_i log(gamma/(pi*(gamma^2 + x_i^2))).
template <typename Scalar>
Scalar cost(const VectorX<Scalar>& x, const VectorX<Scalar>& y,
            const Dictionary<Scalar>& dictionary, const Penalty<Scalar>& penalty) {
  if (x.size() != dictionary.atom_count())
    throw std::invalid_argument("cost: coefficient length does not match atom count");
  if (y.size() != dictionary.signal_size())
    throw std::invalid_argument("cost: signal length does not match dictionary");
  validate(penalty);
  const Scalar fidelity = (y - dictionary.atoms * x).squaredNorm();
  return fidelity + std::visit(
                        [&x](const auto& p) -> Scalar {
                          using P = std::decay_t<decltype(p)>;
                          if constexpr (std::is_same_v<P, penalties::Hard<Scalar>>) {
                            Index active = 0;
                            for (Index i = 0; i < x.size(); ++i)
                              if (x[i] != Scalar(0)) ++active;
                            return p.tau * p.tau * Scalar(active);
                          } else if constexpr (std::is_same_v<P, penalties::Soft<Scalar>>) {
                            return Scalar(2) * p.tau * x.cwiseAbs().sum();
                          } else {
                            const Scalar g = p.params.gamma;
                            if (g == Scalar(0))
                              throw std::invalid_argument(
                                  "cost: gamma == 0 makes the Cauchy term singular");
                            Scalar term = 0;
                            for (Index i = 0; i < x.size(); ++i)
                              term -= std::log(
                                  g / (std::numbers::pi_v<Scalar> * (g * g + x[i] * x[i])));
                            return term;
                          }
                        },
                        penalty);
}

namespace detail {

template <typename Scalar>
Scalar trace_psnr(const VectorX<Scalar>& residual, Scalar peak) {
  const Scalar err = residual.squaredNorm() / Scalar(residual.size());
  if (err == Scalar(0)) return Scalar(psnr_cap_db);
  return std::min(Scalar(10) * std::log10(peak * peak / err), Scalar(psnr_cap_db));
}

}  // namespace detail

// Proximal-gradient sparse coding: x starts at zero and repeats
// {gradient step, entrywise shrinkage} for the configured budget.
template <typename Scalar>
CodingResult<Scalar> sparse_code(const VectorX<Scalar>& y, const Dictionary<Scalar>& dictionary,
                                 const Penalty<Scalar>& penalty,
                                 const SolverConfig<Scalar>& config = {}) {
  if (y.size() != dictionary.signal_size())
    throw std::invalid_argument("sparse_code: signal length does not match dictionary");
  validate(penalty);
  validate(config);

  const Penalty<Scalar> shrink_penalty = config.scale_threshold_by_step
                                             ? scaled_penalty(penalty, config.step_size)
                                             : penalty;
  const Scalar two_eta = Scalar(2) * config.step_size;

  CodingResult<Scalar> result;
  result.coefficients = VectorX<Scalar>::Zero(dictionary.atom_count());
  VectorX<Scalar> residual(dictionary.signal_size());
  VectorX<Scalar>& x = result.coefficients;

  const bool needs_cost = config.record_trace || config.cost_tolerance > Scalar(0);
  Scalar previous_cost = 0;
  for (int it = 1; it <= config.max_iterations; ++it) {
    residual.noalias() = dictionary.atoms * x;
    residual -= y;
    x.noalias() -= two_eta * (dictionary.atoms.transpose() * residual);
    if (!x.allFinite()) throw DivergenceError(it);
    shrink_in_place(x, shrink_penalty);
    result.iterations_run = it;

    if (!needs_cost) continue;
    const Scalar current_cost = cost(x, y, dictionary, penalty);
    if (config.record_trace) {
      residual.noalias() = dictionary.atoms * x;
      residual -= y;
      result.trace.push_back({current_cost,
                              Scalar(percent_nonzero(x, double(config.trace_epsilon))),
                              detail::trace_psnr(residual, Scalar(1))});
    }
    if (config.cost_tolerance > Scalar(0) && it > 1 &&
        std::abs(previous_cost - current_cost) / std::max(Scalar(1), std::abs(current_cost)) <
            config.cost_tolerance)
      break;
    previous_cost = current_cost;
  }
  return result;
}

// Fixed-budget batch variant coding every column of Y against the same
// dictionary. Used by the bencher, which slices its workload into fixed-size
// column blocks so results never depend on the thread count. Tracing and the
// cost-based stop are per-column concerns and are rejected here.
template <typename Scalar>
MatrixX<Scalar> sparse_code_batch(const MatrixX<Scalar>& y_columns,
                                  const Dictionary<Scalar>& dictionary,
                                  const Penalty<Scalar>& penalty,
                                  const SolverConfig<Scalar>& config = {}) {
  if (y_columns.rows() != dictionary.signal_size())
    throw std::invalid_argument("sparse_code_batch: signal length does not match dictionary");
  validate(penalty);
  validate(config);
  if (config.record_trace || config.cost_tolerance > Scalar(0))
    throw std::invalid_argument(
        "sparse_code_batch: per-column stopping and tracing are not supported; use sparse_code");

  const Penalty<Scalar> shrink_penalty = config.scale_threshold_by_step
                                             ? scaled_penalty(penalty, config.step_size)
                                             : penalty;
  const Scalar two_eta = Scalar(2) * config.step_size;

  MatrixX<Scalar> x = MatrixX<Scalar>::Zero(dictionary.atom_count(), y_columns.cols());
  MatrixX<Scalar> residual(y_columns.rows(), y_columns.cols());
  for (int it = 1; it <= config.max_iterations; ++it) {
    residual.noalias() = dictionary.atoms * x;
    residual -= y_columns;
    x.noalias() -= two_eta * (dictionary.atoms.transpose() * residual);
    if (!x.allFinite()) throw DivergenceError(it);
    shrink_in_place(x, shrink_penalty);
  }
  return x;
}

}  // namespace ict
