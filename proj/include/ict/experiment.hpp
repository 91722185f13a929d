#pragma once

#include <string>
#include <vector>

#include "ict/data_io.hpp"
#include "ict/dictionary.hpp"
#include "ict/metrics.hpp"
#include "ict/prox.hpp"
#include "ict/solver.hpp"
#include "ict/types.hpp"

namespace ict {

enum class Algorithm { Iht, Ist, Ict };

std::string algorithm_name(Algorithm algorithm);
Algorithm algorithm_from_name(const std::string& name);

// 16 logarithmically spaced values from 1e-4 to 10 (lambda_k = 10^(k/3 - 4)).
std::vector<double> default_lambda_grid();

// The grid value is the operator parameter for every algorithm: hard and
// soft tau, or the Cauchy weight lambda.
struct ExperimentConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<Algorithm> algorithms{Algorithm::Iht, Algorithm::Ist, Algorithm::Ict};
  std::vector<double> lambda_grid = default_lambda_grid();
  double gamma{0.1};
  double eta{0.005};
  int iterations{200};
  int stride{1};
  double epsilon_zero{default_zero_epsilon};
  RootPolicy root_policy{RootPolicy::ObjectiveMin};
  bool scale_threshold_by_step{false};
  int threads{1};
  std::string output_dir{"results"};
};

void validate(const ExperimentConfig& config);

struct SweepCell {
  MetricsRecord record;
  bool failed{false};  // the solver diverged on at least one dataset item
};

// Cells are ordered dataset-major, then algorithm, then lambda, following
// the configured orders; selections are one row per dataset x algorithm.
struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<MetricsRecord> best_psnr;
  std::vector<MetricsRecord> sparsest;
};

// Codes every patch of every dataset item for each (algorithm, lambda) cell
// against the fixed 64x144 DCT dictionary and averages the metrics over the
// items. A diverging cell is marked failed and the sweep continues.
SweepResult run_experiment(const ExperimentConfig& config);

// best_psnr.csv, sparsest.csv, sweep_full.csv, and curves/<dataset>.csv.
void emit_tables(const SweepResult& result, const std::string& output_dir);

// One sparsity-vs-PSNR chart per dataset plus an operator-shape chart.
// Returns the paths written; an empty result writes nothing.
std::vector<std::string> emit_plots(const SweepResult& result, const std::string& output_dir);

// metadata.json: software version, fixed conventions, resolved config.
void write_metadata(const ExperimentConfig& config, const std::string& output_dir);

ExperimentConfig load_config_json(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

namespace detail {

Penalty<double> penalty_for(Algorithm algorithm, double lambda, const ExperimentConfig& config);

// Codes columns in fixed 512-column blocks claimed off a shared counter, so
// the result is bitwise independent of the worker count.
MatrixX<double> threaded_batch_code(const MatrixX<double>& columns,
                                    const Dictionary<double>& dictionary,
                                    const Penalty<double>& penalty,
                                    const SolverConfig<double>& solver, int threads);

std::string sanitize_filename(const std::string& name);

}  // namespace detail

}  // namespace ict
