#include "ict/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "ict/patches.hpp"
#include "ict/svg.hpp"
#include "ict/version.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ict {

namespace {

constexpr int kPatchEdge = 8;
constexpr int kAtomsPerAxis = 12;
constexpr Index kBatchBlock = 512;

std::string g17(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

std::ofstream create_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileAccessError(path.string() + ": cannot create file");
  return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw FileAccessError(path.string() + ": cannot write file");
}

fs::path ensure_directory(const std::string& dir) {
  const fs::path path(dir);
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw FileAccessError(dir + ": cannot create directory (" + ec.message() + ")");
  return path;
}

std::string variant_name(PhantomVariant variant) {
  return variant == PhantomVariant::Original ? "original" : "modified";
}

std::string policy_name(RootPolicy policy) {
  return policy == RootPolicy::PaperLargestAbs ? "largest_abs" : "objective_min";
}

void reject_unknown_keys(const json& object, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& item : object.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* key) { return item.key() == key; }))
      throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
  }
}

DatasetSpec dataset_from_json(const json& entry, std::size_t position) {
  const std::string where = "config dataset #" + std::to_string(position);
  if (!entry.is_object()) throw std::invalid_argument(where + ": expected an object");
  const std::string kind = entry.value("kind", std::string());

  DatasetSpec spec;
  spec.name = entry.value("name", std::string());
  if (kind == "shepp_logan") {
    reject_unknown_keys(entry, {"kind", "name", "size", "variant"}, where);
    spec.kind = DatasetKind::SheppLogan;
    spec.phantom_size = entry.value("size", 64);
    const std::string variant = entry.value("variant", std::string("modified"));
    if (variant == "original")
      spec.phantom_variant = PhantomVariant::Original;
    else if (variant == "modified")
      spec.phantom_variant = PhantomVariant::Modified;
    else
      throw std::invalid_argument(where + ": variant must be 'original' or 'modified'");
  } else if (kind == "pgm") {
    reject_unknown_keys(entry, {"kind", "name", "path"}, where);
    spec.kind = DatasetKind::Pgm;
    spec.path = entry.value("path", std::string());
  } else if (kind == "mnist") {
    reject_unknown_keys(entry, {"kind", "name", "images", "labels", "sample_count", "seed"},
                        where);
    spec.kind = DatasetKind::Mnist;
    spec.path = entry.value("images", std::string());
    spec.labels_path = entry.value("labels", std::string());
    spec.sample_count = entry.value("sample_count", 500);
    spec.rng_seed = entry.value("seed", std::uint64_t{1});
  } else {
    throw std::invalid_argument(where + ": kind must be 'shepp_logan', 'pgm', or 'mnist'");
  }
  return spec;
}

json dataset_to_json(const DatasetSpec& spec) {
  json entry;
  if (!spec.name.empty()) entry["name"] = spec.name;
  switch (spec.kind) {
    case DatasetKind::SheppLogan:
      entry["kind"] = "shepp_logan";
      entry["size"] = spec.phantom_size;
      entry["variant"] = variant_name(spec.phantom_variant);
      break;
    case DatasetKind::Pgm:
      entry["kind"] = "pgm";
      entry["path"] = spec.path;
      break;
    case DatasetKind::Mnist:
      entry["kind"] = "mnist";
      entry["images"] = spec.path;
      entry["labels"] = spec.labels_path;
      entry["sample_count"] = spec.sample_count;
      entry["seed"] = spec.rng_seed;
      break;
  }
  return entry;
}

// Selections for one dataset x algorithm group: best PSNR, and the smallest
// support. All-zero cells are skipped for the sparsest pick whenever some
// cell kept active coefficients, since the all-zero tail of the grid would
// otherwise win every comparison; ties prefer the higher PSNR.
void select_group_rows(const std::vector<SweepCell>& cells, std::size_t begin, std::size_t end,
                       SweepResult& result) {
  const SweepCell* best = nullptr;
  for (std::size_t i = begin; i < end; ++i) {
    const SweepCell& cell = cells[i];
    if (cell.failed) continue;
    if (!best || cell.record.psnr_db > best->record.psnr_db) best = &cell;
  }
  if (best) result.best_psnr.push_back(best->record);

  bool any_active = false;
  for (std::size_t i = begin; i < end; ++i)
    if (!cells[i].failed && cells[i].record.percent_nonzero > 0) any_active = true;

  const SweepCell* sparsest = nullptr;
  for (std::size_t i = begin; i < end; ++i) {
    const SweepCell& cell = cells[i];
    if (cell.failed) continue;
    if (any_active && cell.record.percent_nonzero == 0) continue;
    if (!sparsest || cell.record.percent_nonzero < sparsest->record.percent_nonzero ||
        (cell.record.percent_nonzero == sparsest->record.percent_nonzero &&
         cell.record.psnr_db > sparsest->record.psnr_db))
      sparsest = &cell;
  }
  if (sparsest) result.sparsest.push_back(sparsest->record);
}

}  // namespace

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Iht:
      return "IHT";
    case Algorithm::Ist:
      return "IST";
    case Algorithm::Ict:
      return "ICT";
  }
  throw std::invalid_argument("algorithm_name: unknown algorithm");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "IHT") return Algorithm::Iht;
  if (name == "IST") return Algorithm::Ist;
  if (name == "ICT") return Algorithm::Ict;
  throw std::invalid_argument("algorithm_from_name: '" + name +
                              "' is not one of IHT, IST, ICT");
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  grid.reserve(16);
  for (int k = 0; k < 16; ++k) grid.push_back(std::pow(10.0, double(k) / 3.0 - 4.0));
  return grid;
}

void validate(const ExperimentConfig& config) {
  if (config.datasets.empty())
    throw std::invalid_argument("ExperimentConfig: datasets must be non-empty");
  if (config.algorithms.empty())
    throw std::invalid_argument("ExperimentConfig: algorithms must be non-empty");
  if (config.lambda_grid.empty())
    throw std::invalid_argument("ExperimentConfig: lambda_grid must be non-empty");
  for (const double lambda : config.lambda_grid)
    if (!(lambda > 0) || !std::isfinite(lambda))
      throw std::invalid_argument("ExperimentConfig: lambda_grid values must be positive");
  if (!(config.gamma > 0) || !std::isfinite(config.gamma))
    throw std::invalid_argument("ExperimentConfig: gamma must be positive");
  if (!(config.eta > 0) || !std::isfinite(config.eta))
    throw std::invalid_argument("ExperimentConfig: eta must be positive");
  if (config.iterations < 1)
    throw std::invalid_argument("ExperimentConfig: iterations must be at least 1");
  if (config.stride < 1 || config.stride > kPatchEdge)
    throw std::invalid_argument("ExperimentConfig: stride must be in [1, 8]");
  if (config.epsilon_zero < 0)
    throw std::invalid_argument("ExperimentConfig: epsilon_zero must be non-negative");
  if (config.threads < 1)
    throw std::invalid_argument("ExperimentConfig: threads must be at least 1");
  if (config.output_dir.empty())
    throw std::invalid_argument("ExperimentConfig: output_dir must be non-empty");
  for (const DatasetSpec& spec : config.datasets) {
    switch (spec.kind) {
      case DatasetKind::Pgm:
        if (spec.path.empty())
          throw std::invalid_argument("ExperimentConfig: PGM dataset needs a path");
        break;
      case DatasetKind::Mnist:
        if (spec.path.empty() || spec.labels_path.empty())
          throw std::invalid_argument(
              "ExperimentConfig: MNIST dataset needs image and label paths");
        if (spec.sample_count < 1)
          throw std::invalid_argument(
              "ExperimentConfig: MNIST sample_count must be at least 1");
        break;
      case DatasetKind::SheppLogan:
        if (spec.phantom_size < 16)
          throw std::invalid_argument("ExperimentConfig: phantom size must be at least 16");
        break;
    }
  }
}

namespace detail {

Penalty<double> penalty_for(Algorithm algorithm, double lambda,
                            const ExperimentConfig& config) {
  switch (algorithm) {
    case Algorithm::Iht:
      return penalties::Hard<double>{lambda};
    case Algorithm::Ist:
      return penalties::Soft<double>{lambda};
    case Algorithm::Ict:
      return penalties::Cauchy<double>{CauchyPenalty<double>{lambda, config.gamma},
                                       config.root_policy};
  }
  throw std::invalid_argument("penalty_for: unknown algorithm");
}

MatrixX<double> threaded_batch_code(const MatrixX<double>& columns,
                                    const Dictionary<double>& dictionary,
                                    const Penalty<double>& penalty,
                                    const SolverConfig<double>& solver, int threads) {
  if (threads < 1) throw std::invalid_argument("threaded_batch_code: threads must be >= 1");
  const Index total = columns.cols();
  MatrixX<double> coded(dictionary.atom_count(), total);
  if (total == 0) return coded;

  const Index blocks = (total + kBatchBlock - 1) / kBatchBlock;
  const int workers = int(std::min<Index>(blocks, Index(threads)));

  std::atomic<Index> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::exception_ptr error;

  const auto work = [&]() {
    try {
      for (;;) {
        if (stop.load(std::memory_order_relaxed)) return;
        const Index block = next.fetch_add(1);
        if (block >= blocks) return;
        const Index begin = block * kBatchBlock;
        const Index count = std::min(kBatchBlock, total - begin);
        coded.middleCols(begin, count) = sparse_code_batch<double>(
            MatrixX<double>(columns.middleCols(begin, count)), dictionary, penalty, solver);
      }
    } catch (...) {
      stop.store(true, std::memory_order_relaxed);
      const std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return coded;
}

std::string sanitize_filename(const std::string& name) {
  std::string out;
  out.reserve(name.size());
  for (const char ch : name)
    out.push_back(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' ||
                          ch == '_'
                      ? ch
                      : '_');
  return out.empty() ? std::string("dataset") : out;
}

}  // namespace detail

SweepResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const Dictionary<double> dictionary = build_overcomplete_dct<double>(kPatchEdge, kAtomsPerAxis);

  SolverConfig<double> solver;
  solver.step_size = config.eta;
  solver.max_iterations = config.iterations;
  solver.scale_threshold_by_step = config.scale_threshold_by_step;

  SweepResult result;
  result.cells.reserve(config.datasets.size() * config.algorithms.size() *
                       config.lambda_grid.size());

  for (const DatasetSpec& spec : config.datasets) {
    const std::string dataset = dataset_label(spec);
    const std::vector<Image<double>> items = load_dataset(spec);
    if (items.empty())
      throw std::invalid_argument("run_experiment: dataset '" + dataset + "' has no items");

    std::vector<PatchSet<double>> sets;
    sets.reserve(items.size());
    for (const Image<double>& item : items)
      sets.push_back(extract_patches(item, kPatchEdge, config.stride));

    for (const Algorithm algorithm : config.algorithms) {
      const std::size_t group_begin = result.cells.size();
      for (const double lambda : config.lambda_grid) {
        SweepCell cell;
        cell.record.dataset = dataset;
        cell.record.algorithm = algorithm_name(algorithm);
        cell.record.lambda = lambda;
        cell.record.iterations = config.iterations;
        const Penalty<double> penalty = detail::penalty_for(algorithm, lambda, config);

        try {
          double psnr_sum = 0, mse_sum = 0, nonzero_sum = 0;
          for (std::size_t i = 0; i < items.size(); ++i) {
            const MatrixX<double> coded = detail::threaded_batch_code(
                sets[i].patches, dictionary, penalty, solver, config.threads);
            const Image<double> reconstructed = reconstruct_from_patches(
                sets[i], MatrixX<double>(dictionary.atoms * coded));
            psnr_sum += psnr(items[i], reconstructed);
            mse_sum += mse(items[i], reconstructed);
            nonzero_sum += percent_nonzero(coded, config.epsilon_zero);
          }
          const double n = double(items.size());
          cell.record.psnr_db = psnr_sum / n;
          cell.record.mse = mse_sum / n;
          cell.record.percent_nonzero = nonzero_sum / n;
        } catch (const DivergenceError&) {
          cell.failed = true;
        }
        result.cells.push_back(std::move(cell));
      }
      select_group_rows(result.cells, group_begin, result.cells.size(), result);
    }
  }
  return result;
}

void emit_tables(const SweepResult& result, const std::string& output_dir) {
  if (result.cells.empty()) throw std::invalid_argument("emit_tables: empty sweep result");
  const fs::path dir = ensure_directory(output_dir);
  const fs::path curves_dir = ensure_directory((dir / "curves").string());

  {
    const fs::path path = dir / "sweep_full.csv";
    std::ofstream out = create_output(path);
    out << "dataset,algorithm,lambda,psnr_db,mse,percent_nonzero,iterations,status\n";
    for (const SweepCell& cell : result.cells) {
      const MetricsRecord& r = cell.record;
      out << r.dataset << ',' << r.algorithm << ',' << g17(r.lambda) << ',';
      if (cell.failed)
        out << ",,," << r.iterations << ",diverged\n";
      else
        out << g17(r.psnr_db) << ',' << g17(r.mse) << ',' << g17(r.percent_nonzero) << ','
            << r.iterations << ",ok\n";
    }
    finish_output(out, path);
  }

  const std::pair<const char*, const std::vector<MetricsRecord>*> tables[] = {
      {"best_psnr.csv", &result.best_psnr}, {"sparsest.csv", &result.sparsest}};
  for (const auto& [filename, rows] : tables) {
    const fs::path path = dir / filename;
    std::ofstream out = create_output(path);
    out << "dataset,algorithm,lambda,psnr_db,percent_nonzero,iterations\n";
    for (const MetricsRecord& r : *rows)
      out << r.dataset << ',' << r.algorithm << ',' << g17(r.lambda) << ',' << g17(r.psnr_db)
          << ',' << g17(r.percent_nonzero) << ',' << r.iterations << '\n';
    finish_output(out, path);
  }

  // One curves file per dataset, rows grouped by algorithm in sweep order.
  std::vector<std::string> dataset_order;
  for (const SweepCell& cell : result.cells)
    if (std::find(dataset_order.begin(), dataset_order.end(), cell.record.dataset) ==
        dataset_order.end())
      dataset_order.push_back(cell.record.dataset);
  for (const std::string& dataset : dataset_order) {
    const fs::path path = curves_dir / (detail::sanitize_filename(dataset) + ".csv");
    std::ofstream out = create_output(path);
    out << "algorithm,percent_nonzero,psnr_db\n";
    for (const SweepCell& cell : result.cells) {
      if (cell.failed || cell.record.dataset != dataset) continue;
      out << cell.record.algorithm << ',' << g17(cell.record.percent_nonzero) << ','
          << g17(cell.record.psnr_db) << '\n';
    }
    finish_output(out, path);
  }
}

std::vector<std::string> emit_plots(const SweepResult& result, const std::string& output_dir) {
  std::vector<std::string> written;
  if (result.cells.empty()) return written;
  const fs::path dir = ensure_directory((fs::path(output_dir) / "plots").string());

  std::vector<std::string> dataset_order;
  for (const SweepCell& cell : result.cells)
    if (std::find(dataset_order.begin(), dataset_order.end(), cell.record.dataset) ==
        dataset_order.end())
      dataset_order.push_back(cell.record.dataset);

  for (const std::string& dataset : dataset_order) {
    std::vector<SvgSeries> series;
    for (const SweepCell& cell : result.cells) {
      if (cell.failed || cell.record.dataset != dataset) continue;
      if (series.empty() || series.back().label != cell.record.algorithm) {
        series.push_back(SvgSeries{cell.record.algorithm, {}, {}});
      }
      series.back().x.push_back(cell.record.percent_nonzero);
      series.back().y.push_back(cell.record.psnr_db);
    }
    if (series.empty()) continue;
    const fs::path path = dir / (detail::sanitize_filename(dataset) + ".svg");
    write_svg_chart(path.string(), dataset + ": sparsity vs reconstruction quality",
                    "% non-zero coefficients", "PSNR (dB)", series);
    written.push_back(path.string());
  }

  // Operator shapes at the reference parameters lambda = 1, gamma = 0.001;
  // the Cauchy curve uses the largest-root policy it is described with.
  {
    const CauchyPenalty<double> params{1.0, 0.001};
    SvgSeries hard{"hard (IHT)", {}, {}};
    SvgSeries cauchy{"Cauchy (ICT)", {}, {}};
    SvgSeries soft{"soft (IST)", {}, {}};
    for (int k = 0; k <= 400; ++k) {
      const double x = -5.0 + 0.025 * double(k);
      hard.x.push_back(x);
      hard.y.push_back(hard_threshold(x, 1.0));
      cauchy.x.push_back(x);
      cauchy.y.push_back(cauchy_shrink(x, params, RootPolicy::PaperLargestAbs));
      soft.x.push_back(x);
      soft.y.push_back(soft_threshold(x, 1.0));
    }
    const fs::path path = dir / "operators.svg";
    write_svg_chart(path.string(), "Shrinkage operators (lambda = 1, gamma = 0.001)",
                    "input x", "operator output", {hard, cauchy, soft});
    written.push_back(path.string());
  }
  return written;
}

std::string config_to_json(const ExperimentConfig& config) {
  json j;
  j["datasets"] = json::array();
  for (const DatasetSpec& spec : config.datasets) j["datasets"].push_back(dataset_to_json(spec));
  j["algorithms"] = json::array();
  for (const Algorithm algorithm : config.algorithms)
    j["algorithms"].push_back(algorithm_name(algorithm));
  j["lambda_grid"] = config.lambda_grid;
  j["gamma"] = config.gamma;
  j["eta"] = config.eta;
  j["iterations"] = config.iterations;
  j["stride"] = config.stride;
  j["epsilon_zero"] = config.epsilon_zero;
  j["root_policy"] = policy_name(config.root_policy);
  j["scale_threshold_by_step"] = config.scale_threshold_by_step;
  j["threads"] = config.threads;
  j["output_dir"] = config.output_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig load_config_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileAccessError(path + ": cannot open file");

  ExperimentConfig config;
  try {
    const json j = json::parse(in);
    if (!j.is_object()) throw std::invalid_argument(path + ": config must be a JSON object");
    reject_unknown_keys(j,
                        {"datasets", "algorithms", "lambda_grid", "gamma", "eta", "iterations",
                         "stride", "epsilon_zero", "root_policy", "scale_threshold_by_step",
                         "threads", "output_dir"},
                        path);

    if (j.contains("datasets")) {
      config.datasets.clear();
      std::size_t position = 0;
      for (const json& entry : j.at("datasets"))
        config.datasets.push_back(dataset_from_json(entry, position++));
    }
    if (j.contains("algorithms")) {
      config.algorithms.clear();
      for (const json& name : j.at("algorithms"))
        config.algorithms.push_back(algorithm_from_name(name.get<std::string>()));
    }
    if (j.contains("lambda_grid"))
      config.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    config.gamma = j.value("gamma", config.gamma);
    config.eta = j.value("eta", config.eta);
    config.iterations = j.value("iterations", config.iterations);
    config.stride = j.value("stride", config.stride);
    config.epsilon_zero = j.value("epsilon_zero", config.epsilon_zero);
    if (j.contains("root_policy")) {
      const std::string policy = j.at("root_policy").get<std::string>();
      if (policy == "objective_min")
        config.root_policy = RootPolicy::ObjectiveMin;
      else if (policy == "largest_abs")
        config.root_policy = RootPolicy::PaperLargestAbs;
      else
        throw std::invalid_argument(path +
                                    ": root_policy must be 'objective_min' or 'largest_abs'");
    }
    config.scale_threshold_by_step =
        j.value("scale_threshold_by_step", config.scale_threshold_by_step);
    config.threads = j.value("threads", config.threads);
    config.output_dir = j.value("output_dir", config.output_dir);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return config;
}

void write_metadata(const ExperimentConfig& config, const std::string& output_dir) {
  const fs::path dir = ensure_directory(output_dir);
  json j;
  j["version"] = version_string;
  j["conventions"] = {
      {"gradient_factor", 2.0},
      {"shrink_scaling", config.scale_threshold_by_step ? "textbook_prox" : "literal"},
      {"epsilon_zero", config.epsilon_zero},
      {"peak", 1.0},
      {"patch_vectorization", "row_major"},
      {"patch_reduction", "incremental_mean_fixed_order"},
      {"dictionary", "overcomplete_dct_64x144"},
      {"batch_block_columns", kBatchBlock},
      {"cost_weights", {{"soft", "2*tau"}, {"hard", "tau^2"}, {"cauchy", "no lambda factor"}}},
      {"mnist_sampler", "splitmix64-seeded xorshift64* partial Fisher-Yates"},
  };
  j["config"] = json::parse(config_to_json(config));

  const fs::path path = dir / "metadata.json";
  std::ofstream out = create_output(path);
  out << j.dump(2) << '\n';
  finish_output(out, path);
}

}  // namespace ict
