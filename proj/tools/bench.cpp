#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ict/experiment.hpp"
#include "ict/svg.hpp"
#include "ict/version.hpp"

namespace {

void run_sweep(const std::string& config_path, const ict::ExperimentConfig& config) {
  ict::validate(config);
  std::printf("config: %s\n", config_path.c_str());
  std::printf("datasets: %zu  algorithms: %zu  lambda grid: %zu  threads: %d\n",
              config.datasets.size(), config.algorithms.size(), config.lambda_grid.size(),
              config.threads);

  const ict::SweepResult result = ict::run_experiment(config);
  std::size_t failed = 0;
  for (const ict::SweepCell& cell : result.cells) failed += cell.failed ? 1 : 0;
  std::printf("cells: %zu (%zu diverged)\n", result.cells.size(), failed);

  ict::emit_tables(result, config.output_dir);
  for (const char* name : {"sweep_full.csv", "best_psnr.csv", "sparsest.csv"})
    std::printf("wrote %s/%s\n", config.output_dir.c_str(), name);
  std::vector<std::string> labels;
  for (const ict::SweepCell& cell : result.cells)
    if (labels.empty() || labels.back() != cell.record.dataset)
      labels.push_back(cell.record.dataset);
  for (const std::string& label : labels)
    std::printf("wrote %s/curves/%s.csv\n", config.output_dir.c_str(),
                ict::detail::sanitize_filename(label).c_str());
  const std::vector<std::string> plots = ict::emit_plots(result, config.output_dir);
  if (plots.empty())
    std::printf("no plots written: the sweep produced no cells\n");
  else
    for (const std::string& path : plots) std::printf("wrote %s\n", path.c_str());
  ict::write_metadata(config, config.output_dir);
  std::printf("wrote %s/metadata.json\n", config.output_dir.c_str());

  for (const ict::MetricsRecord& r : result.best_psnr)
    std::printf("best   %-12s %-3s lambda %-12g psnr %7.2f dB  nonzero %6.2f%%\n",
                r.dataset.c_str(), r.algorithm.c_str(), r.lambda, r.psnr_db,
                r.percent_nonzero);
  for (const ict::MetricsRecord& r : result.sparsest)
    std::printf("sparse %-12s %-3s lambda %-12g psnr %7.2f dB  nonzero %6.2f%%\n",
                r.dataset.c_str(), r.algorithm.c_str(), r.lambda, r.psnr_db,
                r.percent_nonzero);
}

void write_operator_chart(double lambda, double gamma, const std::string& out) {
  const ict::CauchyPenalty<double> penalty{lambda, gamma};
  ict::SvgSeries hard{"hard (IHT)", {}, {}};
  ict::SvgSeries cauchy{"Cauchy (ICT)", {}, {}};
  ict::SvgSeries soft{"soft (IST)", {}, {}};
  double disagree_lo = 0, disagree_hi = 0;
  std::size_t disagreements = 0;
  for (int k = 0; k <= 400; ++k) {
    const double x = -5.0 + 0.025 * double(k);
    hard.x.push_back(x);
    hard.y.push_back(ict::hard_threshold(x, lambda));
    cauchy.x.push_back(x);
    cauchy.y.push_back(ict::cauchy_shrink(x, penalty, ict::RootPolicy::PaperLargestAbs));
    soft.x.push_back(x);
    soft.y.push_back(ict::soft_threshold(x, lambda));
    if (!ict::root_policies_agree(x, penalty)) {
      if (disagreements == 0) disagree_lo = x;
      disagree_hi = x;
      ++disagreements;
    }
  }
  char title[128];
  std::snprintf(title, sizeof title, "Shrinkage operators (lambda = %g, gamma = %g)", lambda,
                gamma);
  ict::write_svg_chart(out, title, "input x", "operator output", {hard, cauchy, soft});
  std::printf("wrote %s\n", out.c_str());
  if (disagreements == 0)
    std::printf("root policies agree at all sampled points\n");
  else
    std::printf("root policies disagree at %zu of 401 sampled points (x in [%g, %g])\n",
                disagreements, disagree_lo, disagree_hi);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-coding benchmark: hard, soft, and Cauchy shrinkage"};
  app.set_version_flag("--version", std::string(ict::version_string));
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Run a lambda sweep from a JSON config");
  std::string config_path;
  run->add_option("--config", config_path, "JSON experiment config")->required();
  int threads = 1, iterations = 0, stride = 0;
  std::string output_dir, root_policy;
  std::vector<std::string> algorithms;
  std::vector<double> lambda_grid;
  double gamma = 0, eta = 0, epsilon_zero = 0;
  bool scale_threshold = false;
  run->add_option("--threads", threads, "Worker threads for patch coding");
  run->add_option("--output", output_dir, "Output directory");
  run->add_option("--algorithms", algorithms, "Subset of IHT IST ICT");
  run->add_option("--lambda_grid", lambda_grid, "Sweep values");
  run->add_option("--gamma", gamma, "Cauchy scale");
  run->add_option("--eta", eta, "Gradient step size");
  run->add_option("--iterations", iterations, "Iteration budget per coding");
  run->add_option("--stride", stride, "Patch stride");
  run->add_option("--epsilon_zero", epsilon_zero, "Zero-detection tolerance");
  run->add_option("--root_policy", root_policy, "objective_min or largest_abs");
  run->add_flag("--scale_threshold_by_step", scale_threshold,
                "Scale shrinkage thresholds by the step size");

  CLI::App* operators = app.add_subcommand("operators", "Plot the three shrinkage operators");
  double op_lambda = 1.0, op_gamma = 0.001;
  std::string op_out = "operators.svg";
  operators->add_option("--lambda", op_lambda, "Threshold weight");
  operators->add_option("--gamma", op_gamma, "Cauchy scale");
  operators->add_option("--out", op_out, "SVG output path");

  CLI::App* phantom = app.add_subcommand("phantom", "Write a Shepp-Logan phantom as PGM");
  int phantom_size = 64;
  std::string phantom_out = "phantom.pgm", phantom_variant = "modified";
  phantom->add_option("--size", phantom_size, "Image edge length");
  phantom->add_option("--out", phantom_out, "PGM output path");
  phantom->add_option("--variant", phantom_variant, "original or modified")
      ->check(CLI::IsMember({"original", "modified"}));

  CLI::App* dict = app.add_subcommand("dict", "Write the DCT dictionary atoms as CSV");
  std::string dict_out = "dictionary.csv";
  dict->add_option("--out", dict_out, "CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ict::ExperimentConfig config = ict::load_config_json(config_path);
      if (run->count("--threads")) config.threads = threads;
      if (run->count("--output")) config.output_dir = output_dir;
      if (run->count("--algorithms")) {
        config.algorithms.clear();
        for (const std::string& name : algorithms)
          config.algorithms.push_back(ict::algorithm_from_name(name));
      }
      if (run->count("--lambda_grid")) config.lambda_grid = lambda_grid;
      if (run->count("--gamma")) config.gamma = gamma;
      if (run->count("--eta")) config.eta = eta;
      if (run->count("--iterations")) config.iterations = iterations;
      if (run->count("--stride")) config.stride = stride;
      if (run->count("--epsilon_zero")) config.epsilon_zero = epsilon_zero;
      if (run->count("--root_policy")) {
        if (root_policy == "objective_min")
          config.root_policy = ict::RootPolicy::ObjectiveMin;
        else if (root_policy == "largest_abs")
          config.root_policy = ict::RootPolicy::PaperLargestAbs;
        else
          throw std::invalid_argument("--root_policy must be objective_min or largest_abs");
      }
      if (run->count("--scale_threshold_by_step")) config.scale_threshold_by_step = true;
      run_sweep(config_path, config);
    } else if (operators->parsed()) {
      write_operator_chart(op_lambda, op_gamma, op_out);
    } else if (phantom->parsed()) {
      const ict::Image<double> image = ict::generate_shepp_logan(
          phantom_size, phantom_variant == "original" ? ict::PhantomVariant::Original
                                                      : ict::PhantomVariant::Modified);
      ict::save_pgm(image, phantom_out);
      std::printf("wrote %s (%dx%d)\n", phantom_out.c_str(), phantom_size, phantom_size);
    } else if (dict->parsed()) {
      const ict::Dictionary<double> dictionary = ict::build_overcomplete_dct<double>(8, 12);
      ict::save_csv_matrix(dictionary.atoms, dict_out);
      std::printf("wrote %s (%ldx%ld atoms matrix)\n", dict_out.c_str(),
                  long(dictionary.signal_size()), long(dictionary.atom_count()));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
