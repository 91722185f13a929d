#include "ict/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ict/patches.hpp"
#include "ict/svg.hpp"
#include "ict/version.hpp"
#include "json.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace ict;

namespace {

fs::path test_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "ict_experiment_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::size_t count_substring(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t at = text.find(needle); at != std::string::npos;
       at = text.find(needle, at + needle.size()))
    ++count;
  return count;
}

Dictionary<double> random_dictionary(int rows, int cols, unsigned long long seed) {
  oracle::TestRng rng(seed);
  Dictionary<double> dictionary;
  dictionary.atoms.resize(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) dictionary.atoms(i, j) = rng.uniform(-1.0, 1.0);
    dictionary.atoms.col(j).normalize();
  }
  return dictionary;
}

// An 8x8 image that is exactly the dictionary's constant atom: all pixels
// 1/8^2 give the unit-norm DC column of the 64x144 DCT. The maxval keeps
// the PGM quantization exact (0.125 * 1000 = 125).
fs::path write_dc_atom_pgm() {
  static const fs::path path = [] {
    Image<double> image;
    image.pixels = MatrixX<double>::Constant(8, 8, 0.125);
    const fs::path p = test_dir() / "dc_atom.pgm";
    save_pgm(image, p.string(), 1000);
    return p;
  }();
  return path;
}

ExperimentConfig phantom_config() {
  ExperimentConfig config;
  DatasetSpec spec;
  spec.kind = DatasetKind::SheppLogan;
  spec.phantom_size = 16;
  config.datasets = {spec};
  config.lambda_grid = {0.001, 0.1, 1.0};
  config.eta = 0.01;
  config.iterations = 80;
  config.stride = 2;
  return config;
}

SweepCell make_cell(const char* dataset, const char* algorithm, double lambda, double psnr_db,
                    double pnz, bool failed = false) {
  SweepCell cell;
  cell.record.dataset = dataset;
  cell.record.algorithm = algorithm;
  cell.record.lambda = lambda;
  cell.record.psnr_db = psnr_db;
  cell.record.mse = 0.25;
  cell.record.percent_nonzero = pnz;
  cell.record.iterations = 50;
  cell.failed = failed;
  return cell;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("default lambda grid spans 1e-4 to 10 logarithmically") {
    const std::vector<double> grid = default_lambda_grid();
    REQUIRE(grid.size() == 16);
    CHECK(grid.front() == doctest::Approx(1e-4).epsilon(1e-14));
    CHECK(grid[12] == 1.0);
    CHECK(grid.back() == 10.0);
    const double ratio = std::pow(10.0, 1.0 / 3.0);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      CHECK(grid[k] < grid[k + 1]);
      CHECK(grid[k + 1] / grid[k] == doctest::Approx(ratio).epsilon(1e-12));
    }
  }

  TEST_CASE("algorithm names round-trip and reject unknowns") {
    for (const Algorithm algorithm : {Algorithm::Iht, Algorithm::Ist, Algorithm::Ict})
      CHECK(algorithm_from_name(algorithm_name(algorithm)) == algorithm);
    CHECK(algorithm_name(Algorithm::Iht) == "IHT");
    CHECK(algorithm_name(Algorithm::Ist) == "IST");
    CHECK(algorithm_name(Algorithm::Ict) == "ICT");
    CHECK_THROWS_AS(algorithm_from_name("iht"), std::invalid_argument);
    CHECK_THROWS_AS(algorithm_from_name(""), std::invalid_argument);
  }

  TEST_CASE("config validation rejects bad fields") {
    CHECK_THROWS_AS(validate(ExperimentConfig{}), std::invalid_argument);

    const ExperimentConfig good = phantom_config();
    CHECK_NOTHROW(validate(good));

    const auto rejects = [&](auto mutate) {
      ExperimentConfig bad = good;
      mutate(bad);
      CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    };
    rejects([](ExperimentConfig& c) { c.algorithms.clear(); });
    rejects([](ExperimentConfig& c) { c.lambda_grid.clear(); });
    rejects([](ExperimentConfig& c) { c.lambda_grid = {0.1, 0.0}; });
    rejects([](ExperimentConfig& c) { c.lambda_grid = {-1.0}; });
    rejects([](ExperimentConfig& c) { c.gamma = 0.0; });
    rejects([](ExperimentConfig& c) { c.eta = -0.005; });
    rejects([](ExperimentConfig& c) { c.iterations = 0; });
    rejects([](ExperimentConfig& c) { c.stride = 0; });
    rejects([](ExperimentConfig& c) { c.stride = 9; });
    rejects([](ExperimentConfig& c) { c.epsilon_zero = -1e-6; });
    rejects([](ExperimentConfig& c) { c.threads = 0; });
    rejects([](ExperimentConfig& c) { c.output_dir.clear(); });
    rejects([](ExperimentConfig& c) { c.datasets[0].phantom_size = 8; });
    rejects([](ExperimentConfig& c) { c.datasets[0] = DatasetSpec{DatasetKind::Pgm}; });
    rejects([](ExperimentConfig& c) {
      c.datasets[0] = DatasetSpec{DatasetKind::Mnist, "", "images.idx"};
    });
    rejects([](ExperimentConfig& c) {
      c.datasets[0] = DatasetSpec{DatasetKind::Mnist, "", "images.idx", "labels.idx", 0};
    });
  }

  TEST_CASE("penalty_for maps each algorithm onto its operator") {
    ExperimentConfig config = phantom_config();
    config.gamma = 0.25;
    config.root_policy = RootPolicy::PaperLargestAbs;

    const Penalty<double> hard = detail::penalty_for(Algorithm::Iht, 0.7, config);
    REQUIRE(std::holds_alternative<penalties::Hard<double>>(hard));
    CHECK(std::get<penalties::Hard<double>>(hard).tau == 0.7);

    const Penalty<double> soft = detail::penalty_for(Algorithm::Ist, 0.7, config);
    REQUIRE(std::holds_alternative<penalties::Soft<double>>(soft));
    CHECK(std::get<penalties::Soft<double>>(soft).tau == 0.7);

    const Penalty<double> cauchy = detail::penalty_for(Algorithm::Ict, 0.7, config);
    REQUIRE(std::holds_alternative<penalties::Cauchy<double>>(cauchy));
    const auto& c = std::get<penalties::Cauchy<double>>(cauchy);
    CHECK(c.params.lambda == 0.7);
    CHECK(c.params.gamma == 0.25);
    CHECK(c.policy == RootPolicy::PaperLargestAbs);
  }

  TEST_CASE("threaded batch coding is bitwise independent of the worker count") {
    const Dictionary<double> dictionary = random_dictionary(8, 12, 77);
    oracle::TestRng rng(78);
    MatrixX<double> columns(8, 573);
    for (Index j = 0; j < columns.cols(); ++j)
      for (Index i = 0; i < columns.rows(); ++i) columns(i, j) = rng.uniform(-1.0, 1.0);

    SolverConfig<double> solver;
    solver.step_size = 0.02;
    solver.max_iterations = 20;
    const Penalty<double> penalty = penalties::Soft<double>{0.05};

    const MatrixX<double> reference = sparse_code_batch(columns, dictionary, penalty, solver);
    for (const int threads : {1, 2, 3}) {
      const MatrixX<double> coded =
          detail::threaded_batch_code(columns, dictionary, penalty, solver, threads);
      REQUIRE(coded.rows() == reference.rows());
      REQUIRE(coded.cols() == reference.cols());
      CHECK((coded.array() == reference.array()).all());
    }

    CHECK_THROWS_AS(detail::threaded_batch_code(columns, dictionary, penalty, solver, 0),
                    std::invalid_argument);

    SolverConfig<double> exploding = solver;
    exploding.step_size = 1e9;
    exploding.max_iterations = 60;
    CHECK_THROWS_AS(detail::threaded_batch_code(columns, dictionary, penalty, exploding, 2),
                    DivergenceError);
  }

  TEST_CASE("single-atom image reconstructs above 40 dB") {
    ExperimentConfig config;
    DatasetSpec spec;
    spec.kind = DatasetKind::Pgm;
    spec.path = write_dc_atom_pgm().string();
    spec.name = "dc_atom";
    config.datasets = {spec};
    config.algorithms = {Algorithm::Ist};
    config.lambda_grid = {1e-8};
    config.iterations = 600;

    const SweepResult result = run_experiment(config);
    REQUIRE(result.cells.size() == 1);
    const SweepCell& cell = result.cells[0];
    CHECK_FALSE(cell.failed);
    CHECK(cell.record.dataset == "dc_atom");
    CHECK(cell.record.algorithm == "IST");
    CHECK(cell.record.lambda == 1e-8);
    CHECK(cell.record.iterations == 600);
    CHECK(cell.record.psnr_db > 40.0);
    CHECK(cell.record.psnr_db < psnr_cap_db);
    CHECK(cell.record.percent_nonzero == doctest::Approx(100.0 / 144.0).epsilon(1e-12));
    REQUIRE(result.best_psnr.size() == 1);
    REQUIRE(result.sparsest.size() == 1);
    CHECK(result.best_psnr[0].psnr_db == cell.record.psnr_db);
    CHECK(result.sparsest[0].percent_nonzero == cell.record.percent_nonzero);
  }

  TEST_CASE("phantom sweep orders cells and keeps selections consistent") {
    const ExperimentConfig config = phantom_config();
    const SweepResult result = run_experiment(config);
    REQUIRE(result.cells.size() == 9);

    for (std::size_t i = 0; i < result.cells.size(); ++i) {
      const MetricsRecord& r = result.cells[i].record;
      CHECK_FALSE(result.cells[i].failed);
      CHECK(r.dataset == "shepp_logan");
      CHECK(r.algorithm == algorithm_name(config.algorithms[i / 3]));
      CHECK(r.lambda == config.lambda_grid[i % 3]);
      CHECK(r.psnr_db > 0.0);
      CHECK(r.mse >= 0.0);
      CHECK(r.percent_nonzero >= 0.0);
      CHECK(r.percent_nonzero <= 100.0);
    }

    REQUIRE(result.best_psnr.size() == 3);
    REQUIRE(result.sparsest.size() == 3);
    for (std::size_t group = 0; group < 3; ++group) {
      double max_psnr = 0.0, min_active_pnz = 101.0;
      bool any_active = false;
      for (std::size_t i = 3 * group; i < 3 * group + 3; ++i) {
        max_psnr = std::max(max_psnr, result.cells[i].record.psnr_db);
        if (result.cells[i].record.percent_nonzero > 0) {
          any_active = true;
          min_active_pnz = std::min(min_active_pnz, result.cells[i].record.percent_nonzero);
        }
      }
      CHECK(result.best_psnr[group].psnr_db == max_psnr);
      CHECK(result.best_psnr[group].algorithm == algorithm_name(config.algorithms[group]));
      if (any_active) CHECK(result.sparsest[group].percent_nonzero == min_active_pnz);
    }
  }

  TEST_CASE("diverging cells are marked failed and skipped by selections") {
    ExperimentConfig config;
    DatasetSpec spec;
    spec.kind = DatasetKind::Pgm;
    spec.path = write_dc_atom_pgm().string();
    config.datasets = {spec};
    config.algorithms = {Algorithm::Iht};
    config.lambda_grid = {1e-4, 1e6};
    config.eta = 1000.0;
    config.iterations = 120;

    const SweepResult result = run_experiment(config);
    REQUIRE(result.cells.size() == 2);
    CHECK(result.cells[0].failed);
    CHECK_FALSE(result.cells[1].failed);
    CHECK(result.cells[1].record.percent_nonzero == 0.0);
    REQUIRE(result.best_psnr.size() == 1);
    REQUIRE(result.sparsest.size() == 1);
    CHECK(result.best_psnr[0].lambda == 1e6);
    CHECK(result.sparsest[0].lambda == 1e6);

    const fs::path dir = test_dir() / "mixed";
    emit_tables(result, dir.string());
    const std::string full = read_file(dir / "sweep_full.csv");
    CHECK(count_substring(full, ",diverged\n") == 1);
    CHECK(count_substring(full, ",ok\n") == 1);
    CHECK(full.find("dc_atom,IHT,0.0001") != std::string::npos);
    CHECK(count_substring(read_file(dir / "best_psnr.csv"), "\n") == 2);
    const std::string curves = read_file(dir / "curves" / "dc_atom.csv");
    CHECK(count_substring(curves, "\n") == 2);
    CHECK(curves.find("IHT,0,") != std::string::npos);
  }

  TEST_CASE("tables match a frozen golden byte for byte") {
    SweepResult result;
    result.cells = {
        make_cell("toy", "IHT", 0.5, 30.0, 12.5),
        make_cell("toy", "IHT", 2.0, 0.0, 0.0, true),
        make_cell("toy", "IST", 0.5, 28.25, 6.25),
    };
    result.best_psnr = {result.cells[0].record, result.cells[2].record};
    result.sparsest = {result.cells[0].record, result.cells[2].record};

    const fs::path dir_a = test_dir() / "golden_a";
    const fs::path dir_b = test_dir() / "golden_b";
    emit_tables(result, dir_a.string());
    emit_tables(result, dir_b.string());

    const std::string full = read_file(dir_a / "sweep_full.csv");
    CHECK(full ==
          "dataset,algorithm,lambda,psnr_db,mse,percent_nonzero,iterations,status\n"
          "toy,IHT,0.5,30,0.25,12.5,50,ok\n"
          "toy,IHT,2,,,,50,diverged\n"
          "toy,IST,0.5,28.25,0.25,6.25,50,ok\n");
    const std::string best = read_file(dir_a / "best_psnr.csv");
    CHECK(best ==
          "dataset,algorithm,lambda,psnr_db,percent_nonzero,iterations\n"
          "toy,IHT,0.5,30,12.5,50\n"
          "toy,IST,0.5,28.25,6.25,50\n");
    CHECK(read_file(dir_a / "curves" / "toy.csv") ==
          "algorithm,percent_nonzero,psnr_db\n"
          "IHT,12.5,30\n"
          "IST,6.25,28.25\n");

    for (const char* name : {"sweep_full.csv", "best_psnr.csv", "sparsest.csv"})
      CHECK(read_file(dir_a / name) == read_file(dir_b / name));
    CHECK(read_file(dir_a / "curves" / "toy.csv") == read_file(dir_b / "curves" / "toy.csv"));

    CHECK_THROWS_AS(emit_tables(SweepResult{}, (test_dir() / "none").string()),
                    std::invalid_argument);
  }

  TEST_CASE("plots hold one polyline per series") {
    SweepResult result;
    result.cells = {
        make_cell("toy", "ICT", 0.5, 30.0, 12.5),
        make_cell("toy", "ICT", 1.0, 24.0, 6.0),
        make_cell("toy", "ICT", 2.0, 18.0, 3.0),
    };
    const fs::path dir = test_dir() / "plots_one";
    const std::vector<std::string> written = emit_plots(result, dir.string());
    REQUIRE(written.size() == 2);
    CHECK(count_substring(read_file(written[0]), "<polyline") == 1);
    CHECK(count_substring(read_file(written[1]), "<polyline") == 3);
    CHECK(read_file(written[1]).find("Cauchy") != std::string::npos);

    const fs::path empty_dir = test_dir() / "plots_empty";
    CHECK(emit_plots(SweepResult{}, empty_dir.string()).empty());
    CHECK_FALSE(fs::exists(empty_dir / "plots"));
  }

  TEST_CASE("svg writer validates series and escapes markup") {
    const SvgSeries line{"a < b & c", {0.0, 1.0, 2.0}, {1.0, 4.0, 2.0}};
    const fs::path path = test_dir() / "chart.svg";
    write_svg_chart(path.string(), "tension & release", "time <s>", "value", {line});
    const std::string svg = read_file(path);
    CHECK(svg.find("tension &amp; release") != std::string::npos);
    CHECK(svg.find("time &lt;s&gt;") != std::string::npos);
    CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
    CHECK(count_substring(svg, "<polyline") == 1);

    const fs::path again = test_dir() / "chart_again.svg";
    write_svg_chart(again.string(), "tension & release", "time <s>", "value", {line});
    CHECK(read_file(again) == svg);

    const fs::path flat = test_dir() / "flat.svg";
    write_svg_chart(flat.string(), "flat", "x", "y", {SvgSeries{"p", {1.0}, {2.0}}});
    CHECK(count_substring(read_file(flat), "<polyline") == 1);

    const std::string out = (test_dir() / "bad.svg").string();
    CHECK_THROWS_AS(write_svg_chart(out, "t", "x", "y", {}), std::invalid_argument);
    CHECK_THROWS_AS(write_svg_chart(out, "t", "x", "y", {SvgSeries{"r", {1.0, 2.0}, {1.0}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(write_svg_chart(out, "t", "x", "y", {SvgSeries{"e", {}, {}}}),
                    std::invalid_argument);
    const double nan = std::nan("");
    CHECK_THROWS_AS(write_svg_chart(out, "t", "x", "y", {SvgSeries{"n", {nan}, {1.0}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        write_svg_chart((test_dir() / "no_dir" / "chart.svg").string(), "t", "x", "y", {line}),
        FileAccessError);
  }

  TEST_CASE("config json round-trips every field") {
    ExperimentConfig config;
    DatasetSpec phantom;
    phantom.kind = DatasetKind::SheppLogan;
    phantom.name = "brain";
    phantom.phantom_size = 32;
    phantom.phantom_variant = PhantomVariant::Original;
    DatasetSpec pgm;
    pgm.kind = DatasetKind::Pgm;
    pgm.path = "images/lena.pgm";
    DatasetSpec mnist;
    mnist.kind = DatasetKind::Mnist;
    mnist.path = "mnist/images.idx3";
    mnist.labels_path = "mnist/labels.idx1";
    mnist.sample_count = 250;
    mnist.rng_seed = 99;
    config.datasets = {phantom, pgm, mnist};
    config.algorithms = {Algorithm::Ict, Algorithm::Iht};
    config.lambda_grid = {0.25, 0.5};
    config.gamma = 0.05;
    config.eta = 0.007;
    config.iterations = 321;
    config.stride = 4;
    config.epsilon_zero = 1e-5;
    config.root_policy = RootPolicy::PaperLargestAbs;
    config.scale_threshold_by_step = true;
    config.threads = 5;
    config.output_dir = "out/run1";

    const fs::path path = test_dir() / "config.json";
    std::ofstream(path, std::ios::binary) << config_to_json(config);
    const ExperimentConfig loaded = load_config_json(path.string());

    REQUIRE(loaded.datasets.size() == 3);
    CHECK(loaded.datasets[0].kind == DatasetKind::SheppLogan);
    CHECK(loaded.datasets[0].name == "brain");
    CHECK(loaded.datasets[0].phantom_size == 32);
    CHECK(loaded.datasets[0].phantom_variant == PhantomVariant::Original);
    CHECK(loaded.datasets[1].kind == DatasetKind::Pgm);
    CHECK(loaded.datasets[1].path == "images/lena.pgm");
    CHECK(loaded.datasets[2].kind == DatasetKind::Mnist);
    CHECK(loaded.datasets[2].path == "mnist/images.idx3");
    CHECK(loaded.datasets[2].labels_path == "mnist/labels.idx1");
    CHECK(loaded.datasets[2].sample_count == 250);
    CHECK(loaded.datasets[2].rng_seed == 99);
    REQUIRE(loaded.algorithms.size() == 2);
    CHECK(loaded.algorithms[0] == Algorithm::Ict);
    CHECK(loaded.algorithms[1] == Algorithm::Iht);
    CHECK(loaded.lambda_grid == config.lambda_grid);
    CHECK(loaded.gamma == config.gamma);
    CHECK(loaded.eta == config.eta);
    CHECK(loaded.iterations == config.iterations);
    CHECK(loaded.stride == config.stride);
    CHECK(loaded.epsilon_zero == config.epsilon_zero);
    CHECK(loaded.root_policy == RootPolicy::PaperLargestAbs);
    CHECK(loaded.scale_threshold_by_step == true);
    CHECK(loaded.threads == 5);
    CHECK(loaded.output_dir == "out/run1");
  }

  TEST_CASE("config json keeps defaults and rejects malformed input") {
    const auto write_config = [](const char* name, const std::string& text) {
      const fs::path path = test_dir() / name;
      std::ofstream(path, std::ios::binary) << text;
      return path.string();
    };

    const ExperimentConfig minimal =
        load_config_json(write_config("minimal.json", R"({"datasets": [{"kind": "pgm",
            "path": "a.pgm"}]})"));
    CHECK(minimal.algorithms.size() == 3);
    CHECK(minimal.lambda_grid.size() == 16);
    CHECK(minimal.gamma == 0.1);
    CHECK(minimal.eta == 0.005);
    CHECK(minimal.iterations == 200);
    CHECK(minimal.root_policy == RootPolicy::ObjectiveMin);

    CHECK_THROWS_AS(load_config_json((test_dir() / "absent.json").string()), FileAccessError);
    CHECK_THROWS_AS(load_config_json(write_config("broken.json", "{not json")),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_config_json(write_config("array.json", "[1, 2]")),
                    std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        load_config_json(write_config("unknown.json", R"({"datasets": [], "lambda": 3})")),
        doctest::Contains("lambda"), std::invalid_argument);
    CHECK_THROWS_AS(load_config_json(write_config(
                        "unknown_ds.json", R"({"datasets": [{"kind": "pgm", "pth": "x"}]})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_config_json(write_config(
                        "bad_kind.json", R"({"datasets": [{"kind": "penguins"}]})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        load_config_json(write_config(
            "bad_variant.json",
            R"({"datasets": [{"kind": "shepp_logan", "variant": "remixed"}]})")),
        std::invalid_argument);
    CHECK_THROWS_AS(load_config_json(write_config(
                        "bad_algo.json", R"({"datasets": [], "algorithms": ["FISTA"]})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_config_json(write_config(
                        "bad_policy.json", R"({"datasets": [], "root_policy": "random"})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_config_json(write_config(
                        "bad_type.json", R"({"datasets": [], "eta": "fast"})")),
                    std::invalid_argument);
  }

  TEST_CASE("metadata records conventions and the resolved config") {
    ExperimentConfig config = phantom_config();
    const fs::path dir = test_dir() / "meta_literal";
    write_metadata(config, dir.string());
    const nlohmann::json meta = nlohmann::json::parse(read_file(dir / "metadata.json"));
    CHECK(meta.at("version").get<std::string>() == version_string);
    const nlohmann::json& conventions = meta.at("conventions");
    CHECK(conventions.at("gradient_factor").get<double>() == 2.0);
    CHECK(conventions.at("shrink_scaling").get<std::string>() == "literal");
    CHECK(conventions.at("epsilon_zero").get<double>() == config.epsilon_zero);
    CHECK(conventions.at("peak").get<double>() == 1.0);
    CHECK(meta.at("config") == nlohmann::json::parse(config_to_json(config)));

    config.scale_threshold_by_step = true;
    const fs::path scaled_dir = test_dir() / "meta_scaled";
    write_metadata(config, scaled_dir.string());
    const nlohmann::json scaled = nlohmann::json::parse(read_file(scaled_dir / "metadata.json"));
    CHECK(scaled.at("conventions").at("shrink_scaling").get<std::string>() == "textbook_prox");
  }
}
