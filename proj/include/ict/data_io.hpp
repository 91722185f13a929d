#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ict/patches.hpp"
#include "ict/types.hpp"

namespace ict {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// File missing, unreadable, or unwritable.
struct FileAccessError : IoError {
  using IoError::IoError;
};
// Magic number names a format this reader does not handle.
struct UnsupportedFormatError : IoError {
  using IoError::IoError;
};
// Header present but unparseable or self-contradictory.
struct MalformedHeaderError : IoError {
  using IoError::IoError;
};
// Header promises more payload than the file holds.
struct TruncatedPayloadError : IoError {
  using IoError::IoError;
};

// The classic phantom ships with two intensity tables: the original
// Shepp-Logan values (head ellipse 2.0, ventricles -0.98) and the
// high-contrast table common in imaging toolboxes. Geometry is identical.
enum class PhantomVariant { Original, Modified };

enum class DatasetKind { Pgm, Mnist, SheppLogan };

struct DatasetSpec {
  DatasetKind kind{DatasetKind::SheppLogan};
  std::string name;         // reporting label; derived from kind/path when empty
  std::string path;         // PGM file, or MNIST images file
  std::string labels_path;  // MNIST labels file
  int sample_count{0};      // MNIST subsample size
  std::uint64_t rng_seed{1};
  int phantom_size{64};
  PhantomVariant phantom_variant{PhantomVariant::Modified};
};

// Reads a binary (P5) or ASCII (P2) PGM with maxval up to 65535 and
// returns pixels divided by maxval, so values live in [0, 1] and peak is 1.
Image<double> load_pgm(const std::string& path);

// Writes binary P5, quantizing by round(p * maxval); samples above 255 use
// two big-endian bytes per the format. Pixels must already be in [0, 1].
void save_pgm(const Image<double>& image, const std::string& path, int maxval = 255);

// Decodes IDX-format MNIST rasters (magic 0x803) with their label file
// (magic 0x801) and returns sample_count images drawn without replacement
// by a seeded generator; byte values are divided by 255.
std::vector<Image<double>> load_mnist(const std::string& images_path,
                                      const std::string& labels_path, int sample_count,
                                      std::uint64_t rng_seed);

// Renders the 10-ellipse Shepp-Logan phantom on a size x size grid spanning
// [-1, 1]^2 (endpoints included, row 0 at y = +1), summing the intensities
// of every ellipse containing each point and clamping the result to [0, 1].
Image<double> generate_shepp_logan(int size, PhantomVariant variant = PhantomVariant::Modified);

// One line per matrix row, comma separated, 17 significant digits so the
// values round-trip to the exact same doubles.
void save_csv_matrix(const MatrixX<double>& matrix, const std::string& path);

// Dispatches on spec.kind; PGM and SheppLogan yield a single image.
std::vector<Image<double>> load_dataset(const DatasetSpec& spec);

// spec.name when set, else "shepp_logan", "mnist", or the PGM filename stem.
std::string dataset_label(const DatasetSpec& spec);

namespace detail {

// xorshift64* seeded through one splitmix64 step. Fixed here (rather than
// using <random>) so the MNIST subsample is reproducible across standard
// libraries; the algorithm is part of the output contract.
struct SampleRng {
  std::uint64_t state;

  explicit SampleRng(std::uint64_t seed);
  std::uint64_t next();
  // Modulo reduction; bias is negligible for the item counts involved and
  // bit-stable reproducibility is what matters here.
  std::uint64_t below(std::uint64_t bound);
};

// Partial Fisher-Yates: the first `count` entries of the shuffled index
// range, in selection order.
std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count,
                                                    std::uint64_t seed);

}  // namespace detail

}  // namespace ict
