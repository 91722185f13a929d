#include "ict/data_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ict {

namespace {

[[noreturn]] void throw_access(const std::string& path, const char* action) {
  throw FileAccessError(path + ": cannot " + action + " file");
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_access(path, "open");
  return in;
}

// Skips whitespace and '#' comments, then extracts one decimal field.
long long next_header_value(std::istream& in, const std::string& path, const char* field) {
  for (;;) {
    const int ch = in.peek();
    if (ch == EOF) throw MalformedHeaderError(path + ": header ends before " + field);
    if (ch == '#') {
      in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
      continue;
    }
    if (std::isspace(ch)) {
      in.get();
      continue;
    }
    break;
  }
  long long value = 0;
  if (!(in >> value)) throw MalformedHeaderError(path + ": unreadable " + std::string(field));
  return value;
}

std::uint32_t read_be32(std::istream& in, const std::string& path, const char* field) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4))
    throw MalformedHeaderError(path + ": file ends inside header (" + field + ")");
  return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
         (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

std::vector<unsigned char> read_exact(std::istream& in, std::size_t count,
                                      const std::string& path, const char* what) {
  std::vector<unsigned char> bytes(count);
  in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(count));
  if (std::size_t(in.gcount()) != count)
    throw TruncatedPayloadError(path + ": " + what + " ends after " +
                                std::to_string(in.gcount()) + " of " + std::to_string(count) +
                                " bytes");
  return bytes;
}

struct Ellipse {
  double a, b, x0, y0, phi_deg, original, modified;
};

// Standard 10-ellipse table; the last two columns are the original and the
// high-contrast intensity values.
constexpr std::array<Ellipse, 10> kSheppLogan{{
    {0.6900, 0.9200, 0.00, 0.0000, 0.0, 2.00, 1.00},
    {0.6624, 0.8740, 0.00, -0.0184, 0.0, -0.98, -0.80},
    {0.1100, 0.3100, 0.22, 0.0000, -18.0, -0.02, -0.20},
    {0.1600, 0.4100, -0.22, 0.0000, 18.0, -0.02, -0.20},
    {0.2100, 0.2500, 0.00, 0.3500, 0.0, 0.01, 0.10},
    {0.0460, 0.0460, 0.00, 0.1000, 0.0, 0.01, 0.10},
    {0.0460, 0.0460, 0.00, -0.1000, 0.0, 0.01, 0.10},
    {0.0460, 0.0230, -0.08, -0.6050, 0.0, 0.01, 0.10},
    {0.0230, 0.0230, 0.00, -0.6060, 0.0, 0.01, 0.10},
    {0.0230, 0.0460, 0.06, -0.6050, 0.0, 0.01, 0.10},
}};

}  // namespace

Image<double> load_pgm(const std::string& path) {
  std::ifstream in = open_binary(path);

  char magic[2] = {0, 0};
  if (!in.read(magic, 2) || magic[0] != 'P')
    throw UnsupportedFormatError(path + ": not a PGM file");
  if (magic[1] != '2' && magic[1] != '5')
    throw UnsupportedFormatError(path + ": unsupported magic P" + std::string(1, magic[1]));
  const bool binary = magic[1] == '5';

  const long long width = next_header_value(in, path, "width");
  const long long height = next_header_value(in, path, "height");
  const long long maxval = next_header_value(in, path, "maxval");
  if (width < 1 || height < 1)
    throw MalformedHeaderError(path + ": non-positive dimensions " + std::to_string(width) +
                               "x" + std::to_string(height));
  if (maxval < 1 || maxval > 65535)
    throw MalformedHeaderError(path + ": maxval " + std::to_string(maxval) +
                               " outside [1, 65535]");

  Image<double> image;
  image.pixels.resize(height, width);
  const double scale = 1.0 / double(maxval);

  if (binary) {
    const int ch = in.get();
    if (ch == EOF || !std::isspace(ch))
      throw MalformedHeaderError(path + ": missing single whitespace after maxval");
    const std::size_t samples = std::size_t(width) * std::size_t(height);
    const int stride = maxval > 255 ? 2 : 1;
    const std::vector<unsigned char> bytes =
        read_exact(in, samples * std::size_t(stride), path, "pixel payload");
    for (long long r = 0; r < height; ++r)
      for (long long c = 0; c < width; ++c) {
        const std::size_t k = std::size_t(r * width + c) * std::size_t(stride);
        const long long v = stride == 2
                                ? (std::int64_t(bytes[k]) << 8) | std::int64_t(bytes[k + 1])
                                : std::int64_t(bytes[k]);
        if (v > maxval)
          throw IoError(path + ": sample " + std::to_string(v) + " exceeds maxval");
        image.pixels(r, c) = double(v) * scale;
      }
  } else {
    for (long long r = 0; r < height; ++r)
      for (long long c = 0; c < width; ++c) {
        long long v = 0;
        if (!(in >> v))
          throw TruncatedPayloadError(path + ": pixel payload ends before sample " +
                                      std::to_string(r * width + c) + " of " +
                                      std::to_string(width * height));
        if (v < 0 || v > maxval)
          throw IoError(path + ": sample " + std::to_string(v) + " outside [0, maxval]");
        image.pixels(r, c) = double(v) * scale;
      }
  }
  return image;
}

void save_pgm(const Image<double>& image, const std::string& path, int maxval) {
  if (maxval < 1 || maxval > 65535)
    throw std::invalid_argument("save_pgm: maxval must be in [1, 65535]");
  if (image.pixels.size() == 0) throw std::invalid_argument("save_pgm: empty image");
  if (!image.pixels.allFinite() || image.pixels.minCoeff() < 0.0 ||
      image.pixels.maxCoeff() > 1.0)
    throw std::invalid_argument("save_pgm: pixels must lie in [0, 1]");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw_access(path, "create");
  out << "P5\n" << image.cols() << ' ' << image.rows() << '\n' << maxval << '\n';
  for (Index r = 0; r < image.rows(); ++r)
    for (Index c = 0; c < image.cols(); ++c) {
      const long long q = std::llround(image.pixels(r, c) * double(maxval));
      if (maxval > 255) out.put(char((q >> 8) & 0xff));
      out.put(char(q & 0xff));
    }
  out.flush();
  if (!out) throw_access(path, "write");
}

namespace detail {

SampleRng::SampleRng(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  state = z ^ (z >> 31);
  if (state == 0) state = 0x9E3779B97F4A7C15ull;
}

std::uint64_t SampleRng::next() {
  state ^= state >> 12;
  state ^= state << 25;
  state ^= state >> 27;
  return state * 0x2545F4914F6CDD1Dull;
}

std::uint64_t SampleRng::below(std::uint64_t bound) { return next() % bound; }

std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count,
                                                    std::uint64_t seed) {
  if (count > population)
    throw std::invalid_argument("sample_without_replacement: count exceeds population");
  std::vector<std::size_t> indices(population);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  SampleRng rng(seed);
  for (std::size_t i = 0; i < count; ++i)
    std::swap(indices[i], indices[i + std::size_t(rng.below(population - i))]);
  indices.resize(count);
  return indices;
}

}  // namespace detail

std::vector<Image<double>> load_mnist(const std::string& images_path,
                                      const std::string& labels_path, int sample_count,
                                      std::uint64_t rng_seed) {
  if (sample_count < 0) throw std::invalid_argument("load_mnist: negative sample_count");

  std::ifstream images = open_binary(images_path);
  if (read_be32(images, images_path, "magic") != 0x00000803u)
    throw UnsupportedFormatError(images_path + ": not an IDX image file (magic != 0x803)");
  const std::uint32_t count = read_be32(images, images_path, "item count");
  const std::uint32_t rows = read_be32(images, images_path, "rows");
  const std::uint32_t cols = read_be32(images, images_path, "cols");
  if (rows == 0 || cols == 0)
    throw MalformedHeaderError(images_path + ": zero raster dimensions");
  const std::vector<unsigned char> pixels =
      read_exact(images, std::size_t(count) * rows * cols, images_path, "image payload");

  std::ifstream labels = open_binary(labels_path);
  if (read_be32(labels, labels_path, "magic") != 0x00000801u)
    throw UnsupportedFormatError(labels_path + ": not an IDX label file (magic != 0x801)");
  const std::uint32_t label_count = read_be32(labels, labels_path, "item count");
  if (label_count != count)
    throw MalformedHeaderError(labels_path + ": " + std::to_string(label_count) +
                               " labels for " + std::to_string(count) + " images");
  read_exact(labels, label_count, labels_path, "label payload");

  if (std::uint64_t(sample_count) > count)
    throw std::invalid_argument("load_mnist: sample_count " + std::to_string(sample_count) +
                                " exceeds the " + std::to_string(count) + " available items");

  const std::vector<std::size_t> picks =
      detail::sample_without_replacement(count, std::size_t(sample_count), rng_seed);
  std::vector<Image<double>> out;
  out.reserve(picks.size());
  for (const std::size_t item : picks) {
    Image<double> image;
    image.pixels.resize(rows, cols);
    const std::size_t base = item * std::size_t(rows) * cols;
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c)
        image.pixels(r, c) = double(pixels[base + r * cols + c]) / 255.0;
    out.push_back(std::move(image));
  }
  return out;
}

Image<double> generate_shepp_logan(int size, PhantomVariant variant) {
  if (size < 16) throw std::invalid_argument("generate_shepp_logan: size must be at least 16");

  std::array<double, 10> cos_phi, sin_phi;
  for (std::size_t e = 0; e < kSheppLogan.size(); ++e) {
    const double rad = kSheppLogan[e].phi_deg * std::numbers::pi / 180.0;
    cos_phi[e] = std::cos(rad);
    sin_phi[e] = std::sin(rad);
  }

  Image<double> image;
  image.pixels.resize(size, size);
  const double step = 2.0 / double(size - 1);
  for (int r = 0; r < size; ++r) {
    const double y = 1.0 - step * double(r);
    for (int c = 0; c < size; ++c) {
      const double x = -1.0 + step * double(c);
      double value = 0.0;
      for (std::size_t e = 0; e < kSheppLogan.size(); ++e) {
        const Ellipse& el = kSheppLogan[e];
        const double dx = x - el.x0;
        const double dy = y - el.y0;
        const double xr = (dx * cos_phi[e] + dy * sin_phi[e]) / el.a;
        const double yr = (-dx * sin_phi[e] + dy * cos_phi[e]) / el.b;
        if (xr * xr + yr * yr <= 1.0)
          value += variant == PhantomVariant::Original ? el.original : el.modified;
      }
      image.pixels(r, c) = std::clamp(value, 0.0, 1.0);
    }
  }
  return image;
}

void save_csv_matrix(const MatrixX<double>& matrix, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_access(path, "create");
  char buffer[64];
  for (Index r = 0; r < matrix.rows(); ++r) {
    for (Index c = 0; c < matrix.cols(); ++c) {
      std::snprintf(buffer, sizeof buffer, "%.17g", matrix(r, c));
      if (c > 0) out.put(',');
      out << buffer;
    }
    out.put('\n');
  }
  out.flush();
  if (!out) throw_access(path, "write");
}

std::string dataset_label(const DatasetSpec& spec) {
  if (!spec.name.empty()) return spec.name;
  switch (spec.kind) {
    case DatasetKind::SheppLogan:
      return "shepp_logan";
    case DatasetKind::Mnist:
      return "mnist";
    case DatasetKind::Pgm:
      break;
  }
  const std::filesystem::path p(spec.path);
  const std::string stem = p.stem().string();
  return stem.empty() ? "pgm" : stem;
}

std::vector<Image<double>> load_dataset(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::Pgm:
      if (spec.path.empty()) throw std::invalid_argument("load_dataset: PGM needs a path");
      return {load_pgm(spec.path)};
    case DatasetKind::Mnist:
      if (spec.path.empty() || spec.labels_path.empty())
        throw std::invalid_argument("load_dataset: MNIST needs image and label paths");
      return load_mnist(spec.path, spec.labels_path, spec.sample_count, spec.rng_seed);
    case DatasetKind::SheppLogan:
      return {generate_shepp_logan(spec.phantom_size, spec.phantom_variant)};
  }
  throw std::invalid_argument("load_dataset: unknown dataset kind");
}

}  // namespace ict
