#pragma once

#include <stdexcept>
#include <vector>

#include "ict/types.hpp"

namespace ict {

template <typename Scalar>
struct Image {
  MatrixX<Scalar> pixels;
  Scalar peak{1};

  Index rows() const { return pixels.rows(); }
  Index cols() const { return pixels.cols(); }
};

struct PatchOrigin {
  Index row{0};
  Index col{0};
};

// Overlapping patches of an image, one column per patch, pixels vectorized
// row-major within each patch.
template <typename Scalar>
struct PatchSet {
  MatrixX<Scalar> patches;
  std::vector<PatchOrigin> origins;
  Index source_rows{0};
  Index source_cols{0};
  int patch_edge{0};
  int stride{1};
  Scalar peak{1};

  Index count() const { return patches.cols(); }
};

namespace detail {

// Anchor positions along one axis: a regular stride walk plus a final anchor
// clamped so the last window ends exactly at the border.
inline std::vector<Index> window_anchors(Index extent, int edge, int stride) {
  std::vector<Index> anchors;
  for (Index a = 0; a + edge <= extent; a += stride) anchors.push_back(a);
  if (anchors.back() != extent - edge) anchors.push_back(extent - edge);
  return anchors;
}

}  // namespace detail

template <typename Scalar>
PatchSet<Scalar> extract_patches(const Image<Scalar>& image, int patch_edge, int stride) {
  if (patch_edge < 1) throw std::invalid_argument("extract_patches: patch_edge must be positive");
  if (stride < 1) throw std::invalid_argument("extract_patches: stride must be positive");
  if (patch_edge > image.rows() || patch_edge > image.cols())
    throw std::invalid_argument("extract_patches: patch larger than image");

  const auto row_anchors = detail::window_anchors(image.rows(), patch_edge, stride);
  const auto col_anchors = detail::window_anchors(image.cols(), patch_edge, stride);

  PatchSet<Scalar> set;
  set.source_rows = image.rows();
  set.source_cols = image.cols();
  set.patch_edge = patch_edge;
  set.stride = stride;
  set.peak = image.peak;
  set.patches.resize(Index(patch_edge) * patch_edge,
                     Index(row_anchors.size()) * Index(col_anchors.size()));
  set.origins.reserve(static_cast<size_t>(set.patches.cols()));
  Index t = 0;
  for (const Index r : row_anchors)
    for (const Index c : col_anchors) {
      set.origins.push_back({r, c});
      for (int pr = 0; pr < patch_edge; ++pr)
        for (int pc = 0; pc < patch_edge; ++pc)
          set.patches(Index(pr) * patch_edge + pc, t) = image.pixels(r + pr, c + pc);
      ++t;
    }
  return set;
}

// Per-pixel arithmetic mean of all covering patch values, accumulated as an
// incremental mean in fixed patch order. The incremental form keeps the
// identity round trip exact: averaging equal values changes nothing, while a
// sum-then-divide pass would round.
template <typename Scalar>
Image<Scalar> reconstruct_from_patches(const PatchSet<Scalar>& set,
                                       const MatrixX<Scalar>& reconstructed_patches) {
  if (reconstructed_patches.rows() != set.patches.rows() ||
      reconstructed_patches.cols() != set.patches.cols())
    throw std::invalid_argument("reconstruct_from_patches: patch matrix shape mismatch");
  if (set.origins.size() != static_cast<size_t>(set.patches.cols()))
    throw std::invalid_argument("reconstruct_from_patches: origin count mismatch");

  Image<Scalar> image;
  image.peak = set.peak;
  image.pixels = MatrixX<Scalar>::Zero(set.source_rows, set.source_cols);
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>::Zero(set.source_rows,
                                                                 set.source_cols);
  const int edge = set.patch_edge;
  for (Index t = 0; t < reconstructed_patches.cols(); ++t) {
    const PatchOrigin origin = set.origins[static_cast<size_t>(t)];
    for (int pr = 0; pr < edge; ++pr)
      for (int pc = 0; pc < edge; ++pc) {
        const Index r = origin.row + pr;
        const Index c = origin.col + pc;
        const Scalar value = reconstructed_patches(Index(pr) * edge + pc, t);
        const Index n = ++counts(r, c);
        image.pixels(r, c) += (value - image.pixels(r, c)) / Scalar(n);
      }
  }
  if (counts.minCoeff() < 1)
    throw std::invalid_argument(
        "reconstruct_from_patches: stride left uncovered pixels; use stride <= patch_edge");
  return image;
}

}  // namespace ict
