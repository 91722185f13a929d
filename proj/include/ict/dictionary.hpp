#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ict/types.hpp"

namespace ict {

// Fixed overcomplete DCT dictionary; columns are unit-norm atoms. Atom
// (k_row, k_col) sits at column k_row*atoms_per_axis + k_col, and each atom's
// pixels are vectorized row-major to match patch extraction.
template <typename Scalar>
struct Dictionary {
  MatrixX<Scalar> atoms;
  int patch_edge{8};
  int atoms_per_axis{12};

  Index signal_size() const { return atoms.rows(); }
  Index atom_count() const { return atoms.cols(); }
};

// 1-D basis D1[i,k] = cos(i*k*pi/atoms_per_axis) with the mean removed from
// every non-DC column; the 2-D dictionary is the Kronecker product D1 (x) D1
// with columns normalized afterwards.
template <typename Scalar = double>
Dictionary<Scalar> build_overcomplete_dct(int patch_edge, int atoms_per_axis) {
  if (patch_edge < 1)
    throw std::invalid_argument("build_overcomplete_dct: patch_edge must be positive");
  if (atoms_per_axis < patch_edge)
    throw std::invalid_argument(
        "build_overcomplete_dct: atoms_per_axis < patch_edge would be undercomplete");

  MatrixX<Scalar> d1(patch_edge, atoms_per_axis);
  for (int k = 0; k < atoms_per_axis; ++k) {
    for (int i = 0; i < patch_edge; ++i)
      d1(i, k) = std::cos(Scalar(i) * Scalar(k) * std::numbers::pi_v<Scalar> /
                          Scalar(atoms_per_axis));
    if (k > 0) d1.col(k).array() -= d1.col(k).mean();
  }

  Dictionary<Scalar> dict;
  dict.patch_edge = patch_edge;
  dict.atoms_per_axis = atoms_per_axis;
  dict.atoms.resize(Index(patch_edge) * patch_edge, Index(atoms_per_axis) * atoms_per_axis);
  for (int k_row = 0; k_row < atoms_per_axis; ++k_row)
    for (int k_col = 0; k_col < atoms_per_axis; ++k_col) {
      const Index n = Index(k_row) * atoms_per_axis + k_col;
      for (int i = 0; i < patch_edge; ++i)
        dict.atoms.col(n).segment(Index(i) * patch_edge, patch_edge) =
            d1(i, k_row) * d1.col(k_col);
      const Scalar norm = dict.atoms.col(n).norm();
      if (!(norm > Scalar(0)))
        throw std::runtime_error("build_overcomplete_dct: degenerate atom");
      dict.atoms.col(n) /= norm;
    }
  return dict;
}

template <typename Scalar>
VectorX<Scalar> apply(const Dictionary<Scalar>& dictionary, const VectorX<Scalar>& coeffs) {
  if (coeffs.size() != dictionary.atom_count())
    throw std::invalid_argument("apply: coefficient length does not match atom count");
  return dictionary.atoms * coeffs;
}

}  // namespace ict
