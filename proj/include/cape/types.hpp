#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace cape {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::Index;

enum class Modality { text, image, audio };
enum class Layout { concatenated, interleaved };

inline std::string to_string(Modality m) {
  switch (m) {
    case Modality::text: return "text";
    case Modality::image: return "image";
    case Modality::audio: return "audio";
  }
  return "?";
}

inline std::string to_string(Layout l) {
  return l == Layout::concatenated ? "concatenated" : "interleaved";
}

/// Batch of real-valued 1D positions, one sequence per row. NaN entries mark
/// padding tokens and propagate through every transformation.
template <typename Scalar = double>
using PositionSet1D = Matrix<Scalar>;

/// Batch of planar patch positions; x and y hold one grid per batch element
/// with matching shapes. The unaugmented grid spans [-1, 1] on both axes.
template <typename Scalar = double>
struct PositionGrid2D {
  std::vector<Matrix<Scalar>> x;
  std::vector<Matrix<Scalar>> y;

  Index batch() const { return static_cast<Index>(x.size()); }
  Index tokens_per_item() const { return x.empty() ? 0 : x.front().size(); }
};

template <typename Scalar>
bool is_padding(Scalar v) {
  return std::isnan(v);
}

}  // namespace cape
