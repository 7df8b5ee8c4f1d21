#pragma once

#include <stdexcept>

#include "cape/types.hpp"

namespace cape {

/// linspace with numpy endpoint semantics: a single point collapses to
/// `start`, otherwise the last value is set to `stop` exactly.
inline Eigen::VectorXd linspace(double start, double stop, Index n) {
  if (n < 1) {
    throw std::invalid_argument("linspace: need at least one point");
  }
  Eigen::VectorXd v(n);
  if (n == 1) {
    v[0] = start;
    return v;
  }
  const double step = (stop - start) / static_cast<double>(n - 1);
  for (Index i = 0; i < n; ++i) {
    v[i] = start + static_cast<double>(i) * step;
  }
  v[n - 1] = stop;
  return v;
}

/// Token ordinals 0, 1, ..., n-1 as reals (one sequence).
inline Eigen::VectorXd text_positions(Index n_tokens) {
  if (n_tokens < 1) {
    throw std::invalid_argument("text_positions: need at least one token");
  }
  Eigen::VectorXd p(n_tokens);
  for (Index i = 0; i < n_tokens; ++i) p[i] = static_cast<double>(i);
  return p;
}

/// Patches along one image side. Grows linearly with resolution at fixed
/// patch size (224px/16px -> 14, 384px/16px -> 24).
inline Index patches_per_side(Index image_side_px, Index patch_side_px) {
  if (image_side_px < 1 || patch_side_px < 1 || image_side_px % patch_side_px != 0) {
    throw std::invalid_argument("patches_per_side: patch size must divide the image side");
  }
  return image_side_px / patch_side_px;
}

/// Patch-center coordinates scaled to [-1, 1] on both axes, independent of
/// pixel resolution: x varies along columns (width), y along rows (height).
inline PositionGrid2D<double> image_positions(Index height_patches, Index width_patches) {
  if (height_patches < 1 || width_patches < 1) {
    throw std::invalid_argument("image_positions: patch counts must be positive");
  }
  const Eigen::VectorXd xs = linspace(-1.0, 1.0, width_patches);
  const Eigen::VectorXd ys = linspace(-1.0, 1.0, height_patches);
  PositionGrid2D<double> grid;
  grid.x.emplace_back(ys.size(), xs.size());
  grid.y.emplace_back(ys.size(), xs.size());
  for (Index r = 0; r < height_patches; ++r) {
    for (Index c = 0; c < width_patches; ++c) {
      grid.x[0](r, c) = xs[c];
      grid.y[0](r, c) = ys[r];
    }
  }
  return grid;
}

/// Frame timestamps in seconds: offset + i * hop for i = 0..n_frames-1.
/// Positions stay tied to audio time, whatever the hop distance.
inline Eigen::VectorXd audio_positions(Index n_frames, double hop, double offset = 0.0) {
  if (n_frames < 1) {
    throw std::invalid_argument("audio_positions: need at least one frame");
  }
  if (!(hop > 0.0)) {
    throw std::invalid_argument("audio_positions: hop must be positive");
  }
  Eigen::VectorXd p(n_frames);
  for (Index i = 0; i < n_frames; ++i) p[i] = offset + static_cast<double>(i) * hop;
  return p;
}

}  // namespace cape
