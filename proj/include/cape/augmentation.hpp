#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "cape/positions.hpp"
#include "cape/rng.hpp"
#include "cape/types.hpp"

namespace cape {

enum class AugmentationMode { train, inference };

/// Knobs of the position-augmentation pipeline. In train mode the pipeline
/// is: mean-normalize (optional), global shift U(-max_global_shift, +...),
/// per-token local shift U(-max_local_shift, +...), then global scaling by
/// exp(U(-log max_scale, +log max_scale)). In inference mode only the
/// mean-normalization is applied and the stream is never consumed.
struct AugmentationConfig {
  double max_global_shift = 0.0;
  double max_local_shift = 0.0;
  double max_scale = 1.0;  // >= 1
  bool mean_normalize = true;
  AugmentationMode mode = AugmentationMode::train;
  std::uint64_t seed = 42;
};

/// Source-position scaling factors (target/source corpus token ratio) for
/// the WMT'14 translation setups.
inline constexpr double kMtAlphaDe = 1.0337;
inline constexpr double kMtAlphaFr = 1.1632;

inline void validate(const AugmentationConfig& cfg) {
  if (!(cfg.max_scale >= 1.0)) {
    throw std::invalid_argument("AugmentationConfig: max_scale must be >= 1");
  }
  if (cfg.max_global_shift < 0.0 || cfg.max_local_shift < 0.0) {
    throw std::invalid_argument("AugmentationConfig: shift bounds must be >= 0");
  }
}

/// Image defaults: global shift 0.5, local shift 1/patches_per_side,
/// scale 1.4. Grids skip mean-normalization (the [-1, 1] grid is already
/// zero-mean).
inline AugmentationConfig image_augmentation_defaults(Index patches_per_side,
                                                      std::uint64_t seed = 42) {
  return AugmentationConfig{0.5, 1.0 / static_cast<double>(patches_per_side), 1.4,
                            false, AugmentationMode::train, seed};
}

/// Audio defaults: global shift of +/-30 s (a 60 s span) and the largest
/// local shift that keeps frame order, half the hop distance.
inline AugmentationConfig audio_augmentation_defaults(double hop_seconds, double max_scale,
                                                      std::uint64_t seed = 42) {
  return AugmentationConfig{30.0, hop_seconds / 2.0, max_scale,
                            true, AugmentationMode::train, seed};
}

/// Translation defaults: no mean-normalization (keeps source and target
/// aligned at position zero), no scaling, order-preserving local shift 0.5.
inline AugmentationConfig mt_augmentation_defaults(double max_global_shift,
                                                   std::uint64_t seed = 42) {
  return AugmentationConfig{max_global_shift, 0.5, 1.0,
                            false, AugmentationMode::train, seed};
}

namespace detail {

/// NaN-ignoring per-row mean subtraction, summing left to right. Throws if a
/// row is entirely padding.
inline void mean_normalize_rows(PositionSet1D<double>& positions) {
  for (Index b = 0; b < positions.rows(); ++b) {
    double sum = 0.0;
    Index count = 0;
    for (Index t = 0; t < positions.cols(); ++t) {
      if (!is_padding(positions(b, t))) {
        sum += positions(b, t);
        ++count;
      }
    }
    if (count == 0) {
      throw std::invalid_argument("mean-normalization: row " + std::to_string(b) +
                                  " contains only padding");
    }
    positions.row(b).array() -= sum / static_cast<double>(count);
  }
}

}  // namespace detail

/// Augments a batch of 1D positions. Draw order (frozen): one global shift
/// per row, then one local shift per token in row-major order, then one
/// log-scale per row. NaN entries pass through as NaN; draws are consumed
/// for padding tokens too, so masks never shift the stream.
inline PositionSet1D<double> augment_positions_1d(const PositionSet1D<double>& positions,
                                                  const AugmentationConfig& cfg, RngStream& rng) {
  validate(cfg);
  if (positions.rows() == 0 || positions.cols() == 0) {
    throw std::invalid_argument("augment_positions_1d: empty position set");
  }
  PositionSet1D<double> out = positions;
  if (cfg.mean_normalize) {
    detail::mean_normalize_rows(out);
  }
  if (cfg.mode != AugmentationMode::train) {
    return out;
  }
  const Index batch = out.rows(), n = out.cols();
  Eigen::VectorXd delta(batch);
  for (Index b = 0; b < batch; ++b) {
    delta[b] = rng.uniform(-cfg.max_global_shift, cfg.max_global_shift);
  }
  Matrix<double> local(batch, n);
  for (Index b = 0; b < batch; ++b) {
    for (Index t = 0; t < n; ++t) {
      local(b, t) = rng.uniform(-cfg.max_local_shift, cfg.max_local_shift);
    }
  }
  const double log_max = std::log(cfg.max_scale);
  for (Index b = 0; b < batch; ++b) {
    const double scale = std::exp(rng.uniform(-log_max, log_max));
    out.row(b) = ((out.row(b).array() + delta[b]) + local.row(b).array()) * scale;
  }
  return out;
}

/// Builds the [-1, 1] patch grid for `patches_per_side` and augments it.
/// The grid follows the reference orientation (x varies along the first
/// index). Draw order (frozen): x global shifts (one per batch element),
/// y global shifts, x local shifts (row-major over batch x grid), y local
/// shifts, then one log-scale per batch element applied to both axes.
/// Mean-normalization is skipped: the grid is zero-mean by construction.
inline PositionGrid2D<double> augment_grid_2d(Index patches_per_side, Index batch,
                                              const AugmentationConfig& cfg, RngStream& rng) {
  validate(cfg);
  if (patches_per_side < 1) {
    throw std::invalid_argument("augment_grid_2d: grid side must be >= 1");
  }
  if (batch < 1) {
    throw std::invalid_argument("augment_grid_2d: batch must be >= 1");
  }
  const Index p = patches_per_side;
  const Eigen::VectorXd line = linspace(-1.0, 1.0, p);
  PositionGrid2D<double> grid;
  grid.x.assign(static_cast<std::size_t>(batch), Matrix<double>(p, p));
  grid.y.assign(static_cast<std::size_t>(batch), Matrix<double>(p, p));
  for (Index b = 0; b < batch; ++b) {
    auto& xb = grid.x[static_cast<std::size_t>(b)];
    auto& yb = grid.y[static_cast<std::size_t>(b)];
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p; ++j) {
        xb(i, j) = line[i];
        yb(i, j) = line[j];
      }
    }
  }
  if (cfg.mode != AugmentationMode::train) {
    return grid;
  }
  Eigen::VectorXd dx(batch), dy(batch);
  for (Index b = 0; b < batch; ++b) dx[b] = rng.uniform(-cfg.max_global_shift, cfg.max_global_shift);
  for (Index b = 0; b < batch; ++b) dy[b] = rng.uniform(-cfg.max_global_shift, cfg.max_global_shift);
  for (Index b = 0; b < batch; ++b) {
    auto& xb = grid.x[static_cast<std::size_t>(b)];
    xb.array() += dx[b];
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p; ++j) {
        xb(i, j) += rng.uniform(-cfg.max_local_shift, cfg.max_local_shift);
      }
    }
  }
  for (Index b = 0; b < batch; ++b) {
    auto& yb = grid.y[static_cast<std::size_t>(b)];
    yb.array() += dy[b];
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p; ++j) {
        yb(i, j) += rng.uniform(-cfg.max_local_shift, cfg.max_local_shift);
      }
    }
  }
  const double log_max = std::log(cfg.max_scale);
  for (Index b = 0; b < batch; ++b) {
    const double scale = std::exp(rng.uniform(-log_max, log_max));
    grid.x[static_cast<std::size_t>(b)] *= scale;
    grid.y[static_cast<std::size_t>(b)] *= scale;
  }
  return grid;
}

/// Augments a source/target position pair for translation. Source positions
/// are scaled by `alpha` first; each pair then shares one global shift and
/// one global scale, while local shifts are drawn per token from
/// U(-0.5, 0.5) regardless of cfg.max_local_shift. Draw order (frozen):
/// global shifts (one per pair), source local shifts (row-major), target
/// local shifts (row-major), log-scales (one per pair). Requires
/// cfg.mean_normalize == false so the first positions stay aligned.
inline std::pair<PositionSet1D<double>, PositionSet1D<double>> augment_mt_pair(
    const PositionSet1D<double>& src_positions, const PositionSet1D<double>& tgt_positions,
    double alpha, const AugmentationConfig& cfg, RngStream& rng) {
  validate(cfg);
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("augment_mt_pair: alpha must be positive");
  }
  if (cfg.mean_normalize) {
    throw std::invalid_argument("augment_mt_pair: mean-normalization must be off");
  }
  if (src_positions.rows() != tgt_positions.rows()) {
    throw std::invalid_argument("augment_mt_pair: source/target batch sizes differ");
  }
  if (src_positions.rows() == 0 || src_positions.cols() == 0 || tgt_positions.cols() == 0) {
    throw std::invalid_argument("augment_mt_pair: empty position set");
  }
  PositionSet1D<double> src = src_positions * alpha;
  PositionSet1D<double> tgt = tgt_positions;
  if (cfg.mode != AugmentationMode::train) {
    return {std::move(src), std::move(tgt)};
  }
  const Index batch = src.rows();
  Eigen::VectorXd delta(batch);
  for (Index b = 0; b < batch; ++b) {
    delta[b] = rng.uniform(-cfg.max_global_shift, cfg.max_global_shift);
  }
  Matrix<double> local_src(batch, src.cols()), local_tgt(batch, tgt.cols());
  for (Index b = 0; b < batch; ++b) {
    for (Index t = 0; t < src.cols(); ++t) local_src(b, t) = rng.uniform(-0.5, 0.5);
  }
  for (Index b = 0; b < batch; ++b) {
    for (Index t = 0; t < tgt.cols(); ++t) local_tgt(b, t) = rng.uniform(-0.5, 0.5);
  }
  const double log_max = std::log(cfg.max_scale);
  for (Index b = 0; b < batch; ++b) {
    const double scale = std::exp(rng.uniform(-log_max, log_max));
    src.row(b) = ((src.row(b).array() + delta[b]) + local_src.row(b).array()) * scale;
    tgt.row(b) = ((tgt.row(b).array() + delta[b]) + local_tgt.row(b).array()) * scale;
  }
  return {std::move(src), std::move(tgt)};
}

/// Evaluation-time rescaling of an unaugmented grid from [-1, 1] to
/// [-gamma, gamma].
inline PositionGrid2D<double> rescale_eval_positions(const PositionGrid2D<double>& grid,
                                                     double gamma) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("rescale_eval_positions: gamma must be positive");
  }
  PositionGrid2D<double> out = grid;
  for (auto& m : out.x) m *= gamma;
  for (auto& m : out.y) m *= gamma;
  return out;
}

}  // namespace cape
