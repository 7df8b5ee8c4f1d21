#pragma once

#include <string>
#include <vector>

#include "cape/augmentation.hpp"
#include "cape/batching.hpp"
#include "cape/embedding.hpp"
#include "cape/types.hpp"

namespace cape {

// Embedding files ("cape-emb v1"): `#`-prefixed header lines carrying
// format, modality, dim_K, n_tokens and layout, then one CSV row per token
// with 12 significant digits and NaN spelled `nan`. Batches are flattened
// into n_tokens rows. save -> load -> save is byte-identical.

struct LoadedEmbedding {
  Embedding<double> embedding;
  Modality modality = Modality::text;
};

std::string embedding_to_text(const Embedding<double>& emb, Modality modality);
LoadedEmbedding embedding_from_text(const std::string& text);
void save_embedding(const std::string& path, const Embedding<double>& emb, Modality modality);
LoadedEmbedding load_embedding(const std::string& path);

// Position files ("cape-pos v1"). kind 1d: one CSV row per batch row. kind
// 2d: headers batch/rows/cols, then one `x,y` line per token, batch-major
// and row-major within each grid.

struct LoadedPositions {
  bool is_2d = false;
  PositionSet1D<double> p1d;
  PositionGrid2D<double> p2d;
};

std::string positions_to_text(const PositionSet1D<double>& positions);
std::string positions_to_text(const PositionGrid2D<double>& grid);
LoadedPositions positions_from_text(const std::string& text);
void save_positions(const std::string& path, const PositionSet1D<double>& positions);
void save_positions(const std::string& path, const PositionGrid2D<double>& grid);
LoadedPositions load_positions(const std::string& path);

/// ASCII PGM (P2, maxval 255) of values in [-1, 1]; pixel = round(255*(v+1)/2),
/// clamped to [0, 255].
std::string pgm_from_matrix(const Matrix<double>& values);

struct VizRequest {
  Index grid_side = 14;
  Index dim = 768;
  Index stride = 20;  // components 0, stride, 2*stride, ... < dim
  std::string out_dir;
  bool approx_magnitudes = false;
};

/// Embeds the [-1,1]^2 grid and writes one PGM per selected component.
/// Returns the written paths in component order.
std::vector<std::string> run_viz(const VizRequest& req);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Strict JSON codec for AugmentationConfig. Exactly the keys
/// max_global_shift, max_local_shift, max_scale, mean_normalize, augment,
/// seed; anything missing, extra, or mistyped is an error. `augment`
/// selects train (true) or inference (false) mode.
AugmentationConfig augmentation_config_from_json(const std::string& text);
std::string augmentation_config_to_json(const AugmentationConfig& cfg);

/// {durations, base_hop, target_frames, hops, keep_masks} for inspection.
std::string batch_plan_to_json(const BatchPlan& plan);

}  // namespace cape
