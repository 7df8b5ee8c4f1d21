#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cape/embedding.hpp"
#include "cape/rng.hpp"
#include "cape/types.hpp"

namespace cape {

enum class PosMode { nopos, addpos, relpos };

inline std::string to_string(PosMode mode) {
  switch (mode) {
    case PosMode::nopos: return "nopos";
    case PosMode::addpos: return "addpos";
    case PosMode::relpos: return "relpos";
  }
  return "?";
}

/// Single-head, single-layer attention encoder weights. Row-vector
/// convention: queries are tokens * w_q, etc.
struct AttentionParams {
  PosMode mode = PosMode::nopos;
  Matrix<double> w_q, w_k, w_v, w_o;

  Index d_model() const { return w_q.rows(); }
};

/// Learned key offsets indexed by clipped relative distance. Row
/// `clamp(j - i, -max_context, +max_context) + max_context` is added to key
/// j when scoring query i.
struct RelposTable {
  Matrix<double> offsets;  // (2 * max_context + 1) x d_model

  Index max_context() const { return (offsets.rows() - 1) / 2; }

  const auto row_for(Index relative) const {
    const Index c = max_context();
    return offsets.row(std::clamp(relative, -c, c) + c);
  }
};

namespace detail {

inline void fill_uniform(Matrix<double>& m, double low, double high, RngStream& rng) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rng.uniform(low, high);
    }
  }
}

}  // namespace detail

/// Fixed-seed test weights, uniform in [-1/sqrt(d), 1/sqrt(d)). Matrices are
/// filled row-major in the order w_q, w_k, w_v, w_o.
inline AttentionParams random_attention_params(PosMode mode, Index d_model, std::uint64_t seed) {
  if (d_model < 2 || d_model % 2 != 0) {
    throw std::invalid_argument("random_attention_params: d_model must be even and >= 2");
  }
  RngStream rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
  AttentionParams params;
  params.mode = mode;
  for (auto* w : {&params.w_q, &params.w_k, &params.w_v, &params.w_o}) {
    w->resize(d_model, d_model);
    detail::fill_uniform(*w, -bound, bound, rng);
  }
  return params;
}

inline RelposTable make_relpos_table(Index max_context, Index d_model, std::uint64_t seed) {
  if (max_context < 1) {
    throw std::invalid_argument("make_relpos_table: max_context must be >= 1");
  }
  RngStream rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
  RelposTable table;
  table.offsets.resize(2 * max_context + 1, d_model);
  detail::fill_uniform(table.offsets, -bound, bound, rng);
  return table;
}

/// Intermediates kept for the backward pass.
struct EncodeCache {
  Matrix<double> input;  // tokens, plus position embedding in addpos mode
  Matrix<double> q, k, v;
  Matrix<double> attn;  // post-softmax weights, padded keys at zero
};

namespace detail {

inline void validate_encode_args(const Matrix<double>& tokens, const Embedding<double>* pos_emb,
                                 const AttentionParams& params, const RelposTable* relpos,
                                 const std::vector<bool>* padding) {
  const Index d = params.d_model();
  if (d < 2 || params.w_q.cols() != d || params.w_k.rows() != d || params.w_k.cols() != d ||
      params.w_v.rows() != d || params.w_v.cols() != d || params.w_o.rows() != d ||
      params.w_o.cols() != d) {
    throw std::invalid_argument("encode: weight matrices must all be d_model x d_model");
  }
  if (!params.w_q.allFinite() || !params.w_k.allFinite() || !params.w_v.allFinite() ||
      !params.w_o.allFinite()) {
    throw std::invalid_argument("encode: weights must be finite");
  }
  if (tokens.rows() == 0 || tokens.cols() != d) {
    throw std::invalid_argument("encode: tokens must be n x d_model with n >= 1");
  }
  if (padding && static_cast<Index>(padding->size()) != tokens.rows()) {
    throw std::invalid_argument("encode: padding mask length must equal n");
  }
  if (params.mode == PosMode::addpos) {
    if (!pos_emb) {
      throw std::invalid_argument("encode: addpos mode needs a position embedding");
    }
    if (pos_emb->values.rows() != tokens.rows() || pos_emb->values.cols() != d) {
      throw std::invalid_argument("encode: position embedding shape must match tokens");
    }
    for (Index i = 0; i < pos_emb->values.rows(); ++i) {
      if (!pos_emb->values.row(i).allFinite() && !(padding && (*padding)[static_cast<std::size_t>(i)])) {
        throw std::invalid_argument("encode: NaN position row " + std::to_string(i) +
                                    " is not covered by the padding mask");
      }
    }
  } else if (pos_emb) {
    throw std::invalid_argument("encode: position embedding only allowed in addpos mode");
  }
  if (params.mode == PosMode::relpos) {
    if (!relpos) {
      throw std::invalid_argument("encode: relpos mode needs an offsets table");
    }
    if (relpos->offsets.cols() != d || relpos->offsets.rows() % 2 == 0) {
      throw std::invalid_argument("encode: offsets table must be (2c+1) x d_model");
    }
  } else if (relpos) {
    throw std::invalid_argument("encode: offsets table only allowed in relpos mode");
  }
}

}  // namespace detail

/// One attention layer: project, score, softmax, mix values, project back,
/// add the layer input as residual. Per query row, keys are visited in
/// decreasing-logit order both for the softmax denominator and for value
/// mixing; the summation order then depends only on the score values, which
/// makes the nopos encoder permutation-equivariant bit for bit (for inputs
/// without exactly tied scores). `padding[i] == true` removes token i as a
/// key everywhere and zeroes any NaN position row before it is added.
inline Matrix<double> encode(const Matrix<double>& tokens, const Embedding<double>* pos_emb,
                             const AttentionParams& params, const RelposTable* relpos = nullptr,
                             const std::vector<bool>* padding = nullptr,
                             EncodeCache* cache = nullptr) {
  detail::validate_encode_args(tokens, pos_emb, params, relpos, padding);
  const Index n = tokens.rows();
  const Index d = params.d_model();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  Matrix<double> input = tokens;
  if (params.mode == PosMode::addpos) {
    for (Index i = 0; i < n; ++i) {
      if (padding && (*padding)[static_cast<std::size_t>(i)]) continue;
      input.row(i) += pos_emb->values.row(i);
    }
  }

  // Row-by-row products keep each output row's arithmetic independent of
  // where the row sits in the batch.
  Matrix<double> q(n, d), k(n, d), v(n, d);
  for (Index i = 0; i < n; ++i) {
    q.row(i) = input.row(i) * params.w_q;
    k.row(i) = input.row(i) * params.w_k;
    v.row(i) = input.row(i) * params.w_v;
  }

  std::vector<Index> keys;
  keys.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    if (!(padding && (*padding)[static_cast<std::size_t>(j)])) keys.push_back(j);
  }
  if (keys.empty()) {
    throw std::invalid_argument("encode: every token is masked out");
  }

  Matrix<double> attn = Matrix<double>::Zero(n, n);
  Matrix<double> mixed(n, d);
  std::vector<double> logits(keys.size());
  std::vector<std::size_t> order(keys.size());
  for (Index i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < keys.size(); ++s) {
      const Index j = keys[s];
      double score = q.row(i).dot(k.row(j)) * inv_sqrt_d;
      if (params.mode == PosMode::relpos) {
        score += q.row(i).dot(relpos->row_for(j - i)) * inv_sqrt_d;
      }
      logits[s] = score;
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
    const double top = logits[order.front()];
    double denom = 0.0;
    for (std::size_t s : order) denom += std::exp(logits[s] - top);
    mixed.row(i).setZero();
    for (std::size_t s : order) {
      const double weight = std::exp(logits[s] - top) / denom;
      attn(i, keys[s]) = weight;
      mixed.row(i) += weight * v.row(keys[s]);
    }
  }

  Matrix<double> out(n, d);
  for (Index i = 0; i < n; ++i) {
    out.row(i) = mixed.row(i) * params.w_o + input.row(i);
  }

  if (cache) {
    cache->input = std::move(input);
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attn = std::move(attn);
  }
  return out;
}

/// Gradient of encode() with respect to its token input (identical to the
/// gradient with respect to tokens in addpos mode, since the embedding
/// enters by plain addition). `cache` must come from the matching forward
/// call.
inline Matrix<double> encode_backward_tokens(const AttentionParams& params,
                                             const RelposTable* relpos, const EncodeCache& cache,
                                             const Matrix<double>& d_output) {
  const Index n = cache.input.rows();
  const Index d = params.d_model();
  if (d_output.rows() != n || d_output.cols() != d) {
    throw std::invalid_argument("encode_backward_tokens: gradient shape must match output");
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  Matrix<double> d_mixed = d_output * params.w_o.transpose();
  Matrix<double> d_input = d_output;  // residual path
  Matrix<double> d_v = cache.attn.transpose() * d_mixed;
  Matrix<double> d_attn = d_mixed * cache.v.transpose();

  Matrix<double> d_logits(n, n);
  for (Index i = 0; i < n; ++i) {
    const double dot = d_attn.row(i).dot(cache.attn.row(i));
    d_logits.row(i) = cache.attn.row(i).array() * (d_attn.row(i).array() - dot);
  }

  Matrix<double> d_q = d_logits * cache.k * inv_sqrt_d;
  if (params.mode == PosMode::relpos) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (d_logits(i, j) != 0.0) {
          d_q.row(i) += d_logits(i, j) * inv_sqrt_d * relpos->row_for(j - i);
        }
      }
    }
  }
  Matrix<double> d_k = d_logits.transpose() * cache.q * inv_sqrt_d;

  d_input += d_q * params.w_q.transpose();
  d_input += d_k * params.w_k.transpose();
  d_input += d_v * params.w_v.transpose();
  return d_input;
}

/// Scaled pairwise scores between two embedding sets, with no weights in the
/// way: row i, column j holds e1_i . e2_j / sqrt(K). For sinusoidal
/// embeddings this depends only on position differences, so a common shift
/// of all positions leaves the matrix unchanged.
inline Matrix<double> embedding_logits(const Embedding<double>& queries,
                                       const Embedding<double>& keys) {
  if (queries.dim() != keys.dim()) {
    throw std::invalid_argument("embedding_logits: dimensions differ");
  }
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(queries.dim()));
  return queries.values * keys.values.transpose() * inv_sqrt_k;
}

}  // namespace cape
