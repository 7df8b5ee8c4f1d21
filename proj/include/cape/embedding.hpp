#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "cape/frequency.hpp"
#include "cape/types.hpp"

namespace cape {

/// Per-token sinusoidal embedding matrix, n_tokens x K. In the default
/// concatenated layout columns [0, K/2) hold cosines and [K/2, K) the
/// matching sines, so each (cos, sin) column pair lies on the unit circle
/// and every non-padding row has Euclidean norm sqrt(K/2). Rows for padding
/// positions are all-NaN.
template <typename Scalar = double>
struct Embedding {
  Matrix<Scalar> values;
  Layout layout = Layout::concatenated;

  Index tokens() const { return values.rows(); }
  Index dim() const { return values.cols(); }

  template <typename Other>
  Embedding<Other> cast() const {
    return Embedding<Other>{values.template cast<Other>(), layout};
  }
};

namespace detail {

inline void require_1d_spec(Modality m) {
  if (m == Modality::image) {
    throw std::invalid_argument("1D embedding requires a text or audio spec");
  }
}

template <typename Scalar>
std::pair<Index, Index> pair_columns(Layout layout, Index k, Index half) {
  return layout == Layout::concatenated ? std::pair<Index, Index>{k, k + half}
                                        : std::pair<Index, Index>{2 * k, 2 * k + 1};
}

}  // namespace detail

/// E[i, k] = cos(omega_k * p_i), E[i, k + K/2] = sin(omega_k * p_i).
/// NaN positions yield all-NaN rows. Phases are evaluated in double.
template <typename Scalar>
Embedding<Scalar> embed_1d(const Vector<double>& positions, const FrequencySpec<Scalar>& spec) {
  detail::require_1d_spec(spec.modality);
  if (positions.size() == 0) {
    throw std::invalid_argument("embed_1d: empty position set");
  }
  const Index n = positions.size();
  const Index half = spec.half();
  Embedding<Scalar> out;
  out.layout = Layout::concatenated;
  out.values.resize(n, spec.dim);
  for (Index i = 0; i < n; ++i) {
    const double p = positions[i];
    for (Index k = 0; k < half; ++k) {
      const double phase = static_cast<double>(spec.omega[k]) * p;
      out.values(i, k) = static_cast<Scalar>(std::cos(phase));
      out.values(i, k + half) = static_cast<Scalar>(std::sin(phase));
    }
  }
  return out;
}

/// Derivative of each embedding row with respect to its own position:
/// d cos(w p)/dp = -w sin(w p) and d sin(w p)/dp = w cos(w p), laid out like
/// the embedding itself (n x K).
template <typename Scalar>
Matrix<Scalar> embed_1d_position_jacobian(const Vector<double>& positions,
                                          const FrequencySpec<Scalar>& spec) {
  detail::require_1d_spec(spec.modality);
  const Index n = positions.size();
  const Index half = spec.half();
  Matrix<Scalar> jac(n, spec.dim);
  for (Index i = 0; i < n; ++i) {
    const double p = positions[i];
    for (Index k = 0; k < half; ++k) {
      const double w = static_cast<double>(spec.omega[k]);
      jac(i, k) = static_cast<Scalar>(-w * std::sin(w * p));
      jac(i, k + half) = static_cast<Scalar>(w * std::cos(w * p));
    }
  }
  return jac;
}

/// Unitary shift: rotates every (cos, sin) pair by omega_k * m, i.e. treats
/// the pair as a complex number and multiplies by e^{i omega_k m}. The result
/// equals embedding the positions shifted by m; m may be any real.
template <typename Scalar>
Embedding<Scalar> shift_apply(const Embedding<Scalar>& emb, double m,
                              const FrequencySpec<Scalar>& spec) {
  detail::require_1d_spec(spec.modality);
  if (emb.dim() != spec.dim) {
    throw std::invalid_argument("shift_apply: embedding width " + std::to_string(emb.dim()) +
                                " does not match spec width " + std::to_string(spec.dim));
  }
  const Index half = spec.half();
  Embedding<Scalar> out;
  out.layout = emb.layout;
  out.values.resize(emb.tokens(), emb.dim());
  for (Index k = 0; k < half; ++k) {
    const double theta = static_cast<double>(spec.omega[k]) * m;
    const Scalar c = static_cast<Scalar>(std::cos(theta));
    const Scalar s = static_cast<Scalar>(std::sin(theta));
    const auto [ci, si] = detail::pair_columns<Scalar>(emb.layout, k, half);
    out.values.col(ci) = emb.values.col(ci) * c - emb.values.col(si) * s;
    out.values.col(si) = emb.values.col(si) * c + emb.values.col(ci) * s;
  }
  return out;
}

/// E[t, k] = cos(pi (wx_k x + wy_k y)), sines in the upper half. Tokens are
/// emitted batch-major and row-major within each grid.
template <typename Scalar>
Embedding<Scalar> embed_2d(const PositionGrid2D<double>& grid, const FrequencySpec<Scalar>& spec) {
  if (spec.modality != Modality::image) {
    throw std::invalid_argument("embed_2d requires an image spec");
  }
  if (grid.x.size() != grid.y.size()) {
    throw std::invalid_argument("embed_2d: x/y batch sizes differ");
  }
  Index total = 0;
  for (std::size_t b = 0; b < grid.x.size(); ++b) {
    if (grid.x[b].rows() != grid.y[b].rows() || grid.x[b].cols() != grid.y[b].cols()) {
      throw std::invalid_argument("embed_2d: x/y grid shapes differ");
    }
    total += grid.x[b].size();
  }
  const Index half = spec.half();
  Embedding<Scalar> out;
  out.layout = Layout::concatenated;
  out.values.resize(total, spec.dim);
  Index t = 0;
  for (std::size_t b = 0; b < grid.x.size(); ++b) {
    for (Index r = 0; r < grid.x[b].rows(); ++r) {
      for (Index c = 0; c < grid.x[b].cols(); ++c, ++t) {
        const double x = grid.x[b](r, c);
        const double y = grid.y[b](r, c);
        for (Index k = 0; k < half; ++k) {
          const double phase = M_PI * (static_cast<double>(spec.wx[k]) * x +
                                       static_cast<double>(spec.wy[k]) * y);
          out.values(t, k) = static_cast<Scalar>(std::cos(phase));
          out.values(t, k + half) = static_cast<Scalar>(std::sin(phase));
        }
      }
    }
  }
  return out;
}

/// Per-token derivatives of the 2D embedding with respect to x and y.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> embed_2d_position_jacobian(
    const PositionGrid2D<double>& grid, const FrequencySpec<Scalar>& spec) {
  if (spec.modality != Modality::image) {
    throw std::invalid_argument("embed_2d_position_jacobian requires an image spec");
  }
  Index total = 0;
  for (const auto& g : grid.x) total += g.size();
  const Index half = spec.half();
  Matrix<Scalar> jx(total, spec.dim), jy(total, spec.dim);
  Index t = 0;
  for (std::size_t b = 0; b < grid.x.size(); ++b) {
    for (Index r = 0; r < grid.x[b].rows(); ++r) {
      for (Index c = 0; c < grid.x[b].cols(); ++c, ++t) {
        const double x = grid.x[b](r, c);
        const double y = grid.y[b](r, c);
        for (Index k = 0; k < half; ++k) {
          const double wx = static_cast<double>(spec.wx[k]);
          const double wy = static_cast<double>(spec.wy[k]);
          const double phase = M_PI * (wx * x + wy * y);
          const double sp = std::sin(phase), cp = std::cos(phase);
          jx(t, k) = static_cast<Scalar>(-M_PI * wx * sp);
          jx(t, k + half) = static_cast<Scalar>(M_PI * wx * cp);
          jy(t, k) = static_cast<Scalar>(-M_PI * wy * sp);
          jy(t, k + half) = static_cast<Scalar>(M_PI * wy * cp);
        }
      }
    }
  }
  return {std::move(jx), std::move(jy)};
}

/// Reorders columns between the concatenated [cos | sin] layout and the
/// interleaved [cos, sin, cos, sin, ...] one. No-op if already in `target`.
template <typename Scalar>
Embedding<Scalar> to_layout(const Embedding<Scalar>& emb, Layout target) {
  if (emb.layout == target) return emb;
  const Index half = emb.dim() / 2;
  Embedding<Scalar> out;
  out.layout = target;
  out.values.resize(emb.tokens(), emb.dim());
  for (Index k = 0; k < half; ++k) {
    const auto [sc, ss] = detail::pair_columns<Scalar>(emb.layout, k, half);
    const auto [dc, ds] = detail::pair_columns<Scalar>(target, k, half);
    out.values.col(dc) = emb.values.col(sc);
    out.values.col(ds) = emb.values.col(ss);
  }
  return out;
}

/// Learned absolute-position lookup table with modular wrap, so any
/// non-negative index resolves to a row: lookup(t) = table row (t mod N).
template <typename Scalar = double>
struct AbsposTable {
  Matrix<Scalar> table;  // N x K

  Index period() const { return table.rows(); }
};

template <typename Scalar>
Vector<Scalar> abspos_lookup(const AbsposTable<Scalar>& table, std::uint64_t index) {
  if (table.table.rows() == 0) {
    throw std::invalid_argument("abspos_lookup: empty table");
  }
  const auto n = static_cast<std::uint64_t>(table.table.rows());
  return table.table.row(static_cast<Index>(index % n)).transpose();
}

}  // namespace cape
