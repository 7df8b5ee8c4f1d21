#pragma once

#include <cmath>
#include <stdexcept>

#include "cape/types.hpp"

namespace cape {

/// Frequency family for one modality. For text and audio, `omega` holds K/2
/// angular frequencies in 1/position-unit; for images, `wx`/`wy` hold K/2
/// planar frequencies (positions live in [-1, 1], so these are
/// dimensionless). All frequencies are computed in double precision and cast
/// to Scalar on construction.
template <typename Scalar = double>
struct FrequencySpec {
  Modality modality;
  Index dim = 0;       // embedding width K, even
  Vector<Scalar> omega;  // text/audio
  Vector<Scalar> wx, wy;  // image

  Index half() const { return dim / 2; }
};

namespace detail {
inline void require_even_dim(Index k) {
  if (k < 2 || k % 2 != 0) {
    throw std::invalid_argument("embedding width must be even and >= 2, got " + std::to_string(k));
  }
}
}  // namespace detail

/// Token-index frequencies omega_k = 10000^(-2k/K), k = 0..K/2-1, so the
/// first component oscillates with unit angular frequency.
template <typename Scalar = double>
FrequencySpec<Scalar> text_spec(Index dim) {
  detail::require_even_dim(dim);
  FrequencySpec<Scalar> spec;
  spec.modality = Modality::text;
  spec.dim = dim;
  spec.omega.resize(dim / 2);
  for (Index k = 0; k < dim / 2; ++k) {
    spec.omega[k] = static_cast<Scalar>(
        std::pow(10000.0, -2.0 * static_cast<double>(k) / static_cast<double>(dim)));
  }
  return spec;
}

/// Timestamp frequencies omega_k = 30 * 10000^(-2k/K); omega[0] is exactly
/// 30 rad/s, which keeps ~30 ms specificity available for minutes-long audio.
template <typename Scalar = double>
FrequencySpec<Scalar> audio_spec(Index dim) {
  detail::require_even_dim(dim);
  FrequencySpec<Scalar> spec;
  spec.modality = Modality::audio;
  spec.dim = dim;
  spec.omega.resize(dim / 2);
  for (Index k = 0; k < dim / 2; ++k) {
    spec.omega[k] = static_cast<Scalar>(
        30.0 * std::pow(10000.0, -2.0 * static_cast<double>(k) / static_cast<double>(dim)));
  }
  return spec;
}

/// Planar frequencies: magnitudes rho_j = 10^(j / (K/2)) for j = 1..K/2 and
/// directions at angles 0, 1, 2, ... radians, i.e.
///   wx[j-1] = rho_j * cos(j-1),  wy[j-1] = rho_j * sin(j-1).
/// Magnitude and angle indices are offset by one on purpose; this matches
/// the reference recipe exactly. With `approx_magnitudes` the magnitudes are
/// the simpler 10^linspace(0, 1, K/2) ladder instead.
template <typename Scalar = double>
FrequencySpec<Scalar> image_spec(Index dim, bool approx_magnitudes = false) {
  detail::require_even_dim(dim);
  FrequencySpec<Scalar> spec;
  spec.modality = Modality::image;
  spec.dim = dim;
  const Index half = dim / 2;
  spec.wx.resize(half);
  spec.wy.resize(half);
  for (Index j = 0; j < half; ++j) {
    double rho;
    if (approx_magnitudes) {
      // linspace(0, 1, half): a single point degenerates to 0.
      const double t = half == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(half - 1);
      rho = std::pow(10.0, t);
    } else {
      rho = std::pow(10.0, static_cast<double>(j + 1) / static_cast<double>(half));
    }
    spec.wx[j] = static_cast<Scalar>(rho * std::cos(static_cast<double>(j)));
    spec.wy[j] = static_cast<Scalar>(rho * std::sin(static_cast<double>(j)));
  }
  return spec;
}

}  // namespace cape
