#pragma once

// Independent scalar reimplementation of the embedding and augmentation
// pipeline, used as an oracle by the equivalence checks. Deliberately free
// of Eigen and of the main library headers: plain vectors, plain loops, its
// own copy of the generator. Any drift between this file and the library is
// a bug in one of them.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cape::oracle {

struct SplitMix {
  std::uint64_t state;

  explicit SplitMix(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) { return low + (high - low) * next_double(); }
};

using Row = std::vector<double>;
using Table = std::vector<Row>;

inline Row text_frequencies(int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("oracle: dim must be even and >= 2");
  Row omega(static_cast<std::size_t>(dim / 2));
  for (int k = 0; k < dim / 2; ++k) {
    omega[static_cast<std::size_t>(k)] = std::pow(10000.0, -2.0 * k / dim);
  }
  return omega;
}

inline Row audio_frequencies(int dim) {
  Row omega = text_frequencies(dim);
  for (double& w : omega) w *= 30.0;
  return omega;
}

inline void image_frequencies(int dim, Row& wx, Row& wy) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("oracle: dim must be even and >= 2");
  const int half = dim / 2;
  wx.resize(static_cast<std::size_t>(half));
  wy.resize(static_cast<std::size_t>(half));
  for (int j = 0; j < half; ++j) {
    const double rho = std::pow(10.0, static_cast<double>(j + 1) / half);
    wx[static_cast<std::size_t>(j)] = rho * std::cos(static_cast<double>(j));
    wy[static_cast<std::size_t>(j)] = rho * std::sin(static_cast<double>(j));
  }
}

// One [cos(w p) ... | sin(w p) ...] row per position; NaN rows for NaN positions.
inline Table embed_1d(const Row& positions, const Row& omega) {
  const std::size_t half = omega.size();
  Table rows(positions.size(), Row(2 * half));
  for (std::size_t t = 0; t < positions.size(); ++t) {
    for (std::size_t k = 0; k < half; ++k) {
      rows[t][k] = std::cos(omega[k] * positions[t]);
      rows[t][half + k] = std::sin(omega[k] * positions[t]);
    }
  }
  return rows;
}

// Phase pi*(wx*x + wy*y) per grid point, row-major over the grid.
inline Table embed_2d(const Table& x, const Table& y, const Row& wx, const Row& wy) {
  const std::size_t half = wx.size();
  Table rows;
  rows.reserve(x.size() * (x.empty() ? 0 : x[0].size()));
  constexpr double kPi = 3.14159265358979323846;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x[i].size(); ++j) {
      Row row(2 * half);
      for (std::size_t k = 0; k < half; ++k) {
        const double phase = kPi * (wx[k] * x[i][j] + wy[k] * y[i][j]);
        row[k] = std::cos(phase);
        row[half + k] = std::sin(phase);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

struct AugmentParams {
  double max_global_shift = 0.0;
  double max_local_shift = 0.0;
  double max_scale = 1.0;
  bool mean_normalize = true;
  bool train = true;
};

inline Table augment_1d(const Table& positions, const AugmentParams& p, SplitMix& rng) {
  if (!(p.max_scale >= 1.0)) throw std::invalid_argument("oracle: max_scale must be >= 1");
  Table out = positions;
  if (p.mean_normalize) {
    for (Row& row : out) {
      double sum = 0.0;
      std::size_t count = 0;
      for (double v : row) {
        if (!std::isnan(v)) {
          sum += v;
          ++count;
        }
      }
      if (count == 0) throw std::invalid_argument("oracle: all-padding row");
      const double mean = sum / static_cast<double>(count);
      for (double& v : row) v -= mean;
    }
  }
  if (!p.train) return out;
  const std::size_t batch = out.size();
  Row delta(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    delta[b] = rng.uniform(-p.max_global_shift, p.max_global_shift);
  }
  Table local(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    local[b].resize(out[b].size());
    for (double& v : local[b]) v = rng.uniform(-p.max_local_shift, p.max_local_shift);
  }
  const double log_max = std::log(p.max_scale);
  for (std::size_t b = 0; b < batch; ++b) {
    const double scale = std::exp(rng.uniform(-log_max, log_max));
    for (std::size_t t = 0; t < out[b].size(); ++t) {
      out[b][t] = ((out[b][t] + delta[b]) + local[b][t]) * scale;
    }
  }
  return out;
}

struct Grid {
  std::vector<Table> x, y;  // one PxP table per batch element
};

inline Grid augment_grid_2d(int side, int batch, const AugmentParams& p, SplitMix& rng) {
  if (!(p.max_scale >= 1.0)) throw std::invalid_argument("oracle: max_scale must be >= 1");
  if (side < 1 || batch < 1) throw std::invalid_argument("oracle: bad grid shape");
  Row line(static_cast<std::size_t>(side));
  if (side == 1) {
    line[0] = -1.0;
  } else {
    for (int i = 0; i < side; ++i) {
      line[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (side - 1);
    }
    line[static_cast<std::size_t>(side - 1)] = 1.0;
  }
  Grid g;
  g.x.assign(static_cast<std::size_t>(batch),
             Table(static_cast<std::size_t>(side), Row(static_cast<std::size_t>(side))));
  g.y = g.x;
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        g.x[b][i][j] = line[static_cast<std::size_t>(i)];
        g.y[b][i][j] = line[static_cast<std::size_t>(j)];
      }
    }
  }
  if (!p.train) return g;
  Row dx(static_cast<std::size_t>(batch)), dy(static_cast<std::size_t>(batch));
  for (double& v : dx) v = rng.uniform(-p.max_global_shift, p.max_global_shift);
  for (double& v : dy) v = rng.uniform(-p.max_global_shift, p.max_global_shift);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        g.x[b][i][j] += dx[static_cast<std::size_t>(b)];
        g.x[b][i][j] += rng.uniform(-p.max_local_shift, p.max_local_shift);
      }
    }
  }
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        g.y[b][i][j] += dy[static_cast<std::size_t>(b)];
        g.y[b][i][j] += rng.uniform(-p.max_local_shift, p.max_local_shift);
      }
    }
  }
  const double log_max = std::log(p.max_scale);
  for (int b = 0; b < batch; ++b) {
    const double scale = std::exp(rng.uniform(-log_max, log_max));
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        g.x[b][i][j] *= scale;
        g.y[b][i][j] *= scale;
      }
    }
  }
  return g;
}

}  // namespace cape::oracle
