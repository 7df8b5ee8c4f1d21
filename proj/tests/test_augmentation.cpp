#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cape/augmentation.hpp"
#include "cape/positions.hpp"
#include "cape/rng.hpp"
#include "cross_check.hpp"

using namespace cape;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

PositionSet1D<double> rows1(std::initializer_list<double> xs) {
  PositionSet1D<double> m(1, static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) m(0, i++) = x;
  return m;
}

}  // namespace

TEST_CASE("inference mean-normalization centers rows and skips padding") {
  AugmentationConfig cfg;
  cfg.mode = AugmentationMode::inference;
  RngStream rng(42);
  const auto out = augment_positions_1d(rows1({0.0, 1.0, 2.0}), cfg, rng);
  CHECK(out(0, 0) == -1.0);
  CHECK(out(0, 1) == 0.0);
  CHECK(out(0, 2) == 1.0);

  RngStream rng2(42);
  const auto padded = augment_positions_1d(rows1({0.0, 1.0, kNan}), cfg, rng2);
  CHECK(padded(0, 0) == -0.5);
  CHECK(padded(0, 1) == 0.5);
  CHECK(std::isnan(padded(0, 2)));

  // Inference never consumes the stream.
  CHECK(rng.next_u64() == RngStream(42).next_u64());
  CHECK(rng2.next_u64() == RngStream(42).next_u64());
}

TEST_CASE("mean-normalization is idempotent") {
  AugmentationConfig cfg;
  cfg.mode = AugmentationMode::inference;
  RngStream rng(1);
  const auto once = augment_positions_1d(rows1({3.0, 7.0, 11.0, kNan}), cfg, rng);
  const auto twice = augment_positions_1d(once, cfg, rng);
  for (Index t = 0; t < 3; ++t) {
    CHECK(twice(0, t) == once(0, t));
  }
}

TEST_CASE("degenerate train config is the identity") {
  AugmentationConfig cfg;
  cfg.mean_normalize = false;
  RngStream rng(5);
  const auto in = rows1({-2.0, 0.0, 3.5, 100.0});
  const auto out = augment_positions_1d(in, cfg, rng);
  CHECK(out == in);
}

TEST_CASE("train draws follow the frozen order") {
  AugmentationConfig cfg;
  cfg.max_global_shift = 2.0;
  cfg.max_local_shift = 0.25;
  cfg.max_scale = 1.5;
  cfg.mean_normalize = false;
  PositionSet1D<double> p(2, 3);
  p << 0.0, 1.0, 2.0, 10.0, 20.0, 30.0;
  RngStream rng(77);
  const auto out = augment_positions_1d(p, cfg, rng);

  RngStream replay(77);
  double delta[2];
  for (double& d : delta) d = replay.uniform(-2.0, 2.0);
  double local[2][3];
  for (auto& row : local) {
    for (double& l : row) l = replay.uniform(-0.25, 0.25);
  }
  const double log_max = std::log(1.5);
  for (Index b = 0; b < 2; ++b) {
    const double scale = std::exp(replay.uniform(-log_max, log_max));
    for (Index t = 0; t < 3; ++t) {
      CHECK(out(b, t) == ((p(b, t) + delta[b]) + local[b][t]) * scale);
    }
  }
}

TEST_CASE("padding flows through augmentation without shifting the stream") {
  AugmentationConfig cfg;
  cfg.max_global_shift = 1.0;
  cfg.max_local_shift = 0.5;
  cfg.max_scale = 1.2;
  cfg.mean_normalize = false;
  RngStream a(9), b(9);
  const auto with_nan = augment_positions_1d(rows1({0.0, 1.0, kNan}), cfg, a);
  const auto without = augment_positions_1d(rows1({0.0, 1.0, 5.0}), cfg, b);
  CHECK(with_nan(0, 0) == without(0, 0));
  CHECK(with_nan(0, 1) == without(0, 1));
  CHECK(std::isnan(with_nan(0, 2)));
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("1d augmentation agrees with the scalar oracle") {
  AugmentationConfig cfg;
  cfg.max_global_shift = 3.0;
  cfg.max_local_shift = 0.7;
  cfg.max_scale = 1.8;
  cfg.mean_normalize = true;
  PositionSet1D<double> p(2, 4);
  p << 0.0, 1.0, 2.0, kNan, 5.0, 6.0, 9.0, 11.0;
  RngStream rng(123);
  const auto out = augment_positions_1d(p, cfg, rng);

  oracle::SplitMix orng(123);
  oracle::AugmentParams op;
  op.max_global_shift = 3.0;
  op.max_local_shift = 0.7;
  op.max_scale = 1.8;
  op.mean_normalize = true;
  const auto expect = oracle::augment_1d({{0.0, 1.0, 2.0, kNan}, {5.0, 6.0, 9.0, 11.0}}, op, orng);
  for (Index b = 0; b < 2; ++b) {
    for (Index t = 0; t < 4; ++t) {
      if (std::isnan(expect[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)])) {
        CHECK(std::isnan(out(b, t)));
      } else {
        CHECK(std::abs(out(b, t) - expect[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)]) <
              1e-12);
      }
    }
  }
}

TEST_CASE("augmentation preserves token order when bounds allow") {
  AugmentationConfig cfg;
  cfg.max_global_shift = 7.0;
  cfg.max_local_shift = 0.5;  // strictly below half the unit gap
  cfg.max_scale = 1.6;
  cfg.mean_normalize = true;
  PositionSet1D<double> p(1, 20);
  for (Index t = 0; t < 20; ++t) p(0, t) = static_cast<double>(t);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RngStream rng(seed);
    const auto out = augment_positions_1d(p, cfg, rng);
    for (Index t = 0; t + 1 < 20; ++t) {
      CHECK(out(0, t + 1) > out(0, t));
    }
  }
}

TEST_CASE("augmentation rejects bad arguments") {
  RngStream rng(2);
  AugmentationConfig bad_scale;
  bad_scale.max_scale = 0.9;
  CHECK_THROWS_AS(augment_positions_1d(rows1({0.0}), bad_scale, rng), std::invalid_argument);
  AugmentationConfig neg_shift;
  neg_shift.max_global_shift = -1.0;
  CHECK_THROWS_AS(augment_positions_1d(rows1({0.0}), neg_shift, rng), std::invalid_argument);
  AugmentationConfig cfg;
  CHECK_THROWS_AS(augment_positions_1d(PositionSet1D<double>(), cfg, rng), std::invalid_argument);
  CHECK_THROWS_AS(augment_positions_1d(rows1({kNan, kNan}), cfg, rng), std::invalid_argument);
}

TEST_CASE("2d grid construction uses the reference orientation") {
  AugmentationConfig cfg;
  cfg.mode = AugmentationMode::inference;
  cfg.mean_normalize = false;
  RngStream rng(3);
  const auto grid = augment_grid_2d(3, 1, cfg, rng);
  REQUIRE(grid.batch() == 1);
  // x varies along the first index here: row i of x is constant line[i].
  for (Index j = 0; j < 3; ++j) {
    CHECK(grid.x[0](0, j) == -1.0);
    CHECK(grid.x[0](1, j) == 0.0);
    CHECK(grid.x[0](2, j) == 1.0);
    CHECK(grid.y[0](j, 0) == -1.0);
    CHECK(grid.y[0](j, 1) == 0.0);
    CHECK(grid.y[0](j, 2) == 1.0);
  }
  CHECK(rng.next_u64() == RngStream(3).next_u64());
}

TEST_CASE("2d scale-only augmentation is a replayable similarity transform") {
  AugmentationConfig cfg;
  cfg.max_global_shift = 0.0;
  cfg.max_local_shift = 0.0;
  cfg.max_scale = 2.0;
  cfg.mean_normalize = false;
  const Index p = 3, batch = 2;
  RngStream rng(21);
  const auto grid = augment_grid_2d(p, batch, cfg, rng);

  RngStream replay(21);
  for (Index skip = 0; skip < 2 * batch + 2 * batch * p * p; ++skip) replay.next_double();
  const auto line = linspace(-1.0, 1.0, p);
  const double log_max = std::log(2.0);
  for (Index b = 0; b < batch; ++b) {
    const double scale = std::exp(replay.uniform(-log_max, log_max));
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p; ++j) {
        CHECK(grid.x[static_cast<std::size_t>(b)](i, j) == ((line[i] + 0.0) + 0.0) * scale);
        CHECK(grid.y[static_cast<std::size_t>(b)](i, j) == ((line[j] + 0.0) + 0.0) * scale);
      }
    }
  }
}

TEST_CASE("2d augmentation agrees with the scalar oracle") {
  const auto cfg_lib = image_augmentation_defaults(5);
  RngStream rng(31);
  const auto grid = augment_grid_2d(5, 2, cfg_lib, rng);

  oracle::SplitMix orng(31);
  oracle::AugmentParams op;
  op.max_global_shift = cfg_lib.max_global_shift;
  op.max_local_shift = cfg_lib.max_local_shift;
  op.max_scale = cfg_lib.max_scale;
  op.mean_normalize = false;
  const auto expect = oracle::augment_grid_2d(5, 2, op, orng);
  for (std::size_t b = 0; b < 2; ++b) {
    for (Index i = 0; i < 5; ++i) {
      for (Index j = 0; j < 5; ++j) {
        CHECK(std::abs(grid.x[b](i, j) -
                       expect.x[b][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) < 1e-12);
        CHECK(std::abs(grid.y[b](i, j) -
                       expect.y[b][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) < 1e-12);
      }
    }
  }
}

TEST_CASE("default image augmentation keeps coordinates inside the bound") {
  const Index p = 14;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto cfg = image_augmentation_defaults(p, seed);
    RngStream rng(seed);
    const auto grid = augment_grid_2d(p, 1, cfg, rng);
    const double bound = (1.0 + 0.5 + 1.0 / 14.0) * 1.4 + 1e-12;
    CHECK(grid.x[0].cwiseAbs().maxCoeff() <= bound);
    CHECK(grid.y[0].cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("2d augmentation rejects bad arguments") {
  AugmentationConfig cfg;
  cfg.mean_normalize = false;
  RngStream rng(4);
  CHECK_THROWS_AS(augment_grid_2d(0, 1, cfg, rng), std::invalid_argument);
  CHECK_THROWS_AS(augment_grid_2d(3, 0, cfg, rng), std::invalid_argument);
}

TEST_CASE("translation pair shares shift and scale, draws independent jitter") {
  AugmentationConfig cfg;
  cfg.max_global_shift = 7.0;
  cfg.max_local_shift = 99.0;  // ignored: pair jitter is always U(-0.5, 0.5)
  cfg.max_scale = 1.3;
  cfg.mean_normalize = false;
  PositionSet1D<double> src(1, 3), tgt(1, 2);
  src << 0.0, 1.0, 2.0;
  tgt << 0.0, 1.0;
  const double alpha = kMtAlphaDe;
  RngStream rng(55);
  const auto [src_out, tgt_out] = augment_mt_pair(src, tgt, alpha, cfg, rng);

  RngStream replay(55);
  const double delta = replay.uniform(-7.0, 7.0);
  double ls[3], lt[2];
  for (double& v : ls) v = replay.uniform(-0.5, 0.5);
  for (double& v : lt) v = replay.uniform(-0.5, 0.5);
  const double log_max = std::log(1.3);
  const double scale = std::exp(replay.uniform(-log_max, log_max));
  for (Index t = 0; t < 3; ++t) {
    CHECK(src_out(0, t) == ((src(0, t) * alpha + delta) + ls[t]) * scale);
  }
  for (Index t = 0; t < 2; ++t) {
    CHECK(tgt_out(0, t) == ((tgt(0, t) + delta) + lt[t]) * scale);
  }
  // Jitter is bounded by 0.5 whatever the config says.
  for (Index t = 0; t < 3; ++t) {
    CHECK(std::abs(src_out(0, t) / scale - (src(0, t) * alpha + delta)) <= 0.5);
  }
}

TEST_CASE("translation pair in inference mode only rescales the source") {
  AugmentationConfig cfg = mt_augmentation_defaults(10.0);
  cfg.mode = AugmentationMode::inference;
  PositionSet1D<double> src(1, 2), tgt(1, 2);
  src << 1.0, 2.0;
  tgt << 1.0, 2.0;
  RngStream rng(66);
  const auto [src_out, tgt_out] = augment_mt_pair(src, tgt, kMtAlphaFr, cfg, rng);
  CHECK(src_out(0, 0) == 1.0 * kMtAlphaFr);
  CHECK(src_out(0, 1) == 2.0 * kMtAlphaFr);
  CHECK(tgt_out == tgt);
  CHECK(rng.next_u64() == RngStream(66).next_u64());
}

TEST_CASE("translation pair rejects bad arguments") {
  AugmentationConfig cfg = mt_augmentation_defaults(5.0);
  PositionSet1D<double> a(1, 2), b(2, 2);
  a << 0.0, 1.0;
  b << 0.0, 1.0, 0.0, 1.0;
  RngStream rng(8);
  CHECK_THROWS_AS(augment_mt_pair(a, a, 0.0, cfg, rng), std::invalid_argument);
  CHECK_THROWS_AS(augment_mt_pair(a, b, 1.0, cfg, rng), std::invalid_argument);
  AugmentationConfig norm = cfg;
  norm.mean_normalize = true;
  CHECK_THROWS_AS(augment_mt_pair(a, a, 1.0, norm, rng), std::invalid_argument);
  CHECK_THROWS_AS(augment_mt_pair(PositionSet1D<double>(), PositionSet1D<double>(), 1.0, cfg, rng),
                  std::invalid_argument);
}

TEST_CASE("corpus ratio constants") {
  CHECK(kMtAlphaDe == 1.0337);
  CHECK(kMtAlphaFr == 1.1632);
}

TEST_CASE("evaluation rescaling stretches both axes") {
  const auto grid = image_positions(2, 2);
  const auto same = rescale_eval_positions(grid, 1.0);
  CHECK(same.x[0] == grid.x[0]);
  CHECK(same.y[0] == grid.y[0]);
  const double low = 160.0 / 224.0;
  const auto smaller = rescale_eval_positions(grid, low);
  CHECK(smaller.x[0](0, 1) == 1.0 * low);
  CHECK(smaller.x[0](0, 0) == -1.0 * low);
  const double high = std::sqrt(384.0 / 224.0);
  CHECK(high == doctest::Approx(1.3093073414159542).epsilon(1e-15));
  const auto larger = rescale_eval_positions(grid, high);
  CHECK(larger.y[0](1, 0) == 1.0 * high);
  CHECK_THROWS_AS(rescale_eval_positions(grid, 0.0), std::invalid_argument);
}

TEST_CASE("modality default factories") {
  const auto image = image_augmentation_defaults(14);
  CHECK(image.max_global_shift == 0.5);
  CHECK(image.max_local_shift == 1.0 / 14.0);
  CHECK(image.max_scale == 1.4);
  CHECK_FALSE(image.mean_normalize);
  CHECK(image.mode == AugmentationMode::train);

  const auto audio = audio_augmentation_defaults(0.010, 1.2);
  CHECK(audio.max_global_shift == 30.0);
  CHECK(audio.max_local_shift == 0.005);
  CHECK(audio.max_scale == 1.2);
  CHECK(audio.mean_normalize);

  const auto mt = mt_augmentation_defaults(10.0);
  CHECK(mt.max_global_shift == 10.0);
  CHECK(mt.max_local_shift == 0.5);
  CHECK(mt.max_scale == 1.0);
  CHECK_FALSE(mt.mean_normalize);
}
