#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "cape/embedding.hpp"
#include "cape/frequency.hpp"
#include "cape/gradcheck.hpp"
#include "cape/positions.hpp"
#include "cape/rng.hpp"

using namespace cape;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

PositionGrid2D<double> single_point(double x, double y) {
  PositionGrid2D<double> g;
  g.x.push_back(Matrix<double>::Constant(1, 1, x));
  g.y.push_back(Matrix<double>::Constant(1, 1, y));
  return g;
}

}  // namespace

TEST_CASE("frequency ladders") {
  const auto text = text_spec<double>(4);
  CHECK(text.omega[0] == 1.0);
  CHECK(text.omega[1] == 0.01);  // 10000^(-2/4), exactly representable result

  const auto audio = audio_spec<double>(4);
  CHECK(audio.omega[0] == 30.0);
  CHECK(audio.omega[1] == 0.3);

  const auto big = text_spec<double>(768);
  CHECK(big.omega[0] == 1.0);
  CHECK(big.omega[383] == doctest::Approx(std::pow(10000.0, -766.0 / 768.0)).epsilon(1e-15));

  const auto image = image_spec<double>(768);
  // First magnitude is 10^(1/384) at angle 0, so wx[0] carries it all.
  CHECK(image.wx[0] == doctest::Approx(1.006014329232854).epsilon(1e-15));
  CHECK(image.wy[0] == 0.0);
  // Magnitude at storage index j is 10^((j+1)/half), angle is j radians.
  const double rho5 = std::hypot(image.wx[5], image.wy[5]);
  CHECK(rho5 == doctest::Approx(std::pow(10.0, 6.0 / 384.0)).epsilon(1e-12));
  CHECK(std::atan2(image.wy[5], image.wx[5]) == doctest::Approx(5.0 - 2.0 * M_PI).epsilon(1e-9));

  const auto approx = image_spec<double>(768, true);
  CHECK(std::hypot(approx.wx[0], approx.wy[0]) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::hypot(approx.wx[383], approx.wy[383]) == doctest::Approx(10.0).epsilon(1e-12));

  CHECK_THROWS_AS(text_spec<double>(3), std::invalid_argument);
  CHECK_THROWS_AS(audio_spec<double>(0), std::invalid_argument);
  CHECK_THROWS_AS(image_spec<double>(7), std::invalid_argument);
}

TEST_CASE("zero position gives the constant row") {
  const auto spec = text_spec<double>(4);
  const auto emb = embed_1d(vec({0.0, 0.0, 0.0}), spec);
  REQUIRE(emb.tokens() == 3);
  REQUIRE(emb.dim() == 4);
  for (Index i = 0; i < 3; ++i) {
    CHECK(emb.values(i, 0) == 1.0);
    CHECK(emb.values(i, 1) == 1.0);
    CHECK(emb.values(i, 2) == 0.0);
    CHECK(emb.values(i, 3) == 0.0);
  }
  const auto audio = embed_1d(vec({0.0}), audio_spec<double>(6));
  CHECK(audio.values.row(0).head(3).isApproxToConstant(1.0, 0.0));
  CHECK(audio.values.row(0).tail(3).isZero(0.0));
}

TEST_CASE("embedding of p+m equals the m-shift operator") {
  const auto spec = text_spec<double>(64);
  const auto base = embed_1d(vec({3.0}), spec);
  const auto target = embed_1d(vec({5.0}), spec);
  const auto shifted = shift_apply(base, 2.0, spec);
  CHECK((shifted.values - target.values).cwiseAbs().maxCoeff() < 1e-9);

  const auto spec128 = text_spec<double>(128);
  const auto a = embed_1d(vec({4.0}), spec128);
  const auto b = embed_1d(vec({7.0}), spec128);
  CHECK((shift_apply(a, 3.0, spec128).values - b.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("zero shift is the identity, opposite shifts cancel") {
  const auto spec = audio_spec<double>(32);
  RngStream rng(17);
  Eigen::VectorXd p(5);
  for (Index i = 0; i < 5; ++i) p[i] = rng.uniform(-40.0, 40.0);
  const auto emb = embed_1d(p, spec);
  const auto same = shift_apply(emb, 0.0, spec);
  CHECK(same.values == emb.values);
  const auto back = shift_apply(shift_apply(emb, 2.25, spec), -2.25, spec);
  CHECK((back.values - emb.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unit circle pairs and row norm") {
  RngStream rng(23);
  Eigen::VectorXd p(8);
  for (Index i = 0; i < 8; ++i) p[i] = rng.uniform(-100.0, 100.0);
  for (Index dim : {8, 64}) {
    for (int which = 0; which < 2; ++which) {
      const auto spec = which == 0 ? text_spec<double>(dim) : audio_spec<double>(dim);
      const auto emb = embed_1d(p, spec);
      const Index half = dim / 2;
      for (Index i = 0; i < emb.tokens(); ++i) {
        for (Index k = 0; k < half; ++k) {
          const double c = emb.values(i, k), s = emb.values(i, k + half);
          CHECK(std::abs(c * c + s * s - 1.0) < 1e-12);
        }
        CHECK(std::abs(emb.values.row(i).norm() - std::sqrt(static_cast<double>(half))) < 1e-9);
      }
    }
  }
}

TEST_CASE("NaN positions give all-NaN rows and leave the rest intact") {
  const auto spec = text_spec<double>(8);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto emb = embed_1d(vec({1.0, nan, 2.0}), spec);
  const auto clean = embed_1d(vec({1.0, 2.0}), spec);
  CHECK(emb.values.row(0) == clean.values.row(0));
  CHECK(emb.values.row(2) == clean.values.row(1));
  for (Index k = 0; k < 8; ++k) {
    CHECK(std::isnan(emb.values(1, k)));
  }
}

TEST_CASE("1d embedding rejects bad arguments") {
  const auto spec = text_spec<double>(8);
  CHECK_THROWS_AS(embed_1d(Eigen::VectorXd(), spec), std::invalid_argument);
  CHECK_THROWS_AS(embed_1d(vec({0.0}), image_spec<double>(8)), std::invalid_argument);
  CHECK_THROWS_AS(shift_apply(embed_1d(vec({0.0}), spec), 1.0, text_spec<double>(16)),
                  std::invalid_argument);
}

TEST_CASE("2d embedding at the origin and phase structure") {
  const auto spec = image_spec<double>(6);
  const auto emb = embed_2d(single_point(0.0, 0.0), spec);
  REQUIRE(emb.tokens() == 1);
  CHECK(emb.values.row(0).head(3).isApproxToConstant(1.0, 0.0));
  CHECK(emb.values.row(0).tail(3).isZero(0.0));

  const auto at = embed_2d(single_point(0.37, -0.61), spec);
  for (Index k = 0; k < 3; ++k) {
    const double phase = M_PI * (spec.wx[k] * 0.37 + spec.wy[k] * -0.61);
    CHECK(at.values(0, k) == doctest::Approx(std::cos(phase)).epsilon(1e-15));
    CHECK(at.values(0, k + 3) == doctest::Approx(std::sin(phase)).epsilon(1e-15));
  }
}

TEST_CASE("2d embedding flattens batches row-major") {
  const auto spec = image_spec<double>(4);
  const auto grid = image_positions(2, 3);
  PositionGrid2D<double> batch;
  batch.x = {grid.x[0], grid.x[0]};
  batch.y = {grid.y[0], grid.y[0]};
  const auto one = embed_2d(grid, spec);
  const auto two = embed_2d(batch, spec);
  REQUIRE(one.tokens() == 6);
  REQUIRE(two.tokens() == 12);
  CHECK(two.values.topRows(6) == one.values);
  CHECK(two.values.bottomRows(6) == one.values);
  // Token order is row-major: token 1 is grid cell (0, 1).
  const auto cell = embed_2d(single_point(grid.x[0](0, 1), grid.y[0](0, 1)), spec);
  CHECK(one.values.row(1) == cell.values.row(0));
}

TEST_CASE("2d dot products are translation invariant") {
  const auto spec = image_spec<double>(64);
  const auto a = embed_2d(single_point(0.2, -0.4), spec);
  const auto b = embed_2d(single_point(-0.1, 0.3), spec);
  const double base = a.values.row(0).dot(b.values.row(0));
  const auto a2 = embed_2d(single_point(0.2 + 0.05, -0.4 - 0.02), spec);
  const auto b2 = embed_2d(single_point(-0.1 + 0.05, 0.3 - 0.02), spec);
  CHECK(std::abs(a2.values.row(0).dot(b2.values.row(0)) - base) < 1e-9);
}

TEST_CASE("layout conversion round trips and interleaves pairs") {
  const auto spec = text_spec<double>(8);
  const auto conc = embed_1d(vec({0.5, 1.5, 2.5}), spec);
  const auto inter = to_layout(conc, Layout::interleaved);
  REQUIRE(inter.layout == Layout::interleaved);
  for (Index k = 0; k < 4; ++k) {
    CHECK(inter.values.col(2 * k) == conc.values.col(k));
    CHECK(inter.values.col(2 * k + 1) == conc.values.col(k + 4));
  }
  const auto back = to_layout(inter, Layout::concatenated);
  CHECK(back.values == conc.values);

  // The shift operator acts on pairs in either layout.
  const auto s1 = to_layout(shift_apply(conc, 1.25, spec), Layout::interleaved);
  const auto s2 = shift_apply(inter, 1.25, spec);
  CHECK(s1.values == s2.values);
}

TEST_CASE("precomputed table lookup wraps around") {
  const auto spec = text_spec<double>(8);
  AbsposTable<double> table;
  table.table = embed_1d(text_positions(5), spec).values;
  CHECK(abspos_lookup(table, 0) == table.table.row(0).transpose());
  CHECK(abspos_lookup(table, 3) == table.table.row(3).transpose());
  CHECK(abspos_lookup(table, 5) == table.table.row(0).transpose());
  CHECK(abspos_lookup(table, 13) == table.table.row(3).transpose());
  AbsposTable<double> empty;
  CHECK_THROWS_AS(abspos_lookup(empty, 0), std::invalid_argument);
}

TEST_CASE("float cast keeps values within float precision") {
  const auto spec = audio_spec<double>(16);
  const auto emb = embed_1d(vec({0.125, 3.5}), spec);
  const auto f = emb.cast<float>();
  CHECK((f.values.cast<double>() - emb.values).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("1d position jacobian matches finite differences") {
  for (int which = 0; which < 2; ++which) {
    const Index dim = which == 0 ? 16 : 8;
    const auto spec = which == 0 ? text_spec<double>(dim) : audio_spec<double>(dim);
    const double p0 = which == 0 ? 1.7 : 2.3;
    VectorFunction f = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
      return embed_1d(p, spec).values.row(0).transpose();
    };
    Eigen::VectorXd point(1);
    point[0] = p0;
    Eigen::MatrixXd jac(dim, 1);
    jac.col(0) = embed_1d_position_jacobian(point, spec).row(0).transpose();
    CHECK(gradient_check(f, point, jac, 1e-5) < 1e-4);
  }
}

TEST_CASE("2d position jacobian matches finite differences") {
  const auto spec = image_spec<double>(12);
  VectorFunction f = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return embed_2d(single_point(p[0], p[1]), spec).values.row(0).transpose();
  };
  Eigen::VectorXd point(2);
  point << 0.37, -0.61;
  const auto [jx, jy] = embed_2d_position_jacobian(single_point(point[0], point[1]), spec);
  Eigen::MatrixXd jac(12, 2);
  jac.col(0) = jx.row(0).transpose();
  jac.col(1) = jy.row(0).transpose();
  CHECK(gradient_check(f, point, jac, 1e-5) < 1e-4);
}

TEST_CASE("gradient_check is exact on linear maps and rejects bad input") {
  RngStream rng(31);
  Eigen::MatrixXd a(3, 4);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 4; ++j) a(i, j) = rng.uniform(-2.0, 2.0);
  }
  VectorFunction f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; };
  CHECK(gradient_check(f, Eigen::VectorXd::Zero(4), a, 1e-5) < 1e-10);

  Eigen::VectorXd bad(4);
  bad << 0.0, std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0;
  CHECK_THROWS_AS(gradient_check(f, bad, a, 1e-5), std::invalid_argument);
  CHECK_THROWS_AS(gradient_check(f, Eigen::VectorXd::Zero(4), a, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gradient_check(f, Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Zero(2, 2), 1e-5),
                  std::invalid_argument);
}
