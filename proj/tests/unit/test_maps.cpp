#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cnm/error.hpp"
#include "cnm/eval.hpp"
#include "cnm/maps.hpp"
#include "support/oracles.hpp"

using namespace cnm;

TEST_CASE("dense_project") {
  SUBCASE("zero projection") {
    const DenseFourierMap map(Matrix::Zero(3, 2));
    const Vector z = dense_project(map, Vector::Ones(3));
    CHECK(z(0) == doctest::Approx(1.0));
    CHECK(z(1) == doctest::Approx(1.0));
  }
  SUBCASE("scalar evaluation") {
    Matrix theta(1, 1);
    theta << M_PI;
    const DenseFourierMap map(theta);
    const Vector z = dense_project(map, Vector::Ones(1));
    CHECK(z(0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-15));
  }
  SUBCASE("phases shift the argument") {
    Matrix theta = Matrix::Zero(2, 1);
    Vector b(1);
    b << M_PI / 2;
    const DenseFourierMap map(theta, b);
    CHECK(std::abs(dense_project(map, Vector::Ones(2))(0)) <= 1e-15);
  }
  SUBCASE("errors") {
    const DenseFourierMap map(Matrix::Zero(3, 2));
    CHECK_THROWS_AS(dense_project(map, Vector::Zero(2)), InvalidArgument);
    Vector bad(2);
    bad << 0.0, 7.0;
    CHECK_THROWS_AS(DenseFourierMap(Matrix::Zero(3, 2), bad), InvalidArgument);
  }
}

TEST_CASE("feature maps are bounded") {
  Rng rng(4);
  const KernelSpec spec{KernelFamily::Rbf, 2.0};
  const auto dense = init_random_dense(spec, 5, 7, true, rng);
  const auto circ = init_random_circulant(spec, 5, 13, rng);
  for (int t = 0; t < 50; ++t) {
    const Vector x = oracle::random_vector(5, rng, 3.0);
    const Vector zd = dense.project(x), zc = circ.project(x);
    CHECK(zd.squaredNorm() <= 2.0 + 1e-12);
    CHECK(zc.squaredNorm() <= 2.0 + 1e-12);
    CHECK(zd.cwiseAbs().maxCoeff() <= std::sqrt(2.0 / 7) + 1e-15);
    CHECK(zc.cwiseAbs().maxCoeff() <= std::sqrt(2.0 / 13) + 1e-15);
  }
}

TEST_CASE("circulant_project") {
  SUBCASE("identity generator gives scale * cos(x)") {
    Vector e0 = Vector::Zero(6);
    e0(0) = 1.0;
    const CirculantFourierMap map(6, {e0}, Vector::Ones(6));
    Vector x(6);
    x << 0.1, -0.4, 2, 3, -1, 0;
    const Vector expected = std::sqrt(2.0 / 6) * x.array().cos();
    CHECK((circulant_project(map, x) - expected).norm() <= 1e-14);
  }
  SUBCASE("k = d equals the dense map of circ(r) diag(D)") {
    Rng rng(5);
    const KernelSpec spec{KernelFamily::Rbf, 0.3};
    for (Index d : {3, 16, 128, 257}) {
      const auto map = init_random_circulant(spec, d, d, rng);
      const Matrix rows = oracle::circulant_projection_rows(map.blocks(), map.sign_flip(), d);
      const DenseFourierMap dense(rows.transpose());
      for (int t = 0; t < 3; ++t) {
        const Vector x = oracle::random_vector(d, rng);
        CHECK(oracle::rel_err(circulant_project(map, x), dense_project(dense, x)) <= 1e-10);
        CHECK(oracle::rel_err(circulant_project(map, x), oracle::features(rows, nullptr, x)) <=
              1e-10);
      }
    }
  }
  SUBCASE("blocking and truncation") {
    Rng rng(6);
    const KernelSpec spec{KernelFamily::Rbf, 0.3};
    const Index d = 5;
    const auto map = init_random_circulant(spec, d, 2 * d + 3, rng);
    CHECK(map.num_blocks() == 3);
    CHECK(map.block_width(2) == 3);
    CHECK(map.output_dim() == 13);
    const Matrix rows = oracle::circulant_projection_rows(map.blocks(), map.sign_flip(), 13);
    const Vector x = oracle::random_vector(d, rng);
    CHECK(oracle::rel_err(map.project(x), oracle::features(rows, nullptr, x)) <= 1e-12);

    const auto small = init_random_circulant(spec, 8, 3, rng);
    CHECK(small.num_blocks() == 1);
    const Matrix srows = oracle::circulant_projection_rows(small.blocks(), small.sign_flip(), 3);
    const Vector y = oracle::random_vector(8, rng);
    CHECK(oracle::rel_err(small.project(y), oracle::features(srows, nullptr, y)) <= 1e-12);
  }
  SUBCASE("phases") {
    Rng rng(7);
    const KernelSpec spec{KernelFamily::Rbf, 0.3};
    const auto map = init_random_circulant(spec, 4, 6, rng, true);
    REQUIRE(map.phases());
    const Matrix rows = oracle::circulant_projection_rows(map.blocks(), map.sign_flip(), 6);
    const Vector x = oracle::random_vector(4, rng);
    CHECK(oracle::rel_err(map.project(x), oracle::features(rows, &*map.phases(), x)) <= 1e-12);
  }
  SUBCASE("invalid construction") {
    CHECK_THROWS_AS(CirculantFourierMap(7, {Vector::Ones(3)}, Vector::Ones(3)), InvalidArgument);
    Vector flip(3);
    flip << 1, 0, -1;
    CHECK_THROWS_AS(CirculantFourierMap(3, {Vector::Ones(3)}, flip), InvalidArgument);
    Rng rng(1);
    const auto map = init_random_circulant(KernelSpec{KernelFamily::Rbf, 1.0}, 3, 3, rng);
    CHECK_THROWS_AS(map.project(Vector::Zero(4)), InvalidArgument);
  }
}

TEST_CASE("map_batch") {
  const auto ds = oracle::random_dataset(500, 6, 8);
  Rng rng(9);
  const KernelSpec spec{KernelFamily::Rbf, 0.5};
  const auto dense = init_random_dense(spec, 6, 10, true, rng);
  const auto circ = init_random_circulant(spec, 6, 10, rng);
  std::vector<Index> all(500);
  std::iota(all.begin(), all.end(), Index{0});

  const RowMatrix zd = map_batch(dense, ds, all);
  const RowMatrix zc = map_batch(circ, ds, all);
  double worst = 0.0;
  for (Index i = 0; i < 500; ++i) {
    worst = std::max(worst, (zd.row(i).transpose() - dense.project(ds.row(i))).cwiseAbs().maxCoeff());
    worst = std::max(worst, (zc.row(i).transpose() - circ.project(ds.row(i))).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-12);

  const std::vector<Index> one{42};
  CHECK(map_batch(dense, ds, one).row(0).transpose() == dense.project(ds.row(42)));
  const std::vector<Index> fwd{1, 2, 3}, rev{3, 2, 1};
  const RowMatrix a = map_batch(circ, ds, fwd), b = map_batch(circ, ds, rev);
  CHECK(a.row(0) == b.row(2));
  CHECK(a.row(2) == b.row(0));
}

TEST_CASE("random initialisers") {
  const KernelSpec spec{KernelFamily::Rbf, 0.25};
  SUBCASE("dense") {
    Rng a(1), b(1);
    const auto m1 = init_random_dense(spec, 4, 8, false, a);
    const auto m2 = init_random_dense(spec, 4, 8, false, b);
    CHECK_FALSE(m1.phases());
    CHECK(m1.theta() == m2.theta());
    Rng c(2);
    const auto big = init_random_dense(spec, 1, 50000, true, c);
    REQUIRE(big.phases());
    const double var = big.theta().array().square().mean();
    CHECK(var == doctest::Approx(0.5).epsilon(0.03));
  }
  SUBCASE("circulant") {
    Rng a(3), b(3);
    const auto m1 = init_random_circulant(spec, 64, 64 * 200, a);
    const auto m2 = init_random_circulant(spec, 64, 64 * 200, b);
    CHECK(m1.sign_flip() == m2.sign_flip());
    CHECK(m1.block(7) == m2.block(7));
    for (Index i = 0; i < 64; ++i) CHECK(std::abs(m1.sign_flip()(i)) == 1.0);
    double sq = 0.0;
    for (const auto& r : m1.blocks()) sq += r.squaredNorm();
    CHECK(sq / (64.0 * 200.0) == doctest::Approx(0.5).epsilon(0.03));
  }
}

TEST_CASE("induced Gram matrices are PSD") {
  Rng rng(10);
  const KernelSpec spec{KernelFamily::Rbf, 1.0};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ds = oracle::random_dataset(80, 5, seed);
    const auto dense = init_random_dense(spec, 5, 12, seed % 2 == 0, rng);
    const auto circ = init_random_circulant(spec, 5, 12, rng);
    CHECK(psd_check(feature_gram(dense, ds)) >= -1e-8 * 80);
    CHECK(psd_check(feature_gram(circ, ds)) >= -1e-8 * 80);
  }
}
