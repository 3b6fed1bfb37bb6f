#include <doctest.h>

#include <cmath>

#include "cnm/error.hpp"
#include "cnm/eval.hpp"
#include "cnm/kernels.hpp"
#include "cnm/maps.hpp"
#include "support/oracles.hpp"

using namespace cnm;

namespace {

struct ZeroMap {
  Index d, k;
  Index input_dim() const { return d; }
  Index output_dim() const { return k; }
  void project_into(VectorRef, Vector& out) const { out = Vector::Zero(k); }
};

}  // namespace

TEST_CASE("kernel_eval") {
  const KernelSpec spec{KernelFamily::Rbf, 0.5};
  Vector x(3), y(3);
  x << 1, 2, 3;
  CHECK(kernel_eval(spec, x, x) == 1.0);
  y << 2, 2, 2;  // ||x - y||^2 = 2
  CHECK(kernel_eval(spec, x, y) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(kernel_eval(spec, x, y) == doctest::Approx(0.367879).epsilon(1e-6));

  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Vector a = oracle::random_vector(5, rng), b = oracle::random_vector(5, rng);
    CHECK(kernel_eval(spec, a, b) == kernel_eval(spec, b, a));
  }
  CHECK_THROWS_AS(kernel_eval(spec, Vector::Zero(2), Vector::Zero(3)), InvalidArgument);
  CHECK_THROWS_AS((KernelSpec{KernelFamily::Rbf, 0.0}.validate()), InvalidArgument);
}

TEST_CASE("sample_spectral matches the RBF spectral density") {
  const KernelSpec spec{KernelFamily::Rbf, 0.5};
  Rng rng(2024);
  const Matrix theta = sample_spectral(spec, 1, 100000, rng);
  const double mean = theta.mean();
  const double var = (theta.array() - mean).square().sum() / (theta.size() - 1);
  CHECK(var >= 0.97);
  CHECK(var <= 1.03);
  // Standard error of the mean is sqrt(2 gamma / n).
  CHECK(std::abs(mean) <= 4.0 * std::sqrt(1.0 / 100000.0));

  Rng a(9), b(9);
  CHECK(sample_spectral(spec, 3, 4, a) == sample_spectral(spec, 3, 4, b));
  CHECK_THROWS_AS(sample_spectral(spec, 0, 4, a), InvalidArgument);
}

TEST_CASE("sample_phases") {
  Rng rng(3);
  const Vector b = sample_phases(100000, rng);
  CHECK(b.minCoeff() >= 0.0);
  CHECK(b.maxCoeff() < 2.0 * M_PI);
  // Uniform[0, 2pi) has sd 2pi/sqrt(12).
  const double se = 2.0 * M_PI / std::sqrt(12.0) / std::sqrt(100000.0);
  CHECK(std::abs(b.mean() - M_PI) <= 4.0 * se);
  Rng a1(5), a2(5);
  CHECK(sample_phases(7, a1) == sample_phases(7, a2));
}

TEST_CASE("gram_exact") {
  const KernelSpec spec{KernelFamily::Rbf, 0.7};
  SUBCASE("single point") {
    const auto ds = oracle::random_dataset(1, 3, 1);
    const auto g = gram_exact(spec, ds);
    CHECK(g.values.rows() == 1);
    CHECK(g.values(0, 0) == 1.0);
  }
  SUBCASE("entrywise oracle, symmetry, PSD") {
    const auto ds = oracle::random_dataset(3, 4, 2);
    const auto g = gram_exact(spec, ds);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j)
        CHECK(g.values(i, j) == doctest::Approx(oracle::rbf(0.7, ds.row(i), ds.row(j))).epsilon(1e-14));
    const auto big = oracle::random_dataset(60, 3, 3);
    const auto gb = gram_exact(spec, big);
    CHECK((gb.values - gb.values.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(gb.values.diagonal().isOnes());
    CHECK(psd_check(gb.values) >= -1e-8 * 60);
  }
  SUBCASE("cap") {
    const auto ds = oracle::random_dataset(11, 2, 2);
    CHECK_THROWS_AS(gram_exact(spec, ds, 10), InvalidArgument);
  }
}

TEST_CASE("approx_mse") {
  const auto ds = oracle::random_dataset(20, 3, 4, 0.5);
  const KernelSpec spec{KernelFamily::Rbf, 0.5};
  SUBCASE("zero map on diagonal pairs is exactly one") {
    std::vector<PairSample> pairs;
    for (Index i = 0; i < ds.size(); ++i) pairs.push_back({i, i});
    CHECK(approx_mse(ZeroMap{3, 4}, spec, ds, std::span<const PairSample>(pairs)) == 1.0);
  }
  SUBCASE("large random Fourier map nearly reproduces K") {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      Rng rng(seed);
      const auto map = init_random_dense(spec, 3, 8192, true, rng);
      const double mse = approx_mse(map, spec, ds);
      CHECK(mse >= 0.0);
      total += mse / 4.0;
    }
    CHECK(total < 1e-3);
  }
  SUBCASE("full matrix agrees with explicit all-pairs list") {
    Rng rng(1);
    const auto map = init_random_dense(spec, 3, 16, true, rng);
    std::vector<PairSample> all;
    for (Index i = 0; i < ds.size(); ++i)
      for (Index j = 0; j < ds.size(); ++j) all.push_back({i, j});
    CHECK(approx_mse(map, spec, ds) ==
          doctest::Approx(approx_mse(map, spec, ds, std::span<const PairSample>(all))).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(approx_mse(ZeroMap{2, 4}, spec, ds), InvalidArgument);
  }
}

TEST_CASE("Bochner expectation identity by quadrature over the phase") {
  // Trapezoidal rule is exact for trigonometric polynomials of degree < nodes.
  constexpr int nodes = 64;
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    const Vector theta = oracle::random_vector(3, rng);
    const Vector x = oracle::random_vector(3, rng), y = oracle::random_vector(3, rng);
    double avg = 0.0;
    for (int q = 0; q < nodes; ++q) {
      const double b = 2.0 * M_PI * q / nodes;
      avg += 2.0 * std::cos(theta.dot(x) + b) * std::cos(theta.dot(y) + b) / nodes;
    }
    CHECK(std::abs(avg - std::cos(theta.dot(x - y))) <= 1e-6);
  }
}

TEST_CASE("random Fourier MSE falls as k grows") {
  const auto ds = oracle::random_dataset(60, 4, 21, 0.6);
  const KernelSpec spec{KernelFamily::Rbf, 0.4};
  double prev = 1e9;
  for (Index k : {16, 64, 256, 1024}) {
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      mean += approx_mse(init_random_dense(spec, 4, k, true, rng), spec, ds) / 10.0;
    }
    CHECK(mean < prev);
    prev = mean;
  }
}
