#pragma once

#include <cmath>
#include <concepts>
#include <optional>
#include <span>
#include <string>

#include "cnm/data.hpp"
#include "cnm/error.hpp"
#include "cnm/types.hpp"

namespace cnm {

// Kernel convention: K(x, y) = exp(-gamma * ||x - y||^2).
//
// Its Fourier transform is proportional to exp(-||theta||^2 / (4 gamma)),
// i.e. a centred Gaussian with per-coordinate variance 2 * gamma. Spectral
// samples therefore use stddev sqrt(2 * gamma), and the bandwidth heuristic's
// gamma = 2 / sigma^2 plugs in directly.

enum class KernelFamily { Rbf };

struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  double gamma = 1.0;

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw InvalidArgument("kernel gamma must be a positive finite number");
  }
  double spectral_stddev() const { return std::sqrt(2.0 * gamma); }
};

std::string to_string(KernelFamily family);

struct GramMatrix {
  Matrix values;
  std::string source;
};

inline constexpr Index kDefaultGramCap = 5000;
inline constexpr Index kDefaultMsePairs = 100000;

double kernel_eval(const KernelSpec& spec, VectorRef x, VectorRef y);

/// d x k matrix whose columns are i.i.d. draws from the kernel's spectral density.
Matrix sample_spectral(const KernelSpec& spec, Index d, Index k, Rng& rng);

/// k i.i.d. phases uniform on [0, 2*pi).
Vector sample_phases(Index k, Rng& rng);

GramMatrix gram_exact(const KernelSpec& spec, const Dataset& ds, Index cap = kDefaultGramCap);

/// Anything that turns a d-vector into a k-vector of features.
template <class M>
concept FeatureMap = requires(const M& m, const Vector& x, Vector& out) {
  { m.input_dim() } -> std::convertible_to<Index>;
  { m.output_dim() } -> std::convertible_to<Index>;
  m.project_into(x, out);
};

/// Features of every dataset row, one row per sample.
template <FeatureMap M>
RowMatrix map_all(const M& map, const Dataset& ds) {
  RowMatrix z(ds.size(), map.output_dim());
  Vector x(ds.dim());
  Vector out(map.output_dim());
  for (Index i = 0; i < ds.size(); ++i) {
    x = ds.row(i);
    map.project_into(x, out);
    z.row(i) = out.transpose();
  }
  return z;
}

/// Mean squared kernel approximation error over `pairs`, or over all N^2
/// ordered pairs when `pairs` is empty (requires N <= cap).
template <FeatureMap M>
double approx_mse(const M& map, const KernelSpec& spec, const Dataset& ds,
                  std::optional<std::span<const PairSample>> pairs = std::nullopt,
                  Index cap = kDefaultGramCap) {
  spec.validate();
  if (map.input_dim() != ds.dim())
    throw InvalidArgument("map input dimension " + std::to_string(map.input_dim()) +
                          " does not match dataset dimension " + std::to_string(ds.dim()));
  const RowMatrix z = map_all(map, ds);
  if (!pairs) {
    const GramMatrix k = gram_exact(spec, ds, cap);
    const Matrix approx = z * z.transpose();
    return (k.values - approx).squaredNorm() / static_cast<double>(ds.size() * ds.size());
  }
  if (pairs->empty()) throw InvalidArgument("approx_mse: empty pair list");
  double total = 0.0;
  for (const auto& p : *pairs) {
    const double exact = kernel_eval(spec, ds.row(p.i), ds.row(p.j));
    const double r = exact - z.row(p.i).dot(z.row(p.j));
    total += r * r;
  }
  return total / static_cast<double>(pairs->size());
}

}  // namespace cnm
