#include "cnm/kernels.hpp"

namespace cnm {

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Rbf:
      return "rbf";
  }
  return "unknown";
}

double kernel_eval(const KernelSpec& spec, VectorRef x, VectorRef y) {
  if (x.size() != y.size())
    throw InvalidArgument("kernel_eval: dimension mismatch (" + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()) + ")");
  switch (spec.family) {
    case KernelFamily::Rbf:
      return std::exp(-spec.gamma * (x - y).squaredNorm());
  }
  throw InvalidArgument("unsupported kernel family");
}

Matrix sample_spectral(const KernelSpec& spec, Index d, Index k, Rng& rng) {
  spec.validate();
  if (d < 1 || k < 1) throw InvalidArgument("sample_spectral: d and k must be >= 1");
  std::normal_distribution<double> normal(0.0, spec.spectral_stddev());
  Matrix theta(d, k);
  // Column by column so a prefix of columns is stable when k grows.
  for (Index c = 0; c < k; ++c)
    for (Index r = 0; r < d; ++r) theta(r, c) = normal(rng);
  return theta;
}

Vector sample_phases(Index k, Rng& rng) {
  if (k < 1) throw InvalidArgument("sample_phases: k must be >= 1");
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * M_PI);
  Vector b(k);
  for (Index i = 0; i < k; ++i) {
    double v = uniform(rng);
    // uniform_real_distribution may round up to the upper bound.
    while (v >= 2.0 * M_PI) v = uniform(rng);
    b(i) = v;
  }
  return b;
}

GramMatrix gram_exact(const KernelSpec& spec, const Dataset& ds, Index cap) {
  spec.validate();
  const Index n = ds.size();
  if (n > cap)
    throw InvalidArgument("gram_exact: N = " + std::to_string(n) + " exceeds the cap of " +
                          std::to_string(cap) + "; use sampled pairs instead");
  GramMatrix g;
  g.source = to_string(spec.family);
  g.values.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    g.values(i, i) = kernel_eval(spec, ds.row(i), ds.row(i));
    for (Index j = i + 1; j < n; ++j) {
      const double v = kernel_eval(spec, ds.row(i), ds.row(j));
      g.values(i, j) = v;
      g.values(j, i) = v;
    }
  }
  return g;
}

}  // namespace cnm
