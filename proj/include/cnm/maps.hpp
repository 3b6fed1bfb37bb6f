#pragma once

#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "cnm/data.hpp"
#include "cnm/fft.hpp"
#include "cnm/kernels.hpp"
#include "cnm/types.hpp"

namespace cnm {

/// Z_i(x) = sqrt(2/k) * cos(theta_i^T x + b_i), theta_i the columns of a d x k matrix.
/// Without phases b_i = 0.
class DenseFourierMap {
 public:
  explicit DenseFourierMap(Matrix theta, std::optional<Vector> phases = std::nullopt);

  Index input_dim() const { return theta_.rows(); }
  Index output_dim() const { return theta_.cols(); }
  double scale() const { return scale_; }
  const Matrix& theta() const { return theta_; }
  const std::optional<Vector>& phases() const { return phases_; }

  /// Replaces the projection; shape must not change.
  void set_theta(Matrix theta);

  Vector project(VectorRef x) const;
  void project_into(VectorRef x, Vector& out) const;
  /// Pre-activation Theta^T x + b.
  Vector linear(VectorRef x) const;

 private:
  Matrix theta_;
  std::optional<Vector> phases_;
  double scale_;
};

/// Z(x) = sqrt(2/k) * cos([R_1 D x; R_2 D x; ...]_{1..k} + b) with R_b = circ(r_b)
/// and D = diag(sign_flip) shared by all blocks.
///
/// B = ceil(k / d) blocks; the last block is truncated to k - (B-1) d outputs.
/// Projections run in O(B d log d): the spectrum of D x is computed once and
/// multiplied against each block's cached generator spectrum.
class CirculantFourierMap {
 public:
  CirculantFourierMap(Index k, std::vector<Vector> blocks, Vector sign_flip,
                      std::optional<Vector> phases = std::nullopt);

  Index input_dim() const { return d_; }
  Index output_dim() const { return k_; }
  Index num_blocks() const { return static_cast<Index>(blocks_.size()); }
  /// Outputs contributed by block b (d, except possibly the last block).
  Index block_width(Index b) const;
  double scale() const { return scale_; }
  const std::vector<Vector>& blocks() const { return blocks_; }
  const Vector& block(Index b) const { return blocks_.at(static_cast<std::size_t>(b)); }
  const Vector& sign_flip() const { return sign_flip_; }
  const std::optional<Vector>& phases() const { return phases_; }
  const FftPlan& plan() const { return *plan_; }
  const std::vector<Complex>& block_spectrum(Index b) const {
    return spectra_.at(static_cast<std::size_t>(b));
  }

  void set_block(Index b, Vector r);

  Vector project(VectorRef x) const;
  void project_into(VectorRef x, Vector& out) const;
  /// Pre-activation (R D x)_{1..k} + b.
  Vector linear(VectorRef x) const;
  /// Same as linear(), given the spectrum of D x.
  Vector linear_from_spectrum(const std::vector<Complex>& flipped_spectrum, double x_norm) const;

 private:
  Index d_;
  Index k_;
  std::vector<Vector> blocks_;
  Vector sign_flip_;
  std::optional<Vector> phases_;
  double scale_;
  std::shared_ptr<const FftPlan> plan_;
  std::vector<std::vector<Complex>> spectra_;
};

using AnyMap = std::variant<DenseFourierMap, CirculantFourierMap>;

Vector dense_project(const DenseFourierMap& map, VectorRef x);
Vector circulant_project(const CirculantFourierMap& map, VectorRef x);

/// |indices| x k matrix; row r is the map applied to dataset row indices[r].
template <FeatureMap M>
RowMatrix map_batch(const M& map, const Dataset& ds, std::span<const Index> indices) {
  if (map.input_dim() != ds.dim())
    throw InvalidArgument("map_batch: map expects d = " + std::to_string(map.input_dim()) +
                          ", dataset has d = " + std::to_string(ds.dim()));
  RowMatrix z(static_cast<Index>(indices.size()), map.output_dim());
  Vector x(ds.dim());
  Vector out(map.output_dim());
  for (Index r = 0; r < static_cast<Index>(indices.size()); ++r) {
    x = ds.row(indices[r]);
    map.project_into(x, out);
    z.row(r) = out.transpose();
  }
  return z;
}

inline Index input_dim(const AnyMap& m) {
  return std::visit([](const auto& v) { return v.input_dim(); }, m);
}
inline Index output_dim(const AnyMap& m) {
  return std::visit([](const auto& v) { return v.output_dim(); }, m);
}

DenseFourierMap init_random_dense(const KernelSpec& spec, Index d, Index k, bool with_phases,
                                  Rng& rng);

CirculantFourierMap init_random_circulant(const KernelSpec& spec, Index d, Index k, Rng& rng,
                                          bool with_phases = false);

}  // namespace cnm
