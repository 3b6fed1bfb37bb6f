#include "cnm/maps.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "cnm/error.hpp"

namespace cnm {

namespace {

std::shared_ptr<const FftPlan> shared_plan(Index d) {
  static std::mutex mu;
  static std::map<Index, std::weak_ptr<const FftPlan>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[d];
  if (auto plan = slot.lock()) return plan;
  auto plan = std::make_shared<const FftPlan>(static_cast<std::size_t>(d));
  slot = plan;
  return plan;
}

void check_phases(const std::optional<Vector>& phases, Index k) {
  if (!phases) return;
  if (phases->size() != k)
    throw InvalidArgument("phase vector length " + std::to_string(phases->size()) +
                          " does not match k = " + std::to_string(k));
  for (Index i = 0; i < k; ++i) {
    const double b = (*phases)(i);
    if (!(b >= 0.0 && b < 2.0 * M_PI)) throw InvalidArgument("phases must lie in [0, 2*pi)");
  }
}

void check_input(Index expected, Index got) {
  if (expected != got)
    throw InvalidArgument("feature map expects d = " + std::to_string(expected) + ", got " +
                          std::to_string(got));
}

}  // namespace

DenseFourierMap::DenseFourierMap(Matrix theta, std::optional<Vector> phases)
    : theta_(std::move(theta)), phases_(std::move(phases)) {
  if (theta_.rows() < 1 || theta_.cols() < 1)
    throw InvalidArgument("DenseFourierMap: theta must be at least 1 x 1");
  if (!theta_.allFinite()) throw InvalidArgument("DenseFourierMap: non-finite theta");
  check_phases(phases_, theta_.cols());
  scale_ = std::sqrt(2.0 / static_cast<double>(theta_.cols()));
}

void DenseFourierMap::set_theta(Matrix theta) {
  if (theta.rows() != theta_.rows() || theta.cols() != theta_.cols())
    throw InvalidArgument("DenseFourierMap::set_theta: shape change");
  if (!theta.allFinite()) throw NumericalError("DenseFourierMap::set_theta: non-finite theta");
  theta_ = std::move(theta);
}

Vector DenseFourierMap::linear(VectorRef x) const {
  check_input(input_dim(), x.size());
  Vector a = theta_.transpose() * x;
  if (phases_) a += *phases_;
  return a;
}

void DenseFourierMap::project_into(VectorRef x, Vector& out) const {
  out = scale_ * linear(x).array().cos();
}

Vector DenseFourierMap::project(VectorRef x) const {
  Vector out;
  project_into(x, out);
  return out;
}

CirculantFourierMap::CirculantFourierMap(Index k, std::vector<Vector> blocks, Vector sign_flip,
                                         std::optional<Vector> phases)
    : d_(sign_flip.size()),
      k_(k),
      blocks_(std::move(blocks)),
      sign_flip_(std::move(sign_flip)),
      phases_(std::move(phases)) {
  if (d_ < 1 || k_ < 1) throw InvalidArgument("CirculantFourierMap: d and k must be >= 1");
  const Index expected_blocks = (k_ + d_ - 1) / d_;
  if (static_cast<Index>(blocks_.size()) != expected_blocks)
    throw InvalidArgument("CirculantFourierMap: k = " + std::to_string(k_) + ", d = " +
                          std::to_string(d_) + " needs " + std::to_string(expected_blocks) +
                          " blocks, got " + std::to_string(blocks_.size()));
  for (Index i = 0; i < d_; ++i)
    if (sign_flip_(i) != 1.0 && sign_flip_(i) != -1.0)
      throw InvalidArgument("CirculantFourierMap: sign_flip entries must be +-1");
  check_phases(phases_, k_);
  scale_ = std::sqrt(2.0 / static_cast<double>(k_));
  plan_ = shared_plan(d_);
  spectra_.resize(blocks_.size());
  for (Index b = 0; b < num_blocks(); ++b) set_block(b, std::move(blocks_[b]));
}

Index CirculantFourierMap::block_width(Index b) const {
  return std::min(d_, k_ - b * d_);
}

void CirculantFourierMap::set_block(Index b, Vector r) {
  if (b < 0 || b >= num_blocks()) throw InvalidArgument("CirculantFourierMap: bad block index");
  if (r.size() != d_) throw InvalidArgument("CirculantFourierMap: generator must have length d");
  if (!r.allFinite()) throw NumericalError("CirculantFourierMap: non-finite generator");
  spectra_[b] = plan_->forward_real(r);
  blocks_[b] = std::move(r);
}

Vector CirculantFourierMap::linear_from_spectrum(const std::vector<Complex>& flipped_spectrum,
                                                 double x_norm) const {
  Vector a(k_);
  std::vector<Complex> prod(static_cast<std::size_t>(d_));
  for (Index b = 0; b < num_blocks(); ++b) {
    const auto& rs = spectra_[b];
    for (std::size_t j = 0; j < prod.size(); ++j) prod[j] = flipped_spectrum[j] * rs[j];
    const double tol = 1e-9 * std::max(1.0, blocks_[b].norm()) * x_norm;
    const Vector v = inverse_real(prod, *plan_, tol);
    a.segment(b * d_, block_width(b)) = v.head(block_width(b));
  }
  if (phases_) a += *phases_;
  return a;
}

Vector CirculantFourierMap::linear(VectorRef x) const {
  check_input(d_, x.size());
  const Vector y = sign_flip_.cwiseProduct(x);
  return linear_from_spectrum(plan_->forward_real(y), y.norm());
}

void CirculantFourierMap::project_into(VectorRef x, Vector& out) const {
  out = scale_ * linear(x).array().cos();
}

Vector CirculantFourierMap::project(VectorRef x) const {
  Vector out;
  project_into(x, out);
  return out;
}

Vector dense_project(const DenseFourierMap& map, VectorRef x) { return map.project(x); }

Vector circulant_project(const CirculantFourierMap& map, VectorRef x) { return map.project(x); }

DenseFourierMap init_random_dense(const KernelSpec& spec, Index d, Index k, bool with_phases,
                                  Rng& rng) {
  Matrix theta = sample_spectral(spec, d, k, rng);
  std::optional<Vector> phases;
  if (with_phases) phases = sample_phases(k, rng);
  return DenseFourierMap(std::move(theta), std::move(phases));
}

CirculantFourierMap init_random_circulant(const KernelSpec& spec, Index d, Index k, Rng& rng,
                                          bool with_phases) {
  spec.validate();
  if (d < 1 || k < 1) throw InvalidArgument("init_random_circulant: d and k must be >= 1");
  const Index n_blocks = (k + d - 1) / d;
  std::normal_distribution<double> normal(0.0, spec.spectral_stddev());
  std::vector<Vector> blocks;
  blocks.reserve(static_cast<std::size_t>(n_blocks));
  for (Index b = 0; b < n_blocks; ++b) {
    Vector r(d);
    for (Index i = 0; i < d; ++i) r(i) = normal(rng);
    blocks.push_back(std::move(r));
  }
  std::bernoulli_distribution coin(0.5);
  Vector flip(d);
  for (Index i = 0; i < d; ++i) flip(i) = coin(rng) ? 1.0 : -1.0;
  std::optional<Vector> phases;
  if (with_phases) phases = sample_phases(k, rng);
  return CirculantFourierMap(k, std::move(blocks), std::move(flip), std::move(phases));
}

}  // namespace cnm
