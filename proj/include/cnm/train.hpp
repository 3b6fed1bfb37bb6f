#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cnm/data.hpp"
#include "cnm/eval.hpp"
#include "cnm/kernels.hpp"
#include "cnm/maps.hpp"
#include "cnm/model.hpp"

namespace cnm {

struct TrainConfig {
  Index k = 16;              ///< output dimension of the feature map
  int outer_iters = 10;      ///< T: alternations between the w-step and the map step
  int w_steps = 100;         ///< T1: Pegasos steps per alternation
  int map_steps = 100;       ///< T2: projection steps per alternation
  Index batch_size = 500;    ///< M, clamped to N when the dataset is smaller
  double lambda = 1e-4;
  std::uint64_t seed = 0;
  double theta_decay = 0.0;  ///< optional Frobenius weight decay on the projection
  double eta0 = 1.0;         ///< map step size is eta0 / (lambda * t)
  bool continue_step_counter = true;  ///< t keeps counting across alternations
  bool with_phases = false;  ///< random phase offsets b on the trained map
  Index mse_pairs = 500;     ///< pairs per SGD step for kernel-approximation training
  Index validation_pairs = 2000;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double train_acc = std::numeric_limits<double>::quiet_NaN();
  double test_acc = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
};

struct TrainTrace {
  std::vector<TraceRecord> records;

  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
};

/// Step counters and the random stream shared by consecutive SGD phases.
struct SgdState {
  Rng rng;
  long w_step = 0;
  long map_step = 0;

  explicit SgdState(std::uint64_t seed) : rng(seed) {}
};

/// lambda/2 ||w||^2 + mean hinge loss over the rows of `features`.
double svm_objective(const LinearModel& model, const RowMatrix& features,
                     std::span<const int> labels);

/// Subgradient of the mini-batch SVM objective in w, given mapped features.
/// Samples with margin exactly 1 count as zero-loss.
Vector grad_w(const LinearModel& model, const RowMatrix& features, std::span<const int> labels);

template <FeatureMap M>
Vector grad_w(const LinearModel& model, const M& map, const Dataset& ds,
              std::span<const Index> batch) {
  if (batch.empty()) throw InvalidArgument("grad_w: empty batch");
  std::vector<int> y;
  y.reserve(batch.size());
  for (Index i : batch) y.push_back(ds.labels[i]);
  return grad_w(model, map_batch(map, ds, batch), y);
}

/// Gradient of the mini-batch hinge term in Theta (d x k), plus theta_decay * Theta.
Matrix grad_theta(const LinearModel& model, const DenseFourierMap& map, const Dataset& ds,
                  std::span<const Index> batch, double theta_decay = 0.0);

/// Mean of (K(x, x') - Z(x)^T Z(x'))^2 over a pair batch.
double pair_mse(const DenseFourierMap& map, const KernelSpec& spec, const Dataset& ds,
                std::span<const PairSample> pairs);

/// Exact gradient of pair_mse in Theta, both symmetric terms included.
Matrix grad_theta_mse(const DenseFourierMap& map, const KernelSpec& spec, const Dataset& ds,
                      std::span<const PairSample> pairs, double theta_decay = 0.0);

/// Gradients of the mini-batch hinge term in every circulant generator r_b,
/// evaluated with FFT convolutions.
std::vector<Vector> grad_r_all(const CirculantFourierMap& map, const LinearModel& model,
                               const Dataset& ds, std::span<const Index> batch,
                               double decay = 0.0);

Vector grad_r(const CirculantFourierMap& map, Index block, const LinearModel& model,
              const Dataset& ds, std::span<const Index> batch, double decay = 0.0);

/// Projects w back onto the ball of radius 1/sqrt(lambda).
void pegasos_project(LinearModel& model);

/// T1 Pegasos steps with eta_t = 1/(lambda t).
template <FeatureMap M>
void pegasos_optimize_w(LinearModel& model, const M& map, const Dataset& ds,
                        const TrainConfig& cfg, SgdState& state);

void sgd_optimize_theta(DenseFourierMap& map, const LinearModel& model, const Dataset& ds,
                        const TrainConfig& cfg, SgdState& state);

void sgd_optimize_circulant(CirculantFourierMap& map, const LinearModel& model,
                            const Dataset& ds, const TrainConfig& cfg, SgdState& state);

template <class M>
struct TrainResult {
  M map;
  LinearModel model;
  TrainTrace trace;
};

/// Alternating minimisation: Theta starts as a random Fourier draw, w = 0.
TrainResult<DenseFourierMap> train_cnm(const Dataset& train, const TrainConfig& cfg,
                                       const KernelSpec& spec, const Dataset* test = nullptr);

/// Same skeleton with a circulant projection; the map step updates each r_b.
TrainResult<CirculantFourierMap> train_circulant_cnm(const Dataset& train,
                                                     const TrainConfig& cfg,
                                                     const KernelSpec& spec,
                                                     const Dataset* test = nullptr);

/// Pegasos only, projection kept fixed (random Fourier / random circulant baselines).
template <FeatureMap M>
TrainResult<M> train_fixed_map(M map, const Dataset& train, const TrainConfig& cfg,
                               const Dataset* test = nullptr);

struct KernelApproxResult {
  DenseFourierMap map;
  TrainTrace trace;
  double initial_mse = 0.0;  ///< validation MSE of the random initialisation
};

/// SGD on sampled pair batches against the kernel MSE, starting from a random
/// Fourier draw. The trace's mse column is the MSE on a frozen set of pairs
/// drawn from `validation` (or from `train` when none is given).
KernelApproxResult train_kernel_approx(const Dataset& train, const TrainConfig& cfg,
                                       const KernelSpec& spec,
                                       const Dataset* validation = nullptr);

// ---------------------------------------------------------------------------

namespace detail {
Index effective_batch(const TrainConfig& cfg, const Dataset& ds);

template <FeatureMap M>
TraceRecord checkpoint(int iter, const LinearModel& model, const M& map, const Dataset& train,
                       const Dataset* test) {
  TraceRecord rec;
  rec.iter = iter;
  const RowMatrix z = map_all(map, train);
  rec.objective = svm_objective(model, z, train.labels);
  Index correct = 0;
  for (Index i = 0; i < train.size(); ++i)
    correct += predict_label(z.row(i).dot(model.w)) == train.labels[i];
  rec.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
  if (test) rec.test_acc = evaluate(model, map, *test).accuracy;
  return rec;
}
}  // namespace detail

template <FeatureMap M>
void pegasos_optimize_w(LinearModel& model, const M& map, const Dataset& ds,
                        const TrainConfig& cfg, SgdState& state) {
  model.validate();
  if (model.w.size() != map.output_dim())
    throw InvalidArgument("pegasos: w and map output dimension differ");
  const Index m = detail::effective_batch(cfg, ds);
  if (!cfg.continue_step_counter) state.w_step = 0;
  for (int s = 0; s < cfg.w_steps; ++s) {
    const long t = ++state.w_step;
    const auto batch = sample_batch(ds, m, state.rng);
    const Vector g = grad_w(model, map, ds, batch);
    model.w -= g / (model.lambda * static_cast<double>(t));
    pegasos_project(model);
  }
}

template <FeatureMap M>
TrainResult<M> train_fixed_map(M map, const Dataset& train, const TrainConfig& cfg,
                               const Dataset* test) {
  cfg.validate();
  train.validate(true);
  SgdState state(derive_seed(cfg.seed, 1));
  LinearModel model = LinearModel::zeros(map.output_dim(), cfg.lambda);
  TrainTrace trace;
  trace.records.push_back(detail::checkpoint(0, model, map, train, test));
  for (int it = 1; it <= cfg.outer_iters; ++it) {
    pegasos_optimize_w(model, map, train, cfg, state);
    trace.records.push_back(detail::checkpoint(it, model, map, train, test));
  }
  return {std::move(map), std::move(model), std::move(trace)};
}

}  // namespace cnm
