#include "cnm/train.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include "cnm/error.hpp"

namespace cnm {

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw InvalidArgument("config field '" + field + "' " + why);
  };
  if (k < 1) fail("k", "must be >= 1");
  if (outer_iters < 0) fail("T", "must be >= 0");
  if (w_steps < 1) fail("T1", "must be >= 1");
  if (map_steps < 1) fail("T2", "must be >= 1");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda", "must be positive");
  if (!(theta_decay >= 0.0) || !std::isfinite(theta_decay)) fail("theta_decay", "must be >= 0");
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) fail("eta0", "must be positive");
  if (mse_pairs < 1) fail("mse_pairs", "must be >= 1");
  if (validation_pairs < 1) fail("validation_pairs", "must be >= 1");
}

void TrainTrace::write_csv(std::ostream& os) const {
  // Shortest round-trip form keeps repeated runs byte-identical and lossless.
  auto num = [](double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
  };
  os << "iter,objective,train_acc,test_acc,mse\n";
  for (const auto& r : records)
    os << r.iter << ',' << num(r.objective) << ',' << num(r.train_acc) << ','
       << num(r.test_acc) << ',' << num(r.mse) << '\n';
}

std::string TrainTrace::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

namespace detail {
Index effective_batch(const TrainConfig& cfg, const Dataset& ds) {
  return std::min(cfg.batch_size, ds.size());
}
}  // namespace detail

namespace {

RowMatrix gather_rows(const Dataset& ds, std::span<const Index> idx) {
  RowMatrix x(static_cast<Index>(idx.size()), ds.dim());
  for (Index r = 0; r < x.rows(); ++r) x.row(r) = ds.features.row(idx[r]);
  return x;
}

// Pre-activations X Theta + b for a block of rows.
Matrix dense_preactivation(const DenseFourierMap& map, const RowMatrix& x) {
  Matrix a = x * map.theta();
  if (map.phases()) a.rowwise() += map.phases()->transpose();
  return a;
}

double margin_violation(int y, double score) { return 1.0 - static_cast<double>(y) * score; }

}  // namespace

double svm_objective(const LinearModel& model, const RowMatrix& features,
                     std::span<const int> labels) {
  if (features.rows() != static_cast<Index>(labels.size()) || features.rows() == 0)
    throw InvalidArgument("svm_objective: feature/label count mismatch");
  const Vector scores = features * model.w;
  double loss = 0.0;
  for (Index n = 0; n < scores.size(); ++n) loss += hinge_loss(labels[n], scores(n));
  return 0.5 * model.lambda * model.w.squaredNorm() + loss / static_cast<double>(scores.size());
}

Vector grad_w(const LinearModel& model, const RowMatrix& features, std::span<const int> labels) {
  if (features.rows() == 0) throw InvalidArgument("grad_w: empty batch");
  if (features.rows() != static_cast<Index>(labels.size()) || features.cols() != model.w.size())
    throw InvalidArgument("grad_w: shape mismatch");
  Vector g = model.lambda * model.w;
  const double inv_m = 1.0 / static_cast<double>(features.rows());
  for (Index n = 0; n < features.rows(); ++n) {
    const double score = features.row(n).dot(model.w);
    if (margin_violation(labels[n], score) > 0.0)
      g.noalias() -= (inv_m * labels[n]) * features.row(n).transpose();
  }
  return g;
}

Matrix grad_theta(const LinearModel& model, const DenseFourierMap& map, const Dataset& ds,
                  std::span<const Index> batch, double theta_decay) {
  if (batch.empty()) throw InvalidArgument("grad_theta: empty batch");
  if (model.w.size() != map.output_dim() || map.input_dim() != ds.dim())
    throw InvalidArgument("grad_theta: shape mismatch");
  const RowMatrix x = gather_rows(ds, batch);
  const Matrix a = dense_preactivation(map, x);
  const Vector scores = map.scale() * (a.array().cos().matrix() * model.w);

  // coeff(n, i) = y_n sin(a_ni) for violating samples.
  Matrix coeff = Matrix::Zero(a.rows(), a.cols());
  for (Index n = 0; n < a.rows(); ++n) {
    const int y = ds.labels[batch[n]];
    if (margin_violation(y, scores(n)) > 0.0)
      coeff.row(n) = static_cast<double>(y) * a.row(n).array().sin();
  }
  Matrix g = x.transpose() * coeff;
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  g *= (map.scale() * inv_m * model.w).asDiagonal();
  if (theta_decay > 0.0) g += theta_decay * map.theta();
  return g;
}

double pair_mse(const DenseFourierMap& map, const KernelSpec& spec, const Dataset& ds,
                std::span<const PairSample> pairs) {
  if (pairs.empty()) throw InvalidArgument("pair_mse: empty pair batch");
  double total = 0.0;
  Vector zi, zj;
  for (const auto& p : pairs) {
    map.project_into(ds.row(p.i), zi);
    map.project_into(ds.row(p.j), zj);
    const double r = kernel_eval(spec, ds.row(p.i), ds.row(p.j)) - zi.dot(zj);
    total += r * r;
  }
  return total / static_cast<double>(pairs.size());
}

Matrix grad_theta_mse(const DenseFourierMap& map, const KernelSpec& spec, const Dataset& ds,
                      std::span<const PairSample> pairs, double theta_decay) {
  if (pairs.empty()) throw InvalidArgument("grad_theta_mse: empty pair batch");
  if (map.input_dim() != ds.dim()) throw InvalidArgument("grad_theta_mse: shape mismatch");
  const auto m = static_cast<Index>(pairs.size());
  RowMatrix xa(m, ds.dim()), xb(m, ds.dim());
  Vector target(m);
  for (Index p = 0; p < m; ++p) {
    xa.row(p) = ds.features.row(pairs[p].i);
    xb.row(p) = ds.features.row(pairs[p].j);
    target(p) = kernel_eval(spec, xa.row(p).transpose(), xb.row(p).transpose());
  }
  const Matrix a = dense_preactivation(map, xa);
  const Matrix b = dense_preactivation(map, xb);
  const Eigen::ArrayXXd ca = a.array().cos(), sa = a.array().sin();
  const Eigen::ArrayXXd cb = b.array().cos(), sb = b.array().sin();
  const double s2 = map.scale() * map.scale();
  const Eigen::ArrayXd residual = target.array() - s2 * (ca * cb).rowwise().sum();

  // d/dtheta_i of mean r^2 = (2 s^2 / m) sum_p r_p [sin a cos b x + cos a sin b x'].
  const Matrix left = ((sa * cb).colwise() * residual).matrix();
  const Matrix right = ((ca * sb).colwise() * residual).matrix();
  Matrix g = xa.transpose() * left + xb.transpose() * right;
  g *= 2.0 * s2 / static_cast<double>(m);
  if (theta_decay > 0.0) g += theta_decay * map.theta();
  return g;
}

std::vector<Vector> grad_r_all(const CirculantFourierMap& map, const LinearModel& model,
                               const Dataset& ds, std::span<const Index> batch, double decay) {
  if (batch.empty()) throw InvalidArgument("grad_r: empty batch");
  if (model.w.size() != map.output_dim() || map.input_dim() != ds.dim())
    throw InvalidArgument("grad_r: shape mismatch");
  const Index d = map.input_dim();
  const Index n_blocks = map.num_blocks();
  const auto& plan = map.plan();
  const auto du = static_cast<std::size_t>(d);

  // Frequency-domain accumulators, one per block.
  std::vector<std::vector<Complex>> acc(static_cast<std::size_t>(n_blocks),
                                        std::vector<Complex>(du, Complex{}));
  std::vector<Complex> u_spec(du);
  Vector y(d);
  for (const Index idx : batch) {
    y = map.sign_flip().cwiseProduct(ds.row(idx));
    const auto y_spec = plan.forward_real(y);
    const Vector a = map.linear_from_spectrum(y_spec, y.norm());
    const double score = map.scale() * model.w.dot(a.array().cos().matrix());
    const int label = ds.labels[idx];
    if (!(margin_violation(label, score) > 0.0)) continue;

    for (Index b = 0; b < n_blocks; ++b) {
      const Index width = map.block_width(b);
      // u = w_blk o sin(r_b (*) y + b), zero-padded past a truncated block.
      for (Index i = 0; i < d; ++i)
        u_spec[static_cast<std::size_t>(i)] =
            i < width ? model.w(b * d + i) * std::sin(a(b * d + i)) : 0.0;
      plan.forward(u_spec);
      // s_{->1}(rev(y)) has spectrum conj(Y) for real y, so the shift-matrix
      // product becomes the convolution conj(Y) o U.
      auto& dst = acc[static_cast<std::size_t>(b)];
      for (std::size_t j = 0; j < du; ++j)
        dst[j] += static_cast<double>(label) * std::conj(y_spec[j]) * u_spec[j];
    }
  }

  const double factor = map.scale() / static_cast<double>(batch.size());
  std::vector<Vector> grads;
  grads.reserve(static_cast<std::size_t>(n_blocks));
  for (Index b = 0; b < n_blocks; ++b) {
    auto& spec = acc[static_cast<std::size_t>(b)];
    plan.inverse(spec);
    Vector g(d);
    for (Index j = 0; j < d; ++j) g(j) = factor * spec[static_cast<std::size_t>(j)].real();
    if (decay > 0.0) g += decay * map.block(b);
    grads.push_back(std::move(g));
  }
  return grads;
}

Vector grad_r(const CirculantFourierMap& map, Index block, const LinearModel& model,
              const Dataset& ds, std::span<const Index> batch, double decay) {
  if (block < 0 || block >= map.num_blocks()) throw InvalidArgument("grad_r: bad block index");
  return std::move(grad_r_all(map, model, ds, batch, decay)[static_cast<std::size_t>(block)]);
}

void pegasos_project(LinearModel& model) {
  const double norm = model.w.norm();
  const double radius = model.radius();
  if (norm > radius) model.w *= radius / norm;
}

namespace {

double map_step_size(const TrainConfig& cfg, SgdState& state) {
  const long t = ++state.map_step;
  return cfg.eta0 / (cfg.lambda * static_cast<double>(t));
}

}  // namespace

void sgd_optimize_theta(DenseFourierMap& map, const LinearModel& model, const Dataset& ds,
                        const TrainConfig& cfg, SgdState& state) {
  const Index m = detail::effective_batch(cfg, ds);
  if (!cfg.continue_step_counter) state.map_step = 0;
  for (int s = 0; s < cfg.map_steps; ++s) {
    const double eta = map_step_size(cfg, state);
    const auto batch = sample_batch(ds, m, state.rng);
    const Matrix g = grad_theta(model, map, ds, batch, cfg.theta_decay);
    map.set_theta(map.theta() - eta * g);
  }
}

void sgd_optimize_circulant(CirculantFourierMap& map, const LinearModel& model,
                            const Dataset& ds, const TrainConfig& cfg, SgdState& state) {
  const Index m = detail::effective_batch(cfg, ds);
  if (!cfg.continue_step_counter) state.map_step = 0;
  for (int s = 0; s < cfg.map_steps; ++s) {
    const double eta = map_step_size(cfg, state);
    const auto batch = sample_batch(ds, m, state.rng);
    const auto grads = grad_r_all(map, model, ds, batch, cfg.theta_decay);
    for (Index b = 0; b < map.num_blocks(); ++b)
      map.set_block(b, map.block(b) - eta * grads[static_cast<std::size_t>(b)]);
  }
}

TrainResult<DenseFourierMap> train_cnm(const Dataset& train, const TrainConfig& cfg,
                                       const KernelSpec& spec, const Dataset* test) {
  cfg.validate();
  spec.validate();
  train.validate(true);
  SgdState state(cfg.seed);
  DenseFourierMap map = init_random_dense(spec, train.dim(), cfg.k, cfg.with_phases, state.rng);
  LinearModel model = LinearModel::zeros(cfg.k, cfg.lambda);
  TrainTrace trace;
  trace.records.push_back(detail::checkpoint(0, model, map, train, test));
  for (int it = 1; it <= cfg.outer_iters; ++it) {
    pegasos_optimize_w(model, map, train, cfg, state);
    sgd_optimize_theta(map, model, train, cfg, state);
    trace.records.push_back(detail::checkpoint(it, model, map, train, test));
  }
  return {std::move(map), std::move(model), std::move(trace)};
}

TrainResult<CirculantFourierMap> train_circulant_cnm(const Dataset& train,
                                                     const TrainConfig& cfg,
                                                     const KernelSpec& spec,
                                                     const Dataset* test) {
  cfg.validate();
  spec.validate();
  train.validate(true);
  SgdState state(cfg.seed);
  CirculantFourierMap map =
      init_random_circulant(spec, train.dim(), cfg.k, state.rng, cfg.with_phases);
  LinearModel model = LinearModel::zeros(cfg.k, cfg.lambda);
  TrainTrace trace;
  trace.records.push_back(detail::checkpoint(0, model, map, train, test));
  for (int it = 1; it <= cfg.outer_iters; ++it) {
    pegasos_optimize_w(model, map, train, cfg, state);
    sgd_optimize_circulant(map, model, train, cfg, state);
    trace.records.push_back(detail::checkpoint(it, model, map, train, test));
  }
  return {std::move(map), std::move(model), std::move(trace)};
}

KernelApproxResult train_kernel_approx(const Dataset& train, const TrainConfig& cfg,
                                       const KernelSpec& spec, const Dataset* validation) {
  cfg.validate();
  spec.validate();
  train.validate();
  SgdState state(cfg.seed);
  DenseFourierMap map = init_random_dense(spec, train.dim(), cfg.k, cfg.with_phases, state.rng);
  const Dataset& held_out = validation ? *validation : train;
  if (held_out.dim() != train.dim())
    throw InvalidArgument("train_kernel_approx: validation set dimension differs");
  const auto val_pairs = sample_pairs(held_out, cfg.validation_pairs, state.rng);

  KernelApproxResult result{map, {}, pair_mse(map, spec, held_out, val_pairs)};
  auto record = [&](int iter) {
    TraceRecord rec;
    rec.iter = iter;
    rec.mse = pair_mse(map, spec, held_out, val_pairs);
    rec.objective = rec.mse;
    result.trace.records.push_back(rec);
  };
  record(0);
  for (int it = 1; it <= cfg.outer_iters; ++it) {
    if (!cfg.continue_step_counter) state.map_step = 0;
    for (int s = 0; s < cfg.map_steps; ++s) {
      const double eta = map_step_size(cfg, state);
      const auto pairs = sample_pairs(train, cfg.mse_pairs, state.rng);
      map.set_theta(map.theta() - eta * grad_theta_mse(map, spec, train, pairs, cfg.theta_decay));
    }
    record(it);
  }
  result.map = std::move(map);
  return result;
}

}  // namespace cnm
