#include "cnm/eval.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

#include <nlohmann/json.hpp>

#include "cnm/error.hpp"

namespace cnm {

double psd_check(const Matrix& gram) {
  if (gram.rows() != gram.cols() || gram.rows() == 0)
    throw InvalidArgument("psd_check: expected a non-empty square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("psd_check: eigensolver failed");
  return solver.eigenvalues().minCoeff();
}

namespace {

constexpr int kVectorsPerRep = 4;

template <class M>
double median_projection_seconds(const M& map, const std::vector<Vector>& inputs, int reps) {
  Vector out(map.output_dim());
  double sink = 0.0;
  for (const auto& x : inputs) {  // warm-up
    map.project_into(x, out);
    sink += out(0);
  }
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    for (const auto& x : inputs) {
      map.project_into(x, out);
      sink += out(0);
    }
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count() /
                    static_cast<double>(inputs.size()));
  }
  // Keeps the optimiser from discarding the projections.
  if (sink == 42.4242) times.push_back(0.0);
  std::nth_element(times.begin(), times.begin() + reps / 2, times.end());
  return times[static_cast<std::size_t>(reps / 2)];
}

}  // namespace

std::vector<BenchRecord> bench_projection(const std::vector<Index>& d_list, KMode mode, int reps,
                                          std::uint64_t seed) {
  if (reps < 5) throw InvalidArgument("bench_projection: reps must be >= 5");
  if (d_list.empty()) throw InvalidArgument("bench_projection: empty dimension list");
  std::vector<BenchRecord> out;
  for (const Index d : d_list) {
    if (d < 1) throw InvalidArgument("bench_projection: dimensions must be >= 1");
    const Index k = mode == KMode::EqualD ? d : 2 * d;
    Rng rng(seed + static_cast<std::uint64_t>(d));
    const KernelSpec spec{KernelFamily::Rbf, 1.0 / static_cast<double>(d)};
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vector> inputs;
    for (int v = 0; v < kVectorsPerRep; ++v) {
      Vector x(d);
      for (Index i = 0; i < d; ++i) x(i) = normal(rng);
      inputs.push_back(std::move(x));
    }
    {
      const auto circ = init_random_circulant(spec, d, k, rng);
      out.push_back({d, k, "circulant", median_projection_seconds(circ, inputs, reps), reps});
    }
    {
      const auto dense = init_random_dense(spec, d, k, false, rng);
      out.push_back({d, k, "dense", median_projection_seconds(dense, inputs, reps), reps});
    }
  }
  return out;
}

void write_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << "d,k,family,median_seconds,repetitions\n";
  for (const auto& r : records)
    os << r.d << ',' << r.k << ',' << r.family << ',' << r.median_seconds << ','
       << r.repetitions << '\n';
}

std::string to_json(const std::vector<BenchRecord>& records) {
  auto arr = nlohmann::json::array();
  for (const auto& r : records)
    arr.push_back({{"d", r.d},
                   {"k", r.k},
                   {"family", r.family},
                   {"median_seconds", r.median_seconds},
                   {"repetitions", r.repetitions}});
  return arr.dump(2);
}

void write_csv(std::ostream& os, const EvalReport& report) {
  os << "accuracy,mean_hinge,n_test,n_correct\n";
  os << report.accuracy << ',' << report.mean_hinge << ',' << report.n_test << ','
     << report.n_correct << '\n';
}

std::string to_json(const EvalReport& report) {
  nlohmann::json j{{"accuracy", report.accuracy},
                   {"mean_hinge", report.mean_hinge},
                   {"n_test", report.n_test},
                   {"n_correct", report.n_correct}};
  auto classes = nlohmann::json::object();
  for (const auto& [label, c] : report.per_class)
    classes[std::to_string(label)] = {{"count", c.count}, {"correct", c.correct}};
  j["per_class"] = classes;
  return j.dump(2);
}

}  // namespace cnm
