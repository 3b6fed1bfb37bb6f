#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cnm/data.hpp"
#include "cnm/maps.hpp"
#include "cnm/model.hpp"

namespace cnm {

struct ClassCount {
  Index count = 0;
  Index correct = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  double mean_hinge = 0.0;
  Index n_test = 0;
  Index n_correct = 0;
  std::map<int, ClassCount> per_class;
};

/// Accuracy and hinge loss of sign(w^T Z(x)) on a binary dataset.
template <FeatureMap M>
EvalReport evaluate(const LinearModel& model, const M& map, const Dataset& ds) {
  ds.validate(true);
  if (map.input_dim() != ds.dim() || map.output_dim() != model.w.size())
    throw InvalidArgument("evaluate: model, map and dataset dimensions disagree");
  EvalReport rep;
  rep.n_test = ds.size();
  Vector x(ds.dim());
  Vector z(map.output_dim());
  double hinge = 0.0;
  for (Index i = 0; i < ds.size(); ++i) {
    x = ds.row(i);
    map.project_into(x, z);
    const double score = model.w.dot(z);
    const int y = ds.labels[i];
    hinge += hinge_loss(y, score);
    auto& cls = rep.per_class[y];
    ++cls.count;
    if (predict_label(score) == y) {
      ++cls.correct;
      ++rep.n_correct;
    }
  }
  rep.accuracy = static_cast<double>(rep.n_correct) / static_cast<double>(rep.n_test);
  rep.mean_hinge = hinge / static_cast<double>(rep.n_test);
  return rep;
}

/// Smallest eigenvalue of a symmetric matrix (dense self-adjoint solver).
double psd_check(const Matrix& gram);

/// Gram matrix of mapped features, Z Z^T.
template <FeatureMap M>
Matrix feature_gram(const M& map, const Dataset& ds) {
  const RowMatrix z = map_all(map, ds);
  return z * z.transpose();
}

enum class KMode { EqualD, TwiceD };

struct BenchRecord {
  Index d = 0;
  Index k = 0;
  std::string family;
  double median_seconds = 0.0;
  int repetitions = 0;
};

/// Median wall time of a single projection for dense and circulant maps of the
/// same (d, k). Map construction and FFT planning happen before timing starts.
std::vector<BenchRecord> bench_projection(const std::vector<Index>& d_list, KMode mode, int reps,
                                          std::uint64_t seed = 0);

void write_csv(std::ostream& os, const std::vector<BenchRecord>& records);
std::string to_json(const std::vector<BenchRecord>& records);
void write_csv(std::ostream& os, const EvalReport& report);
std::string to_json(const EvalReport& report);

}  // namespace cnm
