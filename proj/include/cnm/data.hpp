#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cnm/types.hpp"

namespace cnm {

/// Dense N x d feature matrix with one integer label per row.
///
/// In binary mode every label is -1 or +1; `class_map` then records how the
/// raw class ids of the source file were folded onto the two classes.
struct Dataset {
  RowMatrix features;
  std::vector<int> labels;
  std::optional<std::map<int, int>> class_map;
  std::string name;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  auto row(Index i) const { return features.row(i).transpose(); }

  bool is_binary() const;
  /// Sorted distinct label values.
  std::vector<int> classes() const;
  /// Throws InvalidArgument when shape, finiteness or (if `binary`) labels are off.
  void validate(bool binary = false) const;
};

struct PairSample {
  Index i = 0;
  Index j = 0;
};

Dataset load_libsvm(const std::filesystem::path& path);
/// Writes non-zero entries with round-trip precision.
void save_libsvm(const Dataset& ds, const std::filesystem::path& path);

struct CsvOptions {
  Index label_column = 0;
  bool has_header = false;
  char delimiter = ',';
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts = {});

/// Two concentric noisy rings in 2D: label -1 on the inner ring, +1 on the outer.
Dataset make_two_rings(Index n_per_class, double inner_radius, double outer_radius,
                       double noise_sd, std::uint64_t seed);

/// Standard normal points in d dimensions with random +-1 labels.
Dataset make_gaussian(Index n, Index d, std::uint64_t seed);

/// M distinct row indices, uniform without replacement.
std::vector<Index> sample_batch(const Dataset& ds, Index m, Rng& rng);

/// n index pairs drawn uniformly (with replacement) over N x N.
std::vector<PairSample> sample_pairs(const Dataset& ds, Index n, Rng& rng);

struct GammaEstimate {
  double gamma = 0.0;
  double sigma = 0.0;
  Index sample_used = 0;
  bool clamped = false;  ///< sample_n exceeded N and was reduced
};

/// Bandwidth heuristic: sigma is the mean distance from each sampled point to
/// its `nn_rank`-th nearest neighbour inside the sample (exact search), and
/// gamma = 2 / sigma^2.
GammaEstimate estimate_gamma(const Dataset& ds, Rng& rng, Index sample_n = 1000,
                             Index nn_rank = 50);

/// Rows selected by `indices`, in that order.
Dataset subset(const Dataset& ds, std::span<const Index> indices);

/// Folds class ids onto +1 (members of `positive`) and -1 (everything else).
Dataset binarize(const Dataset& ds, const std::set<int>& positive);

/// Random train/test split; `test_fraction` in (0, 1).
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double test_fraction, Rng& rng);

/// Per-feature affine standardization (off unless requested by the caller).
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Dataset& ds);
  void apply(Dataset& ds) const;
};

}  // namespace cnm
