#include <algorithm>

#include "cnm/cli.hpp"

namespace cnm::cli {

namespace {

std::string resolved_format(const ExperimentConfig& cfg, const std::string& path) {
  if (cfg.format != "auto") return cfg.format;
  const auto ext = std::filesystem::path(path).extension().string();
  return (ext == ".csv" || ext == ".CSV") ? "csv" : "libsvm";
}

}  // namespace

Dataset load_dataset_file(const ExperimentConfig& cfg, const std::string& path) {
  const std::string format = resolved_format(cfg, path);
  try {
    if (format == "csv")
      return load_csv(path, CsvOptions{cfg.csv_label_column, cfg.csv_header, ','});
    return load_libsvm(path);
  } catch (const ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

namespace {

// libsvm files only record the largest index present, so dimensions may differ.
void pad_columns(Dataset& ds, Index d) {
  if (ds.dim() >= d) return;
  RowMatrix wider = RowMatrix::Zero(ds.size(), d);
  wider.leftCols(ds.dim()) = ds.features;
  ds.features = std::move(wider);
}

}  // namespace

ResolvedData resolve_data(const ExperimentConfig& cfg) {
  ResolvedData out;
  if (cfg.data == "synthetic:two-rings") {
    out.train = make_two_rings(cfg.n_train / 2, cfg.rings_inner, cfg.rings_outer, cfg.rings_noise,
                               cfg.data_seed);
    out.test = make_two_rings(cfg.n_test / 2, cfg.rings_inner, cfg.rings_outer, cfg.rings_noise,
                              cfg.data_seed + 1);
  } else if (cfg.data == "synthetic:gaussian") {
    out.train = make_gaussian(cfg.n_train, cfg.gaussian_dim, cfg.data_seed);
    out.test = make_gaussian(cfg.n_test, cfg.gaussian_dim, cfg.data_seed + 1);
  } else {
    Dataset all = load_dataset_file(cfg, cfg.data);
    if (!cfg.test_data.empty()) {
      out.train = std::move(all);
      out.test = load_dataset_file(cfg, cfg.test_data);
      if (resolved_format(cfg, cfg.data) == "csv" && out.train.dim() != out.test.dim())
        throw ConfigError("train and test files have different dimensions");
      const Index d = std::max(out.train.dim(), out.test.dim());
      pad_columns(out.train, d);
      pad_columns(out.test, d);
    } else {
      if (all.size() < 2) throw ConfigError(cfg.data + ": need at least two rows to split");
      Rng rng(derive_seed(cfg.data_seed, 2));
      auto [train, test] = train_test_split(all, cfg.test_fraction, rng);
      out.train = std::move(train);
      out.test = std::move(test);
    }
  }
  if (!cfg.positive_classes.empty()) {
    const std::set<int> positive(cfg.positive_classes.begin(), cfg.positive_classes.end());
    out.train = binarize(out.train, positive);
    out.test = binarize(out.test, positive);
  }
  if (cfg.standardize) {
    out.standardizer = Standardizer::fit(out.train);
    out.standardizer->apply(out.train);
    out.standardizer->apply(out.test);
  }
  return out;
}

}  // namespace cnm::cli
