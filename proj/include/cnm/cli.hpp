#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cnm/data.hpp"
#include "cnm/error.hpp"
#include "cnm/train.hpp"

namespace cnm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCompute = 1;
inline constexpr int kExitConfig = 2;

/// Invalid or inconsistent experiment configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline const std::vector<std::string>& known_families() {
  static const std::vector<std::string> f{"dense-rffm", "cnm", "cnm-kerapp", "circulant-random",
                                          "circulant-optimized"};
  return f;
}

/// Flat key/value experiment description. Every key has a default; `values`
/// keeps the resolved string form of every key for the manifest.
struct ExperimentConfig {
  std::string data;       ///< file path, or synthetic:two-rings / synthetic:gaussian
  std::string test_data;  ///< optional separate test file
  std::string format = "auto";
  Index csv_label_column = 0;
  bool csv_header = false;
  double test_fraction = 0.25;
  bool standardize = false;
  std::uint64_t data_seed = 0;
  Index n_train = 2000;
  Index n_test = 2000;
  double rings_inner = 1.0;
  double rings_outer = 3.0;
  double rings_noise = 0.5;
  Index gaussian_dim = 16;

  std::optional<double> gamma;  ///< nullopt: bandwidth heuristic
  Index gamma_sample = 1000;
  Index gamma_rank = 50;
  std::uint64_t gamma_seed = 0;

  std::vector<std::string> families{"cnm"};
  std::vector<Index> ks{16};
  std::vector<std::uint64_t> seeds{0};
  TrainConfig train;
  bool rffm_phases = true;
  std::vector<int> positive_classes;
  Index eval_pairs = 100000;
  std::string out = "cnm_out";

  std::map<std::string, std::string> values;

  /// Applies one key; throws ConfigError naming the key on bad input.
  void set(const std::string& key, const std::string& value);
  /// Cross-field checks and file existence. Runs before any compute.
  void validate() const;
  bool synthetic() const { return data.rfind("synthetic:", 0) == 0; }
};

ExperimentConfig default_config();
/// `key = value` lines (# comments), or a manifest JSON with a "config" object.
void load_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Train/test pair as resolved from the config (synthetic draw, split or two files).
struct ResolvedData {
  Dataset train;
  Dataset test;
  std::optional<Standardizer> standardizer;
};
ResolvedData resolve_data(const ExperimentConfig& cfg);
/// Loads a libsvm or CSV file per the config's format keys; parse errors become ConfigError.
Dataset load_dataset_file(const ExperimentConfig& cfg, const std::string& path);

/// Entry point shared by the executable; returns the process exit code.
int run(int argc, char** argv);

}  // namespace cnm::cli
