#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnm/kernels.hpp"
#include "cnm/maps.hpp"
#include "cnm/model.hpp"

namespace cnm {

inline constexpr int kModelFormatVersion = 1;

/// One trained binary classifier together with the map it was trained on.
/// For one-vs-rest runs `positive_class` names the class scored as +1.
struct SavedModel {
  std::string family;
  KernelSpec spec;
  std::uint64_t seed = 0;
  AnyMap map;
  LinearModel model;
  std::optional<int> positive_class;
};

/// Versioned JSON for a map. Doubles are written in shortest round-trip form,
/// so parameters survive a save/load cycle bit for bit.
nlohmann::json map_to_json(const AnyMap& map);
AnyMap map_from_json(const nlohmann::json& j);

nlohmann::json models_to_json(const std::vector<SavedModel>& models);
std::vector<SavedModel> models_from_json(const nlohmann::json& j);

void save_models(const std::filesystem::path& path, const std::vector<SavedModel>& models);
std::vector<SavedModel> load_models(const std::filesystem::path& path);

}  // namespace cnm
