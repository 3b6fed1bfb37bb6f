#include "cnm/serialize.hpp"

#include <fstream>

#include "cnm/error.hpp"

namespace cnm {

using nlohmann::json;

namespace {

json vec_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vec_from_json(const json& j) {
  const auto raw = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(raw.data(), static_cast<Index>(raw.size()));
}

std::optional<Vector> phases_from_json(const json& j) {
  if (!j.contains("phases") || j.at("phases").is_null()) return std::nullopt;
  return vec_from_json(j.at("phases"));
}

json phases_to_json(const std::optional<Vector>& phases) {
  return phases ? vec_to_json(*phases) : json(nullptr);
}

}  // namespace

json map_to_json(const AnyMap& map) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        json j{{"format", "cnm-map"},
               {"version", kModelFormatVersion},
               {"d", m.input_dim()},
               {"k", m.output_dim()},
               {"phases", phases_to_json(m.phases())}};
        if constexpr (std::is_same_v<T, DenseFourierMap>) {
          j["family"] = "dense";
          // Column-major: theta column i is entries [i*d, (i+1)*d).
          const Matrix& t = m.theta();
          j["theta"] = std::vector<double>(t.data(), t.data() + t.size());
        } else {
          j["family"] = "circulant";
          auto blocks = json::array();
          for (const auto& r : m.blocks()) blocks.push_back(vec_to_json(r));
          j["blocks"] = std::move(blocks);
          j["sign_flip"] = vec_to_json(m.sign_flip());
        }
        return j;
      },
      map);
}

AnyMap map_from_json(const json& j) {
  try {
    if (j.at("format") != "cnm-map") throw ParseError("not a cnm-map object");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw ParseError("unsupported map format version " + std::to_string(version));
    const Index d = j.at("d").get<Index>();
    const Index k = j.at("k").get<Index>();
    const std::string family = j.at("family").get<std::string>();
    if (family == "dense") {
      const auto raw = j.at("theta").get<std::vector<double>>();
      if (static_cast<Index>(raw.size()) != d * k) throw ParseError("theta has the wrong size");
      Matrix theta = Eigen::Map<const Matrix>(raw.data(), d, k);
      return DenseFourierMap(std::move(theta), phases_from_json(j));
    }
    if (family == "circulant") {
      std::vector<Vector> blocks;
      for (const auto& b : j.at("blocks")) blocks.push_back(vec_from_json(b));
      Vector flip = vec_from_json(j.at("sign_flip"));
      if (flip.size() != d) throw ParseError("sign_flip has the wrong size");
      return CirculantFourierMap(k, std::move(blocks), std::move(flip), phases_from_json(j));
    }
    throw ParseError("unknown map family '" + family + "'");
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed map JSON: ") + e.what());
  }
}

json models_to_json(const std::vector<SavedModel>& models) {
  auto arr = json::array();
  for (const auto& m : models) {
    arr.push_back({{"family", m.family},
                   {"kernel", to_string(m.spec.family)},
                   {"gamma", m.spec.gamma},
                   {"seed", m.seed},
                   {"positive_class", m.positive_class ? json(*m.positive_class) : json(nullptr)},
                   {"lambda", m.model.lambda},
                   {"w", vec_to_json(m.model.w)},
                   {"map", map_to_json(m.map)}});
  }
  return {{"format", "cnm-model"}, {"version", kModelFormatVersion}, {"models", arr}};
}

std::vector<SavedModel> models_from_json(const json& j) {
  try {
    if (j.at("format") != "cnm-model") throw ParseError("not a cnm-model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw ParseError("unsupported model format version");
    std::vector<SavedModel> out;
    for (const auto& e : j.at("models")) {
      if (e.at("kernel") != "rbf") throw ParseError("unsupported kernel family");
      SavedModel m{e.at("family").get<std::string>(),
                   KernelSpec{KernelFamily::Rbf, e.at("gamma").get<double>()},
                   e.at("seed").get<std::uint64_t>(),
                   map_from_json(e.at("map")),
                   LinearModel{vec_from_json(e.at("w")), e.at("lambda").get<double>()},
                   std::nullopt};
      if (!e.at("positive_class").is_null()) m.positive_class = e.at("positive_class").get<int>();
      if (m.model.w.size() != output_dim(m.map))
        throw ParseError("weight vector does not match map output dimension");
      out.push_back(std::move(m));
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
}

void save_models(const std::filesystem::path& path, const std::vector<SavedModel>& models) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << models_to_json(models).dump(1) << '\n';
}

std::vector<SavedModel> load_models(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return models_from_json(j);
}

}  // namespace cnm
