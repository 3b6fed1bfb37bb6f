#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cnm/cli.hpp"

namespace cnm::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why + " (got '" + value + "')");
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) bad(key, value, "not a valid number");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  const double v = parse_number<double>(key, value);
  if (!std::isfinite(v)) bad(key, value, "must be finite");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, value, "expected true or false");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) out.push_back(parse_number<T>(key, item));
  if (out.empty()) bad(key, value, "empty list");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

struct KeySpec {
  const char* name;
  const char* default_value;
  Setter apply;
};

const std::vector<KeySpec>& key_table() {
  using C = ExperimentConfig;
  using S = std::string;
  static const std::vector<KeySpec> table{
      {"data", "", [](C& c, const S&, const S& v) { c.data = v; }},
      {"test_data", "", [](C& c, const S&, const S& v) { c.test_data = v; }},
      {"format", "auto", [](C& c, const S& k, const S& v) {
         if (v != "auto" && v != "libsvm" && v != "csv") bad(k, v, "expected auto, libsvm or csv");
         c.format = v;
       }},
      {"csv_label_column", "0",
       [](C& c, const S& k, const S& v) { c.csv_label_column = parse_number<Index>(k, v); }},
      {"csv_header", "false", [](C& c, const S& k, const S& v) { c.csv_header = parse_bool(k, v); }},
      {"test_fraction", "0.25",
       [](C& c, const S& k, const S& v) { c.test_fraction = parse_double(k, v); }},
      {"standardize", "false",
       [](C& c, const S& k, const S& v) { c.standardize = parse_bool(k, v); }},
      {"data_seed", "0",
       [](C& c, const S& k, const S& v) { c.data_seed = parse_number<std::uint64_t>(k, v); }},
      {"n_train", "2000", [](C& c, const S& k, const S& v) { c.n_train = parse_number<Index>(k, v); }},
      {"n_test", "2000", [](C& c, const S& k, const S& v) { c.n_test = parse_number<Index>(k, v); }},
      {"rings_inner", "1", [](C& c, const S& k, const S& v) { c.rings_inner = parse_double(k, v); }},
      {"rings_outer", "3", [](C& c, const S& k, const S& v) { c.rings_outer = parse_double(k, v); }},
      {"rings_noise", "0.5", [](C& c, const S& k, const S& v) { c.rings_noise = parse_double(k, v); }},
      {"gaussian_dim", "16",
       [](C& c, const S& k, const S& v) { c.gaussian_dim = parse_number<Index>(k, v); }},
      {"gamma", "auto", [](C& c, const S& k, const S& v) {
         if (v == "auto") {
           c.gamma.reset();
           return;
         }
         const double g = parse_double(k, v);
         if (!(g > 0.0)) bad(k, v, "must be positive or 'auto'");
         c.gamma = g;
       }},
      {"gamma_sample", "1000",
       [](C& c, const S& k, const S& v) { c.gamma_sample = parse_number<Index>(k, v); }},
      {"gamma_rank", "50",
       [](C& c, const S& k, const S& v) { c.gamma_rank = parse_number<Index>(k, v); }},
      {"gamma_seed", "0",
       [](C& c, const S& k, const S& v) { c.gamma_seed = parse_number<std::uint64_t>(k, v); }},
      {"family", "cnm", [](C& c, const S& k, const S& v) {
         c.families = split_list(v);
         if (c.families.empty()) bad(k, v, "empty list");
         for (const auto& f : c.families)
           if (std::find(known_families().begin(), known_families().end(), f) ==
               known_families().end())
             bad(k, v, "unknown family '" + f + "'");
       }},
      {"k", "16", [](C& c, const S& k, const S& v) { c.ks = parse_list<Index>(k, v); }},
      {"seeds", "0",
       [](C& c, const S& k, const S& v) { c.seeds = parse_list<std::uint64_t>(k, v); }},
      {"T", "10", [](C& c, const S& k, const S& v) { c.train.outer_iters = parse_number<int>(k, v); }},
      {"T1", "100", [](C& c, const S& k, const S& v) { c.train.w_steps = parse_number<int>(k, v); }},
      {"T2", "100", [](C& c, const S& k, const S& v) { c.train.map_steps = parse_number<int>(k, v); }},
      {"batch_size", "500",
       [](C& c, const S& k, const S& v) { c.train.batch_size = parse_number<Index>(k, v); }},
      {"lambda", "0.0001", [](C& c, const S& k, const S& v) { c.train.lambda = parse_double(k, v); }},
      {"eta0", "1", [](C& c, const S& k, const S& v) { c.train.eta0 = parse_double(k, v); }},
      {"theta_decay", "0",
       [](C& c, const S& k, const S& v) { c.train.theta_decay = parse_double(k, v); }},
      {"continue_step_counter", "true",
       [](C& c, const S& k, const S& v) { c.train.continue_step_counter = parse_bool(k, v); }},
      {"phases", "false", [](C& c, const S& k, const S& v) { c.train.with_phases = parse_bool(k, v); }},
      {"mse_pairs", "500",
       [](C& c, const S& k, const S& v) { c.train.mse_pairs = parse_number<Index>(k, v); }},
      {"validation_pairs", "2000",
       [](C& c, const S& k, const S& v) { c.train.validation_pairs = parse_number<Index>(k, v); }},
      {"rffm_phases", "true", [](C& c, const S& k, const S& v) { c.rffm_phases = parse_bool(k, v); }},
      {"positive_classes", "", [](C& c, const S& k, const S& v) {
         c.positive_classes.clear();
         for (const auto& item : split_list(v)) c.positive_classes.push_back(parse_number<int>(k, item));
       }},
      {"eval_pairs", "100000",
       [](C& c, const S& k, const S& v) { c.eval_pairs = parse_number<Index>(k, v); }},
      {"out", "cnm_out", [](C& c, const S&, const S& v) { c.out = v; }},
  };
  return table;
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string k = trim(key);
  const std::string v = trim(raw);
  const auto& table = key_table();
  const auto it = std::find_if(table.begin(), table.end(),
                               [&](const KeySpec& s) { return k == s.name; });
  if (it == table.end()) throw ConfigError("unknown config key '" + k + "'");
  it->apply(*this, k, v);
  values[k] = v;
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  for (const auto& spec : key_table()) cfg.set(spec.name, spec.default_value);
  return cfg;
}

void load_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object())
      throw ConfigError(path.string() + ": JSON config needs a \"config\" object");
    for (const auto& [key, value] : j["config"].items()) {
      if (!value.is_string()) throw ConfigError(path.string() + ": value of '" + key + "' must be a string");
      cfg.set(key, value.get<std::string>());
    }
    return;
  }
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
}

void ExperimentConfig::validate() const {
  namespace fs = std::filesystem;
  if (data.empty()) throw ConfigError("config key 'data': no dataset given");
  if (synthetic()) {
    if (data != "synthetic:two-rings" && data != "synthetic:gaussian")
      throw ConfigError("config key 'data': unknown synthetic dataset '" + data + "'");
    if (n_train < 2 || n_test < 2) throw ConfigError("config keys 'n_train'/'n_test' must be >= 2");
    if (data == "synthetic:two-rings") {
      if (n_train % 2 != 0 || n_test % 2 != 0)
        throw ConfigError("config keys 'n_train'/'n_test' must be even for two-rings");
      if (!(rings_inner > 0.0) || !(rings_noise >= 0.0) ||
          !(rings_outer > rings_inner + 3.0 * rings_noise))
        throw ConfigError(
            "config keys 'rings_*': need inner > 0, noise >= 0 and outer > inner + 3 * noise");
    }
    if (gaussian_dim < 1) throw ConfigError("config key 'gaussian_dim' must be >= 1");
  } else {
    if (!fs::is_regular_file(data)) throw ConfigError("dataset not found: " + data);
    if (!test_data.empty() && !fs::is_regular_file(test_data))
      throw ConfigError("test dataset not found: " + test_data);
    if (test_data.empty() && !(test_fraction > 0.0 && test_fraction < 1.0))
      throw ConfigError("config key 'test_fraction' must lie in (0, 1)");
  }
  if (csv_label_column < 0) throw ConfigError("config key 'csv_label_column' must be >= 0");
  if (gamma_sample < 2) throw ConfigError("config key 'gamma_sample' must be >= 2");
  if (gamma_rank < 1) throw ConfigError("config key 'gamma_rank' must be >= 1");
  if (eval_pairs < 1) throw ConfigError("config key 'eval_pairs' must be >= 1");
  if (seeds.empty()) throw ConfigError("config key 'seeds': empty list");
  if (out.empty()) throw ConfigError("config key 'out': empty output directory");
  for (const Index k : ks) {
    TrainConfig t = train;
    t.k = k;
    try {
      t.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
}

}  // namespace cnm::cli
