#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cnm/cli.hpp"
#include "cnm/eval.hpp"
#include "cnm/serialize.hpp"

#ifndef CNM_VERSION
#define CNM_VERSION "unknown"
#endif

namespace cnm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shortest round-trip decimal form; identical inputs give identical text.
std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string run_stem(const std::string& family, Index k, std::uint64_t seed) {
  return family + "_k" + std::to_string(k) + "_seed" + std::to_string(seed);
}

// ---------------------------------------------------------------------------
// Training one binary problem.

struct BinaryRun {
  AnyMap map;
  LinearModel model;
  TrainTrace trace;
};

BinaryRun train_binary(const std::string& family, const TrainConfig& tc, bool rffm_phases,
                       const KernelSpec& spec, const Dataset& train, const Dataset& test) {
  const Index d = train.dim();
  if (family == "dense-rffm") {
    Rng rng(tc.seed);
    auto r = train_fixed_map(init_random_dense(spec, d, tc.k, rffm_phases, rng), train, tc, &test);
    return {std::move(r.map), std::move(r.model), std::move(r.trace)};
  }
  if (family == "circulant-random") {
    // Same draw as the initialisation of circulant-optimized for this seed.
    Rng rng(tc.seed);
    auto r = train_fixed_map(init_random_circulant(spec, d, tc.k, rng, tc.with_phases), train, tc,
                             &test);
    return {std::move(r.map), std::move(r.model), std::move(r.trace)};
  }
  if (family == "cnm") {
    auto r = train_cnm(train, tc, spec, &test);
    return {std::move(r.map), std::move(r.model), std::move(r.trace)};
  }
  if (family == "circulant-optimized") {
    auto r = train_circulant_cnm(train, tc, spec, &test);
    return {std::move(r.map), std::move(r.model), std::move(r.trace)};
  }
  if (family == "cnm-kerapp") {
    auto ka = train_kernel_approx(train, tc, spec, &test);
    auto r = train_fixed_map(std::move(ka.map), train, tc, &test);
    for (std::size_t i = 0; i < r.trace.records.size() && i < ka.trace.records.size(); ++i)
      r.trace.records[i].mse = ka.trace.records[i].mse;
    return {std::move(r.map), std::move(r.model), std::move(r.trace)};
  }
  throw ConfigError("unknown family '" + family + "'");
}

double map_score(const AnyMap& map, const LinearModel& model, const Vector& x) {
  return std::visit([&](const auto& m) { return model.w.dot(m.project(x)); }, map);
}

// ---------------------------------------------------------------------------
// Kernel approximation error of a map on the test set.

class MseOracle {
 public:
  MseOracle(const KernelSpec& spec, const Dataset& test, Index pairs, std::uint64_t seed)
      : spec_(spec), test_(test) {
    if (test.size() <= kDefaultGramCap) {
      gram_ = gram_exact(spec, test).values;
    } else {
      Rng rng(derive_seed(seed, 5));
      pairs_ = sample_pairs(test, pairs, rng);
    }
  }

  double operator()(const AnyMap& map) const {
    return std::visit(
        [&](const auto& m) {
          if (!pairs_.empty())
            return approx_mse(m, spec_, test_, std::span<const PairSample>(pairs_));
          const RowMatrix z = map_all(m, test_);
          const Matrix approx = z * z.transpose();
          const double n = static_cast<double>(test_.size());
          return (gram_ - approx).squaredNorm() / (n * n);
        },
        map);
  }

 private:
  KernelSpec spec_;
  const Dataset& test_;
  Matrix gram_;
  std::vector<PairSample> pairs_;
};

// ---------------------------------------------------------------------------
// One (family, k, seed) run, binary or one-vs-rest.

struct RunResult {
  std::string family;
  Index k = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double mse = 0.0;
  std::vector<std::pair<std::optional<int>, TrainTrace>> traces;
  std::vector<SavedModel> models;
};

RunResult run_one(const ExperimentConfig& cfg, const std::string& family, Index k,
                  std::uint64_t seed, const KernelSpec& spec, const ResolvedData& data,
                  const MseOracle& mse) {
  TrainConfig tc = cfg.train;
  tc.k = k;
  tc.seed = seed;
  RunResult res{family, k, seed, 0.0, 0.0, {}, {}};
  if (data.train.is_binary()) {
    BinaryRun run = train_binary(family, tc, cfg.rffm_phases, spec, data.train, data.test);
    res.accuracy = std::visit([&](const auto& m) { return evaluate(run.model, m, data.test); },
                              run.map)
                       .accuracy;
    res.mse = mse(run.map);
    res.traces.emplace_back(std::nullopt, std::move(run.trace));
    res.models.push_back({family, spec, seed, std::move(run.map), std::move(run.model),
                          std::nullopt});
    return res;
  }
  // One-vs-rest: a binary problem per class, prediction by the largest score.
  const auto classes = data.train.classes();
  double mse_sum = 0.0;
  for (const int c : classes) {
    const Dataset tr = binarize(data.train, {c});
    const Dataset te = binarize(data.test, {c});
    BinaryRun run = train_binary(family, tc, cfg.rffm_phases, spec, tr, te);
    mse_sum += mse(run.map);
    res.traces.emplace_back(c, std::move(run.trace));
    res.models.push_back({family, spec, seed, std::move(run.map), std::move(run.model), c});
  }
  res.mse = mse_sum / static_cast<double>(classes.size());
  Index correct = 0;
  for (Index i = 0; i < data.test.size(); ++i) {
    const Vector x = data.test.row(i);
    int best_class = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& m : res.models) {
      const double s = map_score(m.map, m.model, x);
      if (s > best) {
        best = s;
        best_class = *m.positive_class;
      }
    }
    correct += best_class == data.test.labels[i];
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(data.test.size());
  return res;
}

// ---------------------------------------------------------------------------
// Shared experiment driver for train and sweep.

struct Resolved {
  ResolvedData data;
  KernelSpec spec;
  std::optional<GammaEstimate> estimate;
};

Resolved resolve(const ExperimentConfig& cfg) {
  Resolved r{resolve_data(cfg), {}, std::nullopt};
  r.data.train.validate();
  r.data.test.validate();
  if (r.data.train.dim() != r.data.test.dim())
    throw ConfigError("train and test data have different dimensions");
  if (cfg.gamma) {
    r.spec = {KernelFamily::Rbf, *cfg.gamma};
  } else {
    Rng rng(cfg.gamma_seed);
    r.estimate = estimate_gamma(r.data.train, rng, cfg.gamma_sample, cfg.gamma_rank);
    r.spec = {KernelFamily::Rbf, r.estimate->gamma};
  }
  return r;
}

json versions_json() {
  return {{"cnm", CNM_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

json standardizer_json(const std::optional<Standardizer>& s) {
  if (!s) return nullptr;
  return {{"mean", std::vector<double>(s->mean.data(), s->mean.data() + s->mean.size())},
          {"scale", std::vector<double>(s->scale.data(), s->scale.data() + s->scale.size())}};
}

std::string aggregate_csv(const std::vector<RunResult>& runs) {
  std::ostringstream os;
  os << "family,k,n_seeds,mean_accuracy,sd_accuracy,mean_mse,sd_mse\n";
  std::vector<std::pair<std::string, Index>> groups;
  for (const auto& r : runs)
    if (std::find(groups.begin(), groups.end(), std::make_pair(r.family, r.k)) == groups.end())
      groups.emplace_back(r.family, r.k);
  for (const auto& [family, k] : groups) {
    std::vector<double> acc, mse;
    for (const auto& r : runs)
      if (r.family == family && r.k == k) {
        acc.push_back(r.accuracy);
        mse.push_back(r.mse);
      }
    auto stats = [](const std::vector<double>& v) {
      const double n = static_cast<double>(v.size());
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : std::nan("");
      return std::make_pair(mean, sd);
    };
    const auto [ma, sa] = stats(acc);
    const auto [mm, sm] = stats(mse);
    os << family << ',' << k << ',' << acc.size() << ',' << num(ma) << ',' << num(sa) << ','
       << num(mm) << ',' << num(sm) << '\n';
  }
  return os.str();
}

int run_experiment(const ExperimentConfig& cfg, const std::string& command) {
  const auto start = std::chrono::steady_clock::now();
  const Resolved r = resolve(cfg);
  fs::create_directories(cfg.out);
  const MseOracle mse(r.spec, r.data.test, cfg.eval_pairs, cfg.data_seed);

  std::vector<RunResult> runs;
  std::vector<std::string> outputs;
  for (const auto& family : cfg.families)
    for (const Index k : cfg.ks)
      for (const std::uint64_t seed : cfg.seeds) {
        std::cerr << command << ": " << family << " k=" << k << " seed=" << seed << '\n';
        RunResult run = run_one(cfg, family, k, seed, r.spec, r.data, mse);
        if (command == "train") {
          const std::string stem = run_stem(family, k, seed);
          for (const auto& [cls, trace] : run.traces) {
            const std::string name =
                "trace_" + stem + (cls ? "_class" + std::to_string(*cls) : "") + ".csv";
            write_file(fs::path(cfg.out) / name, trace.to_csv());
            outputs.push_back(name);
          }
          json model = models_to_json(run.models);
          model["standardizer"] = standardizer_json(r.data.standardizer);
          const std::string name = "model_" + stem + ".json";
          write_file(fs::path(cfg.out) / name, model.dump(1) + "\n");
          outputs.push_back(name);
        }
        runs.push_back(std::move(run));
      }

  if (command == "sweep") {
    std::ostringstream os;
    os << "family,k,seed,accuracy,mse\n";
    for (const auto& run : runs)
      os << run.family << ',' << run.k << ',' << run.seed << ',' << num(run.accuracy) << ','
         << num(run.mse) << '\n';
    write_file(fs::path(cfg.out) / "sweep.csv", os.str());
    outputs.push_back("sweep.csv");
  }
  write_file(fs::path(cfg.out) / "aggregate.csv", aggregate_csv(runs));
  outputs.push_back("aggregate.csv");

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest{
      {"command", command},
      {"config", cfg.values},
      {"resolved_gamma", r.spec.gamma},
      {"gamma_source", cfg.gamma ? "fixed" : "auto"},
      {"seeds", cfg.seeds},
      {"families", cfg.families},
      {"k", cfg.ks},
      {"data",
       {{"source", cfg.data},
        {"n_train", r.data.train.size()},
        {"n_test", r.data.test.size()},
        {"dim", r.data.train.dim()},
        {"classes", r.data.train.classes()},
        {"one_vs_rest", !r.data.train.is_binary()},
        {"standardize", cfg.standardize}}},
      {"versions", versions_json()},
      {"wall_seconds", wall},
      {"outputs", outputs}};
  if (r.estimate)
    manifest["gamma_estimate"] = {{"sigma", r.estimate->sigma},
                                  {"sample_used", r.estimate->sample_used},
                                  {"clamped", r.estimate->clamped}};
  write_file(fs::path(cfg.out) / "manifest.json", manifest.dump(2) + "\n");
  std::cout << aggregate_csv(runs);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Remaining commands.

int cmd_estimate_gamma(const ExperimentConfig& cfg) {
  const ResolvedData data = resolve_data(cfg);
  data.train.validate();
  Rng rng(cfg.gamma_seed);
  const auto est = estimate_gamma(data.train, rng, cfg.gamma_sample, cfg.gamma_rank);
  std::cout << json{{"gamma", est.gamma},
                    {"sigma", est.sigma},
                    {"sample_used", est.sample_used},
                    {"clamped", est.clamped},
                    {"n", data.train.size()}}
                   .dump()
            << '\n';
  return kExitOk;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& model_path, const std::string& csv_out) {
  if (!fs::is_regular_file(model_path)) throw ConfigError("model file not found: " + model_path);
  json j;
  {
    std::ifstream in(model_path);
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError(model_path + ": " + e.what());
    }
  }
  std::vector<SavedModel> models;
  try {
    models = models_from_json(j);
  } catch (const ParseError& e) {
    throw ConfigError(model_path + ": " + e.what());
  }
  if (models.empty()) throw ConfigError(model_path + ": no models stored");

  Dataset ds;
  if (cfg.synthetic()) {
    ds = resolve_data(cfg).test;
  } else {
    ds = load_dataset_file(cfg, cfg.data);
    if (!cfg.positive_classes.empty())
      ds = binarize(ds, std::set<int>(cfg.positive_classes.begin(), cfg.positive_classes.end()));
  }
  if (j.contains("standardizer") && !j["standardizer"].is_null()) {
    Standardizer s;
    const auto mean = j["standardizer"]["mean"].get<std::vector<double>>();
    const auto scale = j["standardizer"]["scale"].get<std::vector<double>>();
    s.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Index>(mean.size()));
    s.scale = Eigen::Map<const Vector>(scale.data(), static_cast<Index>(scale.size()));
    if (ds.dim() < s.mean.size()) {
      RowMatrix wider = RowMatrix::Zero(ds.size(), s.mean.size());
      wider.leftCols(ds.dim()) = ds.features;
      ds.features = std::move(wider);
    }
    s.apply(ds);
  }
  const Index d = input_dim(models.front().map);
  if (ds.dim() < d) {
    RowMatrix wider = RowMatrix::Zero(ds.size(), d);
    wider.leftCols(ds.dim()) = ds.features;
    ds.features = std::move(wider);
  }
  if (ds.dim() != d)
    throw ConfigError("data has dimension " + std::to_string(ds.dim()) + ", model expects " +
                      std::to_string(d));

  EvalReport rep;
  if (models.size() == 1) {
    const auto& m = models.front();
    if (!ds.is_binary() && m.positive_class) ds = binarize(ds, {*m.positive_class});
    rep = std::visit([&](const auto& map) { return evaluate(m.model, map, ds); }, m.map);
  } else {
    rep.n_test = ds.size();
    rep.mean_hinge = std::nan("");
    for (Index i = 0; i < ds.size(); ++i) {
      const Vector x = ds.row(i);
      int best_class = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& m : models) {
        if (!m.positive_class) throw ConfigError(model_path + ": multi-model file lacks classes");
        const double s = map_score(m.map, m.model, x);
        if (s > best) {
          best = s;
          best_class = *m.positive_class;
        }
      }
      auto& cls = rep.per_class[ds.labels[i]];
      ++cls.count;
      if (best_class == ds.labels[i]) {
        ++cls.correct;
        ++rep.n_correct;
      }
    }
    rep.accuracy = static_cast<double>(rep.n_correct) / static_cast<double>(rep.n_test);
  }
  std::cout << to_json(rep) << '\n';
  if (!csv_out.empty()) {
    std::ostringstream os;
    write_csv(os, rep);
    write_file(csv_out, os.str());
  }
  return kExitOk;
}

int cmd_bench(const std::string& d_list, int reps, const std::string& mode, std::uint64_t seed,
              const std::string& out, bool as_json) {
  std::vector<Index> dims;
  {
    std::stringstream ss(d_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      Index v = 0;
      const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || p != item.data() + item.size() || v < 1)
        throw ConfigError("--d-list: invalid dimension '" + item + "'");
      dims.push_back(v);
    }
  }
  if (dims.empty()) throw ConfigError("--d-list: empty list");
  if (reps < 5) throw ConfigError("--reps must be >= 5");
  if (mode != "equal" && mode != "twice") throw ConfigError("--mode must be 'equal' or 'twice'");
  const auto recs =
      bench_projection(dims, mode == "equal" ? KMode::EqualD : KMode::TwiceD, reps, seed);
  std::string text;
  if (as_json) {
    text = to_json(recs) + "\n";
  } else {
    std::ostringstream os;
    write_csv(os, recs);
    text = os.str();
  }
  if (out.empty())
    std::cout << text;
  else
    write_file(out, text);
  return kExitOk;
}

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::string data, out, family, k, seeds, gamma;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("-c,--config", o.config_file, "key = value config file or manifest.json");
  sub->add_option("--set", o.sets, "KEY=VALUE override (repeatable)");
  sub->add_option("--data", o.data, "dataset path or synthetic:two-rings / synthetic:gaussian");
  sub->add_option("-o,--out", o.out, "output directory");
  sub->add_option("--family", o.family, "map family (comma list)");
  sub->add_option("--k", o.k, "feature dimension(s), comma list");
  sub->add_option("--seeds", o.seeds, "seed list, comma separated");
  sub->add_option("--gamma", o.gamma, "kernel gamma or 'auto'");
}

ExperimentConfig build_config(const CommonOptions& o) {
  ExperimentConfig cfg = default_config();
  if (!o.config_file.empty()) load_config_file(cfg, o.config_file);
  const std::pair<const char*, const std::string*> direct[] = {
      {"data", &o.data},   {"out", &o.out},     {"family", &o.family},
      {"k", &o.k},         {"seeds", &o.seeds}, {"gamma", &o.gamma}};
  for (const auto& [key, value] : direct)
    if (!value->empty()) cfg.set(key, *value);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Compact nonlinear maps: training, sweeps and benchmarks"};
  app.require_subcommand(1);

  CommonOptions train_opts, sweep_opts, gamma_opts, eval_opts;
  auto* train = app.add_subcommand("train", "train one or more models and write artifacts");
  add_common(train, train_opts);
  auto* sweep = app.add_subcommand("sweep", "accuracy and MSE over families x k x seeds");
  add_common(sweep, sweep_opts);
  auto* gamma = app.add_subcommand("estimate-gamma", "print the bandwidth heuristic");
  add_common(gamma, gamma_opts);
  auto* eval = app.add_subcommand("eval", "evaluate a saved model file on a dataset");
  add_common(eval, eval_opts);
  std::string model_path, eval_csv;
  eval->add_option("-m,--model", model_path, "model JSON written by train")->required();
  eval->add_option("--csv", eval_csv, "also write the report as CSV");

  auto* bench = app.add_subcommand("bench", "time dense vs circulant projections");
  std::string d_list = "512,2048,8192", mode = "equal", bench_out;
  int reps = 5;
  std::uint64_t bench_seed = 0;
  bool bench_json = false;
  bench->add_option("--d-list", d_list, "comma separated dimensions");
  bench->add_option("--reps", reps, "timed repetitions (>= 5)");
  bench->add_option("--mode", mode, "k = d ('equal') or k = 2d ('twice')");
  bench->add_option("--seed", bench_seed, "random seed");
  bench->add_option("-o,--out", bench_out, "CSV output file (default stdout)");
  bench->add_flag("--json", bench_json, "emit JSON instead of CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  // Phase 1: configuration. Any failure here is a config error.
  ExperimentConfig cfg;
  try {
    if (*train || *sweep) {
      cfg = build_config(*train ? train_opts : sweep_opts);
      cfg.validate();
    } else if (*gamma) {
      cfg = build_config(gamma_opts);
      cfg.validate();
    } else if (*eval) {
      cfg = build_config(eval_opts);
      cfg.validate();
    }
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  // Phase 2: compute.
  try {
    if (*train) return run_experiment(cfg, "train");
    if (*sweep) return run_experiment(cfg, "sweep");
    if (*gamma) return cmd_estimate_gamma(cfg);
    if (*eval) return cmd_eval(cfg, model_path, eval_csv);
    if (*bench) return cmd_bench(d_list, reps, mode, bench_seed, bench_out, bench_json);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCompute;
  }
  return kExitConfig;
}

}  // namespace cnm::cli
