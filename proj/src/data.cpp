#include "cnm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include "cnm/error.hpp"

namespace cnm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<int> parse_label(std::string_view s) {
  const auto v = parse_double(s);
  if (!v || !std::isfinite(*v) || std::floor(*v) != *v) return std::nullopt;
  return static_cast<int>(*v);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

bool Dataset::is_binary() const {
  return std::all_of(labels.begin(), labels.end(), [](int y) { return y == 1 || y == -1; });
}

std::vector<int> Dataset::classes() const {
  std::vector<int> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Dataset::validate(bool binary) const {
  if (size() < 1 || dim() < 1) throw InvalidArgument("dataset must have N >= 1 and d >= 1");
  if (static_cast<Index>(labels.size()) != size())
    throw InvalidArgument("dataset has " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(size()) + " rows");
  if (!features.allFinite()) throw InvalidArgument("dataset contains non-finite features");
  if (binary && !is_binary()) throw InvalidArgument("binary mode requires labels in {-1, +1}");
}

Dataset load_libsvm(const std::filesystem::path& path) {
  auto in = open_input(path);
  struct Row {
    int label;
    std::vector<std::pair<Index, double>> entries;
  };
  std::vector<Row> rows;
  Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = line;
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;

    std::istringstream tokens{std::string(sv)};
    std::string tok;
    tokens >> tok;
    const auto label = parse_label(tok);
    if (!label) throw ParseError("invalid label '" + tok + "' in " + path.string(), line_no);
    Row row{*label, {}};
    Index prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError("expected idx:val, got '" + tok + "'", line_no);
      const auto idx = parse_label(std::string_view(tok).substr(0, colon));
      const auto val = parse_double(std::string_view(tok).substr(colon + 1));
      if (!idx || *idx < 1) throw ParseError("invalid feature index in '" + tok + "'", line_no);
      if (!val || !std::isfinite(*val)) throw ParseError("invalid value in '" + tok + "'", line_no);
      if (*idx <= prev) throw ParseError("feature indices must be strictly increasing", line_no);
      prev = *idx;
      max_index = std::max<Index>(max_index, *idx);
      row.entries.emplace_back(*idx - 1, *val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no samples in " + path.string());
  if (max_index == 0) throw ParseError("no features in " + path.string());

  Dataset ds;
  ds.name = path.stem().string();
  ds.features = RowMatrix::Zero(static_cast<Index>(rows.size()), max_index);
  ds.labels.reserve(rows.size());
  for (Index i = 0; i < static_cast<Index>(rows.size()); ++i) {
    ds.labels.push_back(rows[i].label);
    for (const auto& [j, v] : rows[i].entries) ds.features(i, j) = v;
  }
  return ds;
}

void save_libsvm(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  char buf[64];
  for (Index i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (Index j = 0; j < ds.dim(); ++j) {
      const double v = ds.features(i, j);
      if (v == 0.0) continue;
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out << ' ' << (j + 1) << ':' << std::string_view(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts) {
  auto in = open_input(path);
  std::vector<std::vector<double>> cells;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && opts.has_header) continue;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest = line;
    std::size_t col = 0;
    while (true) {
      const auto cut = rest.find(opts.delimiter);
      const auto cell = rest.substr(0, cut);
      const auto v = parse_double(cell);
      if (!v)
        throw ParseError("non-numeric cell '" + std::string(trim(cell)) + "' at row " +
                             std::to_string(line_no) + ", column " + std::to_string(col + 1),
                         line_no);
      row.push_back(*v);
      ++col;
      if (cut == std::string_view::npos) break;
      rest.remove_prefix(cut + 1);
    }
    if (cells.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw ParseError("ragged row: expected " + std::to_string(width) + " columns, got " +
                           std::to_string(row.size()),
                       line_no);
    }
    cells.push_back(std::move(row));
  }
  if (cells.empty()) throw ParseError("no samples in " + path.string());
  if (opts.label_column < 0 || static_cast<std::size_t>(opts.label_column) >= width)
    throw InvalidArgument("label column " + std::to_string(opts.label_column) +
                          " out of range for " + std::to_string(width) + " columns");
  if (width < 2) throw ParseError("CSV needs at least one feature column besides the label");

  Dataset ds;
  ds.name = path.stem().string();
  const auto n = static_cast<Index>(cells.size());
  const auto d = static_cast<Index>(width) - 1;
  ds.features.resize(n, d);
  for (Index i = 0; i < n; ++i) {
    const auto& row = cells[i];
    const double raw = row[opts.label_column];
    if (std::floor(raw) != raw)
      throw ParseError("label is not an integer at row " + std::to_string(i + 1));
    ds.labels.push_back(static_cast<int>(raw));
    Index j = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (static_cast<Index>(c) == opts.label_column) continue;
      ds.features(i, j++) = row[c];
    }
  }
  return ds;
}

Dataset make_two_rings(Index n_per_class, double inner_radius, double outer_radius,
                       double noise_sd, std::uint64_t seed) {
  if (n_per_class <= 0) throw InvalidArgument("n_per_class must be positive");
  if (inner_radius <= 0 || outer_radius <= 0) throw InvalidArgument("radii must be positive");
  if (noise_sd < 0) throw InvalidArgument("noise_sd must be nonnegative");
  if (outer_radius <= inner_radius + 3 * noise_sd)
    throw InvalidArgument("outer radius must exceed inner radius + 3 * noise_sd");

  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset ds;
  ds.name = "two-rings";
  ds.features.resize(2 * n_per_class, 2);
  ds.labels.resize(2 * n_per_class);
  for (Index i = 0; i < 2 * n_per_class; ++i) {
    const bool outer = (i % 2) == 1;
    const double radius = (outer ? outer_radius : inner_radius) + noise_sd * noise(rng);
    const double a = angle(rng);
    ds.features(i, 0) = radius * std::cos(a);
    ds.features(i, 1) = radius * std::sin(a);
    ds.labels[i] = outer ? 1 : -1;
  }
  return ds;
}

Dataset make_gaussian(Index n, Index d, std::uint64_t seed) {
  if (n <= 0 || d <= 0) throw InvalidArgument("n and d must be positive");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Dataset ds;
  ds.name = "gaussian";
  ds.features.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) ds.features(i, j) = normal(rng);
  ds.labels.resize(n);
  for (auto& y : ds.labels) y = coin(rng) ? 1 : -1;
  return ds;
}

std::vector<Index> sample_batch(const Dataset& ds, Index m, Rng& rng) {
  const Index n = ds.size();
  if (m < 1) throw InvalidArgument("batch size must be >= 1");
  if (m > n)
    throw InvalidArgument("batch size " + std::to_string(m) + " exceeds dataset size " +
                          std::to_string(n));
  // Floyd's algorithm: O(M) draws, each subset equally likely.
  std::vector<Index> out;
  out.reserve(m);
  std::unordered_set<Index> seen;
  seen.reserve(static_cast<std::size_t>(m) * 2);
  for (Index j = n - m; j < n; ++j) {
    const Index t = std::uniform_int_distribution<Index>(0, j)(rng);
    if (seen.insert(t).second) {
      out.push_back(t);
    } else {
      seen.insert(j);
      out.push_back(j);
    }
  }
  return out;
}

std::vector<PairSample> sample_pairs(const Dataset& ds, Index n, Rng& rng) {
  if (n < 0) throw InvalidArgument("pair count must be nonnegative");
  std::uniform_int_distribution<Index> pick(0, ds.size() - 1);
  std::vector<PairSample> out(static_cast<std::size_t>(n));
  for (auto& p : out) {
    p.i = pick(rng);
    p.j = pick(rng);
  }
  return out;
}

GammaEstimate estimate_gamma(const Dataset& ds, Rng& rng, Index sample_n, Index nn_rank) {
  if (nn_rank < 1) throw InvalidArgument("nn_rank must be >= 1");
  if (ds.size() < nn_rank + 1)
    throw InvalidArgument("bandwidth heuristic needs at least " + std::to_string(nn_rank + 1) +
                          " rows, dataset has " + std::to_string(ds.size()));
  GammaEstimate est;
  if (sample_n > ds.size()) {
    sample_n = ds.size();
    est.clamped = true;
  }
  if (sample_n < nn_rank + 1)
    throw InvalidArgument("sample_n must be at least nn_rank + 1");

  const auto idx = sample_batch(ds, sample_n, rng);
  // Rows sorted by index so the result does not depend on draw order.
  std::vector<Index> rows(idx);
  std::sort(rows.begin(), rows.end());
  RowMatrix pts(sample_n, ds.dim());
  for (Index a = 0; a < sample_n; ++a) pts.row(a) = ds.features.row(rows[a]);

  std::vector<double> dist(static_cast<std::size_t>(sample_n - 1));
  double total = 0.0;
  for (Index a = 0; a < sample_n; ++a) {
    std::size_t c = 0;
    for (Index b = 0; b < sample_n; ++b)
      if (b != a) dist[c++] = (pts.row(a) - pts.row(b)).norm();
    std::nth_element(dist.begin(), dist.begin() + (nn_rank - 1), dist.end());
    total += dist[static_cast<std::size_t>(nn_rank - 1)];
  }
  est.sigma = total / static_cast<double>(sample_n);
  est.sample_used = sample_n;
  if (!(est.sigma > 0.0))
    throw DegenerateData("bandwidth heuristic: mean nearest-neighbour distance is zero");
  est.gamma = 2.0 / (est.sigma * est.sigma);
  return est;
}

Dataset subset(const Dataset& ds, std::span<const Index> indices) {
  Dataset out;
  out.name = ds.name;
  out.class_map = ds.class_map;
  out.features.resize(static_cast<Index>(indices.size()), ds.dim());
  out.labels.reserve(indices.size());
  for (Index r = 0; r < static_cast<Index>(indices.size()); ++r) {
    out.features.row(r) = ds.features.row(indices[r]);
    out.labels.push_back(ds.labels[indices[r]]);
  }
  return out;
}

Dataset binarize(const Dataset& ds, const std::set<int>& positive) {
  if (positive.empty()) throw InvalidArgument("binarize: empty positive class set");
  Dataset out = ds;
  std::map<int, int> mapping;
  for (int c : ds.classes()) mapping[c] = positive.count(c) ? 1 : -1;
  for (auto& y : out.labels) y = mapping[y];
  out.class_map = std::move(mapping);
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InvalidArgument("test_fraction must lie in (0, 1)");
  const Index n_test = std::clamp<Index>(
      static_cast<Index>(std::llround(test_fraction * static_cast<double>(ds.size()))), 1,
      ds.size() - 1);
  std::vector<Index> perm(static_cast<std::size_t>(ds.size()));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::span<const Index> all(perm);
  return {subset(ds, all.subspan(n_test)), subset(ds, all.first(n_test))};
}

Standardizer Standardizer::fit(const Dataset& ds) {
  Standardizer s;
  s.mean = ds.features.colwise().mean().transpose();
  s.scale.resize(ds.dim());
  for (Index j = 0; j < ds.dim(); ++j) {
    const double var = (ds.features.col(j).array() - s.mean(j)).square().mean();
    s.scale(j) = var > 0 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return s;
}

void Standardizer::apply(Dataset& ds) const {
  if (ds.dim() != mean.size()) throw InvalidArgument("standardizer dimension mismatch");
  ds.features.rowwise() -= mean.transpose();
  ds.features.array().rowwise() *= scale.transpose().array();
}

}  // namespace cnm
