#include "etd/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "etd/error.hpp"
#include "etd/random.hpp"

namespace etd {
namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error("BadCsv", "line " + std::to_string(line_no) + ": not a finite number: '" + s + "'");
  }
  return v;
}

struct VectorHash {
  std::size_t operator()(const std::vector<double>& v) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (double d : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof bits);
      h = splitmix64(h ^ bits);
    }
    return static_cast<std::size_t>(h);
  }
};

std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool, std::size_t n, Rng& rng) {
  // Partial Fisher-Yates, then restore source order.
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

std::size_t Dataset::column_index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error("MissingFeature", name);
  return static_cast<std::size_t>(it - columns.begin());
}

Dataset Dataset::project(const std::vector<std::string>& cols) const {
  std::vector<std::size_t> idx;
  idx.reserve(cols.size());
  for (const auto& c : cols) idx.push_back(column_index(c));
  Dataset out;
  out.columns = cols;
  out.rows.reserve(rows.size());
  for (const auto& r : rows) {
    LabeledRow nr{r.session_id, {}, r.label, r.source_dataset};
    nr.features.reserve(idx.size());
    for (auto i : idx) nr.features.push_back(r.features[i]);
    out.rows.push_back(std::move(nr));
  }
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& row_indices) const {
  Dataset out;
  out.columns = columns;
  out.rows.reserve(row_indices.size());
  for (auto i : row_indices) out.rows.push_back(rows.at(i));
  return out;
}

Matrix Dataset::matrix() const {
  Matrix m(rows.size(), columns.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].features.begin(), rows[i].features.end(), m.row(i).begin());
  }
  return m;
}

std::vector<int> Dataset::labels() const {
  std::vector<int> y;
  y.reserve(rows.size());
  for (const auto& r : rows) y.push_back(r.label);
  return y;
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [label](const LabeledRow& r) { return r.label == label; }));
}

std::string format_number(double x) {
  if (x == 0.0) return "0";  // also folds -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Dataset& d) {
  out << "session_id";
  for (const auto& c : d.columns) out << ',' << quote_if_needed(c);
  out << ",label,source_dataset\n";
  for (const auto& r : d.rows) {
    if (r.features.size() != d.columns.size()) throw Error("ShapeMismatch", "row " + r.session_id);
    out << quote_if_needed(r.session_id);
    for (double v : r.features) out << ',' << format_number(v);
    out << ',' << r.label << ',' << quote_if_needed(r.source_dataset) << '\n';
  }
}

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("BadCsv", "missing header row");
  auto header = parse_csv_line(line);
  if (header.size() < 3 || header.front() != "session_id" || header[header.size() - 2] != "label" ||
      header.back() != "source_dataset") {
    throw Error("BadCsv", "header must be session_id,<features...>,label,source_dataset");
  }
  Dataset d;
  d.columns.assign(header.begin() + 1, header.end() - 2);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = parse_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error("BadCsv", "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                " cells, got " + std::to_string(cells.size()));
    }
    LabeledRow r;
    r.session_id = cells.front();
    r.features.reserve(d.columns.size());
    for (std::size_t i = 1; i + 2 < cells.size(); ++i) r.features.push_back(parse_number(cells[i], line_no));
    const auto& label = cells[cells.size() - 2];
    if (label != "0" && label != "1") {
      throw Error("BadCsv", "line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    r.label = label == "1" ? 1 : 0;
    r.source_dataset = cells.back();
    if (r.source_dataset.empty()) throw Error("BadCsv", "line " + std::to_string(line_no) + ": empty source_dataset");
    d.rows.push_back(std::move(r));
  }
  return d;
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("CannotOpen", path);
  return read_csv(in);
}

void write_csv_file(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("CannotOpen", path);
  write_csv(out, d);
}

DedupResult deduplicate(const std::vector<LabeledRow>& rows) {
  DedupResult out;
  // feature vector -> bitmask of labels seen
  std::unordered_map<std::vector<double>, unsigned, VectorHash> seen;
  for (const auto& r : rows) {
    auto& mask = seen[r.features];
    const unsigned bit = r.label == 1 ? 2u : 1u;
    if (mask & bit) {
      ++out.removed_count;
      continue;
    }
    if (mask != 0) ++out.conflict_count;
    mask |= bit;
    out.rows.push_back(r);
  }
  return out;
}

double Normalizer::transform(std::size_t feature, double x) const {
  const double l = lo[feature];
  const double h = hi[feature];
  const double lower = range == NormRange::zero_one ? 0.0 : -1.0;
  if (h <= l) return lower;
  double t = std::clamp((x - l) / (h - l), 0.0, 1.0);
  return range == NormRange::zero_one ? t : 2.0 * t - 1.0;
}

Matrix Normalizer::apply(const Matrix& x) const {
  if (x.cols != lo.size()) throw Error("CatalogMismatch", "column count differs from fitted normalizer");
  Matrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = transform(j, x(i, j));
  }
  return out;
}

Dataset Normalizer::apply(const Dataset& d) const {
  if (!columns.empty() && d.columns != columns) throw Error("CatalogMismatch", "dataset columns differ");
  if (d.columns.size() != lo.size()) throw Error("CatalogMismatch", "column count differs");
  Dataset out = d;
  for (auto& r : out.rows) {
    for (std::size_t j = 0; j < r.features.size(); ++j) r.features[j] = transform(j, r.features[j]);
  }
  return out;
}

Normalizer fit_normalizer(const Matrix& train, NormRange range) {
  if (train.rows == 0) throw Error("EmptyTrain", "cannot fit a normalizer on zero rows");
  Normalizer n;
  n.range = range;
  n.lo.assign(train.cols, 0.0);
  n.hi.assign(train.cols, 0.0);
  for (std::size_t j = 0; j < train.cols; ++j) {
    double lo = train(0, j);
    double hi = lo;
    for (std::size_t i = 1; i < train.rows; ++i) {
      lo = std::min(lo, train(i, j));
      hi = std::max(hi, train(i, j));
    }
    n.lo[j] = lo;
    n.hi[j] = hi;
  }
  return n;
}

Normalizer fit_normalizer(const Dataset& train, NormRange range) {
  Normalizer n = fit_normalizer(train.matrix(), range);
  n.columns = train.columns;
  return n;
}

std::vector<LabeledRow> balance_undersample(const std::vector<LabeledRow>& rows, std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < rows.size(); ++i) by_class[rows[i].label == 1 ? 1 : 0].push_back(i);
  if (by_class[0].empty() || by_class[1].empty()) throw Error("SingleClass", "balancing needs both classes");
  const int majority = by_class[1].size() > by_class[0].size() ? 1 : 0;
  const std::size_t target = by_class[1 - majority].size();
  Rng rng(derive_seed(seed, "undersample"));
  auto kept_majority = sample_without_replacement(by_class[majority], target, rng);
  std::vector<std::size_t> keep = by_class[1 - majority];
  keep.insert(keep.end(), kept_majority.begin(), kept_majority.end());
  std::sort(keep.begin(), keep.end());
  std::vector<LabeledRow> out;
  out.reserve(keep.size());
  for (auto i : keep) out.push_back(rows[i]);
  return out;
}

nlohmann::ordered_json CompositionPlan::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  auto& t = j["targets"];
  t = nlohmann::ordered_json::object();
  for (const auto& [source, c] : targets) {
    t[source] = {{"malicious_sessions", c.malicious}, {"legitimate_sessions", c.legitimate}};
  }
  return j;
}

CompositionPlan CompositionPlan::from_json(const nlohmann::json& j) {
  CompositionPlan p;
  p.seed = j.value("seed", std::uint64_t{0});
  if (!j.contains("targets") || !j["targets"].is_object()) throw Error("BadPlan", "plan needs a 'targets' object");
  for (const auto& [source, c] : j["targets"].items()) {
    const auto mal = c.at("malicious_sessions").get<std::int64_t>();
    const auto leg = c.at("legitimate_sessions").get<std::int64_t>();
    if (mal < 0 || leg < 0) throw Error("BadPlan", "negative target for " + source);
    p.targets[source] = ClassTargets{static_cast<std::size_t>(mal), static_cast<std::size_t>(leg)};
  }
  return p;
}

CompositionPlan reference_composition_plan(double factor, std::uint64_t seed) {
  struct Row {
    const char* source;
    double malicious;
    double legitimate;
  };
  static constexpr Row kRows[] = {
      {"UNSW-IoT-2019", 12900, 13300}, {"CICIDS-2017", 13000, 13500}, {"CIC-AndMal2017", 12403, 12400},
      {"MCFP", 13600, 12180},          {"CICIDS-2012", 7613, 6731},
  };
  CompositionPlan p;
  p.seed = seed;
  for (const auto& r : kRows) {
    p.targets[r.source] = ClassTargets{static_cast<std::size_t>(std::llround(r.malicious * factor)),
                                       static_cast<std::size_t>(std::llround(r.legitimate * factor))};
  }
  return p;
}

std::vector<LabeledRow> compose(const std::map<std::string, std::vector<LabeledRow>>& sources,
                                const CompositionPlan& plan) {
  std::vector<LabeledRow> out;
  for (const auto& [source, targets] : plan.targets) {
    if (targets.malicious == 0 && targets.legitimate == 0) continue;
    auto it = sources.find(source);
    static const std::vector<LabeledRow> kEmpty;
    const auto& rows = it == sources.end() ? kEmpty : it->second;
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < rows.size(); ++i) by_class[rows[i].label == 1 ? 1 : 0].push_back(i);
    const std::size_t need[2] = {targets.legitimate, targets.malicious};
    for (int cls : {1, 0}) {
      if (by_class[cls].size() < need[cls]) {
        throw Error("InsufficientRows", "source " + source + ", class " + (cls == 1 ? "malicious" : "legitimate") +
                                            ": have " + std::to_string(by_class[cls].size()) + ", need " +
                                            std::to_string(need[cls]));
      }
    }
    std::vector<std::size_t> chosen;
    for (int cls : {1, 0}) {
      Rng rng(derive_seed(plan.seed, "compose/" + source + "/" + std::to_string(cls)));
      auto picked = sample_without_replacement(by_class[cls], need[cls], rng);
      chosen.insert(chosen.end(), picked.begin(), picked.end());
    }
    std::sort(chosen.begin(), chosen.end());
    for (auto i : chosen) {
      LabeledRow r = rows[i];
      r.source_dataset = source;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

nlohmann::ordered_json FoldPlan::to_json() const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["seed"] = seed;
  j["assignments"] = assignments;
  return j;
}

FoldPlan FoldPlan::from_json(const nlohmann::json& j) {
  FoldPlan p;
  p.k = j.at("k").get<std::size_t>();
  p.seed = j.value("seed", std::uint64_t{0});
  p.assignments = j.at("assignments").get<std::vector<std::size_t>>();
  for (auto a : p.assignments) {
    if (a >= p.k) throw Error("BadPlan", "fold id out of range");
  }
  return p;
}

FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("TooFewRows", "k must be at least 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  for (int cls : {0, 1}) {
    if (by_class[cls].size() < k) {
      throw Error("TooFewRows", "class " + std::to_string(cls) + " has " + std::to_string(by_class[cls].size()) +
                                    " rows, fewer than k=" + std::to_string(k));
    }
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(labels.size(), 0);
  std::size_t next_fold = 0;
  for (int cls : {1, 0}) {
    auto idx = by_class[cls];
    Rng rng(derive_seed(seed, "kfold/" + std::to_string(cls)));
    rng.shuffle(idx);
    for (auto i : idx) {
      plan.assignments[i] = next_fold;
      next_fold = (next_fold + 1) % k;
    }
  }
  return plan;
}

}  // namespace etd
