#include "etd/eval.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "etd/error.hpp"
#include "etd/random.hpp"

namespace etd {

namespace {

FoldMetrics evaluate(const TrainedModel& model, const Matrix& x, const std::vector<int>& y) {
  const auto scores = model.score(x);
  const auto rates = metrics(confusion(y, predict_from_scores(scores)));
  return {rates.accuracy, roc_auc(scores, y), rates.fpr, rates.tpr};
}

// Normalizer fitted on `train` only, applied to both sides.
FoldMetrics train_and_test(const ModelSpec& spec, const Dataset& train_set, const Dataset& test_set) {
  const auto norm = fit_normalizer(train_set.matrix());
  const auto model = train(spec, norm.apply(train_set.matrix()), train_set.labels(), train_set.columns);
  return evaluate(model, norm.apply(test_set.matrix()), test_set.labels());
}

nlohmann::ordered_json summary_json(const MetricSummary& s) { return {{"mean", s.mean}, {"std", s.std}}; }

nlohmann::ordered_json fold_json(const FoldMetrics& m) {
  return {{"accuracy", m.accuracy}, {"roc_auc", m.roc_auc}, {"fpr", m.fpr}, {"tpr", m.tpr}};
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["algorithm"] = to_string(spec.algorithm);
  j["feature_set"] = to_string(feature_set);
  j["spec"] = spec.to_json();
  j["k"] = k;
  j["fold_seed"] = fold_seed;
  j["dataset"] = dataset_ref;
  nlohmann::ordered_json folds_json = nlohmann::ordered_json::array();
  for (const auto& f : folds) folds_json.push_back(fold_json(f));
  j["folds"] = folds_json;
  j["accuracy"] = summary_json(accuracy);
  j["roc_auc"] = summary_json(roc_auc);
  j["fpr"] = summary_json(fpr);
  j["tpr"] = summary_json(tpr);
  return j;
}

std::vector<std::string> resolve_set_columns(const Dataset& d, FeatureSetName set) {
  if (set == FeatureSetName::FULL) return d.columns;
  auto cols = feature_set_columns(set);
  for (const auto& c : cols) d.column_index(c);
  return cols;
}

EvalReport run_cv(const ModelSpec& spec, const Dataset& rows, FeatureSetName set, const FoldPlan& plan) {
  if (plan.assignments.size() != rows.rows.size())
    throw Error("ShapeMismatch", "fold plan covers " + std::to_string(plan.assignments.size()) + " rows, dataset has " +
                                     std::to_string(rows.rows.size()));
  const Dataset data = rows.project(resolve_set_columns(rows, set));
  EvalReport report;
  report.spec = spec;
  report.feature_set = set;
  report.k = plan.k;
  report.fold_seed = plan.seed;
  std::vector<double> acc, auc, fpr, tpr;
  for (std::size_t f = 0; f < plan.k; ++f) {
    ModelSpec fold_spec = spec;
    fold_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(f));
    const auto m = train_and_test(fold_spec, data.subset(plan.train_indices(f)), data.subset(plan.test_indices(f)));
    report.folds.push_back(m);
    acc.push_back(m.accuracy);
    auc.push_back(m.roc_auc);
    fpr.push_back(m.fpr);
    tpr.push_back(m.tpr);
  }
  report.accuracy = summarize(acc);
  report.roc_auc = summarize(auc);
  report.fpr = summarize(fpr);
  report.tpr = summarize(tpr);
  return report;
}

const char* to_string(CrossDirection d) {
  return d == CrossDirection::train_others_test_A ? "train_others_test_A" : "train_A_test_others";
}

nlohmann::ordered_json CrossDatasetReport::to_json() const {
  nlohmann::ordered_json j;
  j["direction"] = to_string(direction);
  j["algorithm"] = to_string(spec.algorithm);
  j["feature_set"] = to_string(feature_set);
  j["spec"] = spec.to_json();
  nlohmann::ordered_json cells_json = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    auto cj = fold_json(c.metrics);
    cj["source"] = c.source;
    cells_json.push_back(cj);
  }
  j["cells"] = cells_json;
  return j;
}

std::vector<CrossDatasetReport> run_cross_dataset(const ModelSpec& spec, const Dataset& rows, FeatureSetName set,
                                                  std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < rows.rows.size(); ++i) by_source[rows.rows[i].source_dataset].push_back(i);
  if (by_source.size() < 2) throw Error("SingleSource", "cross-dataset validation needs at least two sources");
  for (const auto& [name, idx] : by_source) {
    std::size_t pos = 0;
    for (auto i : idx) pos += static_cast<std::size_t>(rows.rows[i].label);
    if (pos == 0 || pos == idx.size()) throw Error("SingleClass", "source '" + name + "' lacks a class");
  }
  const Dataset data = rows.project(resolve_set_columns(rows, set));

  std::vector<CrossDatasetReport> out;
  for (auto dir : {CrossDirection::train_others_test_A, CrossDirection::train_A_test_others}) {
    CrossDatasetReport report;
    report.direction = dir;
    report.spec = spec;
    report.feature_set = set;
    for (const auto& [name, idx] : by_source) {
      std::vector<std::size_t> others;
      for (const auto& [other, oidx] : by_source)
        if (other != name) others.insert(others.end(), oidx.begin(), oidx.end());
      std::sort(others.begin(), others.end());
      ModelSpec cell_spec = spec;
      cell_spec.seed = derive_seed(seed, std::string(to_string(dir)) + "/" + name);
      const bool hold_out = dir == CrossDirection::train_others_test_A;
      const auto m = train_and_test(cell_spec, data.subset(hold_out ? others : idx), data.subset(hold_out ? idx : others));
      report.cells.push_back({name, m});
    }
    out.push_back(std::move(report));
  }
  return out;
}

std::string render_cross_markdown(const std::vector<CrossDatasetReport>& reports) {
  std::ostringstream md;
  for (const auto& r : reports) {
    md << "### " << to_string(r.direction) << " (" << to_string(r.spec.algorithm) << ", " << to_string(r.feature_set)
       << ")\n\n| Dataset A | accuracy | roc-auc | FPR | TPR |\n|---|---|---|---|---|\n";
    for (const auto& c : r.cells)
      md << "| " << c.source << " | " << fixed4(c.metrics.accuracy) << " | " << fixed4(c.metrics.roc_auc) << " | "
         << fixed4(c.metrics.fpr) << " | " << fixed4(c.metrics.tpr) << " |\n";
    md << '\n';
  }
  return md.str();
}

GridResult experiment_grid(const Dataset& rows, const GridOptions& options) {
  std::vector<Algorithm> algorithms = options.algorithms;
  if (algorithms.empty()) algorithms.assign(all_algorithms().begin(), all_algorithms().end());
  std::vector<FeatureSetName> sets = options.sets;
  if (sets.empty()) sets.assign(numeric_feature_sets().begin(), numeric_feature_sets().end());

  const auto plan = stratified_kfold(rows.labels(), options.k, derive_seed(options.seed, "folds"));
  struct Cell {
    FeatureSetName set;
    ModelSpec spec;
  };
  std::vector<Cell> cells;
  for (auto set : sets) {
    for (auto a : algorithms) {
      const auto ov = options.overrides.find(a);
      cells.push_back({set, ModelSpec::make(a, derive_seed(options.seed, std::string("model/") + to_string(a)),
                                            ov == options.overrides.end() ? nlohmann::json::object() : ov->second)});
    }
  }

  GridResult result;
  result.reports.resize(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        result.reports[i] = run_cv(cells[i].spec, rows, cells[i].set, plan);
        result.reports[i].dataset_ref = options.dataset_ref;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, cells.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return result;
}

nlohmann::ordered_json GridResult::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : reports) j.push_back(r.to_json());
  return j;
}

std::string GridResult::to_markdown() const {
  std::ostringstream md;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto set = reports[i].feature_set;
    if (i == 0 || reports[i - 1].feature_set != set) {
      if (i != 0) md << '\n';
      md << "### " << to_string(set) << "\n\n"
         << "| Algorithm | accuracy | STD | roc-auc | STD | FPR | STD | TPR | STD |\n"
         << "|---|---|---|---|---|---|---|---|---|\n";
    }
    const auto& r = reports[i];
    md << "| " << to_string(r.spec.algorithm);
    for (const auto* s : {&r.accuracy, &r.roc_auc, &r.fpr, &r.tpr}) md << " | " << fixed4(s->mean) << " | " << fixed4(s->std);
    md << " |\n";
  }
  return md.str();
}

std::string GridResult::to_csv() const {
  std::ostringstream csv;
  csv << "feature_set,algorithm,accuracy,accuracy_std,roc_auc,roc_auc_std,fpr,fpr_std,tpr,tpr_std\n";
  for (const auto& r : reports) {
    csv << to_string(r.feature_set) << ',' << to_string(r.spec.algorithm);
    for (const auto* s : {&r.accuracy, &r.roc_auc, &r.fpr, &r.tpr})
      csv << ',' << format_number(s->mean) << ',' << format_number(s->std);
    csv << '\n';
  }
  return csv.str();
}

}  // namespace etd
