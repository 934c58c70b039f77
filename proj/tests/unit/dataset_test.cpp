#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "builders.hpp"
#include "etd/dataset.hpp"
#include "etd/error.hpp"

namespace etd {
namespace {

std::string kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "";
}

std::vector<LabeledRow> rows_with(std::size_t mal, std::size_t leg, const std::string& source = "S") {
  std::vector<LabeledRow> rows;
  for (std::size_t i = 0; i < mal + leg; ++i)
    rows.push_back({source + std::to_string(i), {static_cast<double>(i)}, i < mal ? 1 : 0, source});
  return rows;
}

TEST(Csv, RoundTripPreservesEverything) {
  Dataset d;
  d.columns = {"a", "b"};
  d.rows = {{"s,1", {0.1, 1e-300}, 1, "src \"x\""}, {"s2", {-3.0, 12345678901234.5}, 0, "y"}};
  std::stringstream ss;
  write_csv(ss, d);
  const auto header = ss.str().substr(0, ss.str().find('\n'));
  EXPECT_EQ(header, "session_id,a,b,label,source_dataset");
  const auto back = read_csv(ss);
  EXPECT_EQ(back.columns, d.columns);
  ASSERT_EQ(back.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.rows[i].session_id, d.rows[i].session_id);
    EXPECT_EQ(back.rows[i].features, d.rows[i].features);
    EXPECT_EQ(back.rows[i].label, d.rows[i].label);
    EXPECT_EQ(back.rows[i].source_dataset, d.rows[i].source_dataset);
  }
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(3), "3");
}

TEST(Csv, HeaderOnlyAndMalformed) {
  Dataset d;
  d.columns = {"a"};
  std::stringstream ss;
  write_csv(ss, d);
  EXPECT_TRUE(read_csv(ss).rows.empty());
  std::stringstream bad("session_id,a,label,source_dataset\nx,notanumber,1,s\n");
  EXPECT_THROW(read_csv(bad), Error);
  std::stringstream bad_label("session_id,a,label,source_dataset\nx,1,2,s\n");
  EXPECT_THROW(read_csv(bad_label), Error);
}

TEST(DatasetOps, ProjectSubsetMatrix) {
  const auto d = test::gaussian_dataset(10, {"x", "y", "z"}, 1.0, 1);
  const auto p = d.project({"z", "x"});
  EXPECT_EQ(p.columns, (std::vector<std::string>{"z", "x"}));
  EXPECT_EQ(p.rows[3].features[0], d.rows[3].features[2]);
  EXPECT_EQ(kind_of([&] { d.project({"nope"}); }), "MissingFeature");
  const auto s = d.subset({4, 1});
  EXPECT_EQ(s.rows[0].session_id, d.rows[4].session_id);
  const auto m = d.matrix();
  EXPECT_EQ(m.rows, 10u);
  EXPECT_EQ(m(2, 1), d.rows[2].features[1]);
  EXPECT_EQ(d.count_label(1) + d.count_label(0), 10u);
}

TEST(Dedup, Examples) {
  std::vector<LabeledRow> rows{{"a", {1, 2}, 1, "s"}, {"b", {1, 2}, 1, "s"}};
  auto r = deduplicate(rows);
  EXPECT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].session_id, "a");
  EXPECT_EQ(r.removed_count, 1u);
  rows[1].label = 0;
  r = deduplicate(rows);
  EXPECT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.conflict_count, 1u);
}

TEST(Dedup, InjectedDuplicatesCounted) {
  Rng rng(4);
  std::vector<LabeledRow> rows;
  for (int i = 0; i < 950; ++i) rows.push_back({"r" + std::to_string(i), {rng.uniform(), rng.uniform()}, i % 2, "s"});
  for (int i = 0; i < 50; ++i) {
    auto copy = rows[rng.index(950)];
    copy.session_id += "-dup";
    rows.insert(rows.begin() + static_cast<long>(rng.index(rows.size() + 1)), copy);
  }
  // A duplicate may land before its original; either occurrence survives.
  const auto r = deduplicate(rows);
  EXPECT_EQ(r.removed_count, 50u);
  EXPECT_EQ(r.rows.size(), 950u);
}

TEST(Normalizer, Examples) {
  Matrix m(3, 2);
  m(0, 0) = 2, m(1, 0) = 4, m(2, 0) = 6;
  m(0, 1) = m(1, 1) = m(2, 1) = 3;
  const auto n = fit_normalizer(m);
  EXPECT_EQ(n.lo[0], 2);
  EXPECT_EQ(n.hi[0], 6);
  const auto t = n.apply(m);
  EXPECT_EQ(t(0, 0), 0);
  EXPECT_EQ(t(1, 0), 0.5);
  EXPECT_EQ(t(2, 0), 1);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(t(i, 1), 0);
  EXPECT_EQ(n.transform(0, 10), 1.0);
  EXPECT_EQ(n.transform(0, -10), 0.0);
  const auto sym = fit_normalizer(m, NormRange::sym_one);
  EXPECT_EQ(sym.apply(m)(1, 0), 0.0);
  EXPECT_EQ(sym.apply(m)(0, 1), -1.0);
  Normalizer identity;
  identity.lo = {0};
  identity.hi = {1};
  EXPECT_EQ(identity.transform(0, 0.37), 0.37);
  EXPECT_EQ(kind_of([] { fit_normalizer(Matrix(0, 2)); }), "EmptyTrain");
  EXPECT_EQ(kind_of([&] { n.apply(Matrix(1, 3)); }), "CatalogMismatch");
}

TEST(Normalizer, DatasetColumnsChecked) {
  const auto d = test::gaussian_dataset(20, {"a", "b"}, 1, 2);
  const auto n = fit_normalizer(d);
  auto other = d;
  other.columns = {"b", "a"};
  EXPECT_EQ(kind_of([&] { n.apply(other); }), "CatalogMismatch");
  EXPECT_EQ(n.apply(d).rows.size(), d.rows.size());
}

TEST(Normalizer, RangeAndMonotoneProperty) {
  Rng rng(6);
  for (auto range : {NormRange::zero_one, NormRange::sym_one}) {
    const double lo = range == NormRange::zero_one ? 0.0 : -1.0;
    for (int t = 0; t < 20; ++t) {
      Matrix train(1 + rng.index(50), 4);
      for (auto& x : train.data) x = rng.uniform(-100, 100);
      const auto n = fit_normalizer(train, range);
      const auto out = n.apply(train);
      for (double x : out.data) {
        EXPECT_GE(x, lo);
        EXPECT_LE(x, 1.0);
      }
      for (int k = 0; k < 50; ++k) {
        const double a = rng.uniform(-300, 300), b = rng.uniform(-300, 300);
        const double ta = n.transform(1, a), tb = n.transform(1, b);
        EXPECT_GE(ta, lo);
        EXPECT_LE(ta, 1.0);
        if (a <= b) EXPECT_LE(ta, tb);
      }
    }
  }
}

TEST(Balance, Examples) {
  const auto rows = rows_with(100, 60);
  const auto b = balance_undersample(rows, 7);
  std::size_t mal = 0;
  for (const auto& r : b) mal += r.label;
  EXPECT_EQ(mal, 60u);
  EXPECT_EQ(b.size(), 120u);
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_LT(b[i - 1].features[0], b[i].features[0]);
  const auto b2 = balance_undersample(rows, 7);
  ASSERT_EQ(b2.size(), b.size());
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b2[i].session_id, b[i].session_id);
  const auto even = rows_with(50, 50);
  const auto same = balance_undersample(even, 1);
  ASSERT_EQ(same.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(same[i].session_id, even[i].session_id);
  EXPECT_EQ(kind_of([] { balance_undersample(rows_with(5, 0), 1); }), "SingleClass");
}

TEST(Compose, HitsTargetsExactly) {
  std::map<std::string, std::vector<LabeledRow>> sources{{"A", rows_with(50, 50, "raw")}, {"B", rows_with(30, 40, "raw")}};
  CompositionPlan plan;
  plan.targets = {{"A", {10, 10}}, {"B", {5, 20}}};
  plan.seed = 3;
  const auto out = compose(sources, plan);
  std::map<std::pair<std::string, int>, std::size_t> counts;
  std::set<std::string> ids;
  for (const auto& r : out) {
    ++counts[{r.source_dataset, r.label}];
    EXPECT_TRUE(ids.insert(r.source_dataset + r.session_id).second);
  }
  EXPECT_EQ(out.size(), 45u);
  EXPECT_EQ((counts[{"A", 1}]), 10u);
  EXPECT_EQ((counts[{"A", 0}]), 10u);
  EXPECT_EQ((counts[{"B", 1}]), 5u);
  EXPECT_EQ((counts[{"B", 0}]), 20u);
  const auto again = compose(sources, plan);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].session_id, again[i].session_id);
  plan.targets["B"] = {31, 0};
  EXPECT_EQ(kind_of([&] { compose(sources, plan); }), "InsufficientRows");
  plan.targets = {{"missing", {1, 0}}};
  EXPECT_EQ(kind_of([&] { compose(sources, plan); }), "InsufficientRows");
}

TEST(Compose, ReferencePlanProportions) {
  const auto plan = reference_composition_plan(1.0 / 1000.0);
  const std::map<std::string, double> stated{{"UNSW-IoT-2019", 22}, {"CICIDS-2017", 23}, {"CIC-AndMal2017", 21},
                                             {"MCFP", 22},          {"CICIDS-2012", 12}};
  const auto full = reference_composition_plan(1.0);
  double total = 0;
  for (const auto& [s, t] : full.targets) total += static_cast<double>(t.malicious + t.legitimate);
  EXPECT_EQ(total, 117627);
  ASSERT_EQ(plan.targets.size(), 5u);
  for (const auto& [s, t] : plan.targets) {
    const auto& f = full.targets.at(s);
    EXPECT_NEAR(100.0 * static_cast<double>(f.malicious + f.legitimate) / total, stated.at(s), 1.0) << s;
    EXPECT_EQ(t.malicious, static_cast<std::size_t>(std::llround(static_cast<double>(f.malicious) / 1000)));
  }
  const auto j = plan.to_json();
  const auto back = CompositionPlan::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.targets.size(), plan.targets.size());
  EXPECT_EQ(back.targets.at("MCFP").legitimate, plan.targets.at("MCFP").legitimate);
}

void check_stratified(const std::vector<int>& labels, const FoldPlan& p) {
  ASSERT_EQ(p.assignments.size(), labels.size());
  std::vector<std::array<std::size_t, 2>> per_fold(p.k, {0, 0});
  std::array<std::size_t, 2> total{0, 0};
  std::vector<int> seen(labels.size(), 0);
  for (std::size_t f = 0; f < p.k; ++f) {
    for (auto i : p.test_indices(f)) {
      ++seen[i];
      ++per_fold[f][labels[i]];
    }
    EXPECT_EQ(p.test_indices(f).size() + p.train_indices(f).size(), labels.size());
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    EXPECT_EQ(seen[i], 1);
    ++total[labels[i]];
  }
  for (std::size_t f = 0; f < p.k; ++f)
    for (int c : {0, 1})
      EXPECT_LE(std::abs(static_cast<double>(per_fold[f][c]) - static_cast<double>(total[c]) / p.k), 1.0);
}

TEST(KFold, Examples) {
  std::vector<int> ten{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  const auto p = stratified_kfold(ten, 5, 1);
  for (std::size_t f = 0; f < 5; ++f) {
    const auto idx = p.test_indices(f);
    ASSERT_EQ(idx.size(), 2u);
    EXPECT_NE(ten[idx[0]], ten[idx[1]]);
  }
  std::vector<int> eleven = ten;
  eleven.push_back(1);
  check_stratified(eleven, stratified_kfold(eleven, 5, 2));
  EXPECT_EQ(kind_of([] { stratified_kfold({1, 1, 0, 0}, 1, 0); }), "TooFewRows");
  EXPECT_EQ(kind_of([] { stratified_kfold({1, 1, 1, 1, 1, 0, 0}, 5, 0); }), "TooFewRows");
}

TEST(KFold, RandomPlansPartitionAndStratify) {
  Rng rng(99);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + rng.index(9);
    std::vector<int> labels(2 * k + rng.index(1000));
    for (auto& l : labels) l = static_cast<int>(rng.index(2));
    for (std::size_t i = 0; i < k; ++i) labels[i] = 0, labels[k + i] = 1;
    const auto p = stratified_kfold(labels, k, rng.next());
    check_stratified(labels, p);
  }
}

TEST(KFold, DeterministicAndSerializable) {
  std::vector<int> labels(200);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 3 == 0;
  const auto a = stratified_kfold(labels, 5, 42);
  const auto b = stratified_kfold(labels, 5, 42);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_NE(a.assignments, stratified_kfold(labels, 5, 43).assignments);
  const auto back = FoldPlan::from_json(nlohmann::json::parse(a.to_json().dump()));
  EXPECT_EQ(back.assignments, a.assignments);
  EXPECT_EQ(back.k, 5u);
  EXPECT_EQ(back.seed, 42u);
}

}  // namespace
}  // namespace etd
