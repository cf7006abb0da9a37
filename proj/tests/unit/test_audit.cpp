#include <gtest/gtest.h>

#include <set>

#include "emomap/audit.hpp"

using namespace emomap;

namespace {

std::vector<LabeledExample> examples(std::size_t trials, std::size_t segments) {
  std::vector<LabeledExample> out;
  for (std::size_t t = 0; t < trials; ++t)
    for (std::size_t s = 0; s < segments; ++s) {
      LabeledExample e;
      e.features = {static_cast<double>(t), static_cast<double>(s)};
      e.provenance = {1 + static_cast<int>(t % 2), static_cast<int>(t), s};
      out.push_back(e);
    }
  return out;
}

}  // namespace

TEST(Split, ByDataCountsTrials) {
  const auto ex = examples(10, 60);
  const auto tt = split(ex, {SplitMode::by_data, 0.8, 3});
  std::set<std::pair<int, int>> train_trials, test_trials;
  for (auto i : tt.train) train_trials.insert(ex[i].provenance.trial_key());
  for (auto i : tt.test) test_trials.insert(ex[i].provenance.trial_key());
  EXPECT_EQ(train_trials.size(), 8u);
  EXPECT_EQ(test_trials.size(), 2u);
  EXPECT_EQ(tt.train.size(), 480u);
  EXPECT_EQ(tt.test.size(), 120u);
  for (const auto& k : train_trials) EXPECT_FALSE(test_trials.count(k));
}

TEST(Split, ByIndexCountsPerTrial) {
  const auto ex = examples(1, 60);
  const auto tt = split(ex, {SplitMode::by_index, 0.2, 3});
  EXPECT_EQ(tt.train.size(), 12u);
  EXPECT_EQ(tt.test.size(), 48u);
}

TEST(Split, DisjointCoveringDeterministic) {
  const auto ex = examples(7, 9);
  for (auto mode : {SplitMode::by_data, SplitMode::by_index, SplitMode::random}) {
    const SplitPlan plan{mode, 0.6, 42};
    const auto a = split(ex, plan);
    const auto b = split(ex, plan);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    std::set<std::size_t> all(a.train.begin(), a.train.end());
    for (auto i : a.test) EXPECT_TRUE(all.insert(i).second);
    EXPECT_EQ(all.size(), ex.size());
  }
}

TEST(Split, ByDataPurityExhaustive) {
  const auto ex = examples(13, 5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto tt = split(ex, {SplitMode::by_data, 0.7, seed});
    std::set<std::pair<int, int>> train;
    for (auto i : tt.train) train.insert(ex[i].provenance.trial_key());
    for (auto i : tt.test) ASSERT_FALSE(train.count(ex[i].provenance.trial_key()));
  }
}

TEST(Split, EmptySideIsAnError) {
  const auto ex = examples(2, 1);
  EXPECT_THROW(split(ex, {SplitMode::by_data, 0.1, 0}), ValidationError);
  EXPECT_THROW(split({}, {SplitMode::random, 0.5, 0}), ValidationError);
}

TEST(Split, ParsePlan) {
  const auto p = parse_split_plan("by_index:0.2");
  EXPECT_EQ(p.mode, SplitMode::by_index);
  EXPECT_DOUBLE_EQ(p.train_ratio, 0.2);
  EXPECT_EQ(p.describe(), "by_index(0.2)");
  EXPECT_THROW(parse_split_plan("by_index"), ValidationError);
  EXPECT_THROW(parse_split_plan("by_index:1.5"), ValidationError);
  EXPECT_THROW(parse_split_plan("stratified:0.5"), ValidationError);
}

TEST(Audit, GridShapeAndDeterminism) {
  SyntheticSpec spec;
  spec.subjects = 2;
  spec.trials = 10;
  spec.frames = 16 + 160;
  const auto ds = generate_synthetic(spec, 5);
  AuditConfig cfg;
  cfg.seed = 9;
  const auto a = run_audit(ds, cfg);
  const auto b = run_audit(ds, cfg);
  EXPECT_EQ(a.cells.size(), 4u * 2u * 2u * 3u);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].accuracy, b.cells[i].accuracy);
    EXPECT_GE(a.cells[i].accuracy, 0.0);
    EXPECT_LE(a.cells[i].accuracy, 1.0);
    EXPECT_GT(a.cells[i].n_train, 0u);
    EXPECT_GT(a.cells[i].n_test, 0u);
  }
  EXPECT_TRUE(a.accuracy(AuditMode::random_data, "by_index(0.2)", ClassifierKind::knn, "valence").has_value());
}

TEST(Audit, LeakageSignatureOnRandomData) {
  SyntheticSpec spec;  // desk-scale defaults: 8 x 40 x 8 channels, 16 + 320 frames
  const auto ds = generate_synthetic(spec, 2022);
  AuditConfig cfg;
  cfg.seed = 2022;
  cfg.modes = {AuditMode::base_mean};
  cfg.classifiers = {ClassifierKind::knn};
  cfg.scales = {"valence"};
  const auto rep = run_audit(ds, cfg);
  const double by_index = *rep.accuracy(AuditMode::base_mean, "by_index(0.2)", ClassifierKind::knn, "valence");
  const double by_data = *rep.accuracy(AuditMode::base_mean, "by_data(0.8)", ClassifierKind::knn, "valence");
  EXPECT_GE(by_index, 0.95);
  EXPECT_GE(by_index - by_data, 0.3);
}

TEST(Audit, InjectedSignalBeatsChanceByData) {
  SyntheticSpec spec;
  spec.signal_mode = SignalMode::class_correlated;
  const auto ds = generate_synthetic(spec, 7);
  AuditConfig cfg;
  cfg.seed = 7;
  cfg.modes = {AuditMode::sigmoid_filter};
  cfg.splits = {{SplitMode::by_data, 0.8, 0}};
  cfg.classifiers = {ClassifierKind::knn};
  cfg.scales = {"valence"};
  const auto rep = run_audit(ds, cfg);
  EXPECT_GT(*rep.accuracy(AuditMode::sigmoid_filter, "by_data(0.8)", ClassifierKind::knn, "valence"), 0.62);
}
