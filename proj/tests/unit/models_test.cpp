#include <gtest/gtest.h>

#include <sstream>

#include "canids/detectors.hpp"
#include "canids/lccde.hpp"
#include "canids/model_io.hpp"
#include "canids/synth.hpp"
#include "support/oracles.hpp"

using namespace canids;

namespace {

/// Gaussian blobs, one per class, in `dims` dimensions.
FeatureTable blobs(std::size_t per_class, const std::vector<std::string>& classes, std::uint64_t seed,
                   std::size_t dims = 3, double spread = 1.0) {
  FeatureTable t;
  for (std::size_t c = 0; c < dims; ++c) t.columns.push_back("x" + std::to_string(c));
  Rng rng(seed);
  std::vector<double> row(dims);
  for (std::size_t k = 0; k < classes.size(); ++k)
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t c = 0; c < dims; ++c) row[c] = 4.0 * static_cast<double>((k >> c) & 1u) + 3.0 * static_cast<double>(k) * (c == 0) + spread * rng.normal();
      t.add_row(row, t.class_index(classes[k]), Provenance::original, static_cast<std::int64_t>(t.rows()));
    }
  return t;
}

double accuracy(const std::vector<Prediction>& p, const FeatureTable& t, const std::vector<std::string>& classes) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ok += classes[static_cast<std::size_t>(p[i].label)] == t.class_name(i);
  return static_cast<double>(ok) / static_cast<double>(p.size());
}

DetectorModel round_trip(const DetectorModel& m) {
  std::stringstream ss;
  save_model(m, ss);
  return load_model(nlohmann::json::parse(ss));
}

}  // namespace

// ---- tree ------------------------------------------------------------------

TEST(DecisionTree, SeparatesAThreshold) {
  FeatureTable t;
  t.columns = {"a", "b"};
  for (int i = 0; i < 10; ++i) {
    const double v[2] = {static_cast<double>(i), 5.0};
    t.add_row(v, t.class_index(i < 4 ? "Normal" : "A"), Provenance::original, i);
  }
  const auto m = fit_decision_tree(t);
  ASSERT_EQ(m.tree.nodes.size(), 3u);
  EXPECT_EQ(m.tree.nodes[0].feature, 0);
  EXPECT_DOUBLE_EQ(m.tree.nodes[0].threshold, 3.5);
  EXPECT_EQ(m.tree.depth(), 1u);
}

TEST(DecisionTree, TieGoesToLowestFeature) {
  FeatureTable t;
  t.columns = {"a", "b"};
  for (int i = 0; i < 6; ++i) {
    const double v[2] = {static_cast<double>(i), static_cast<double>(i)};
    t.add_row(v, t.class_index(i < 3 ? "Normal" : "A"), Provenance::original, i);
  }
  EXPECT_EQ(fit_decision_tree(t).tree.nodes[0].feature, 0);
}

TEST(DecisionTree, FitsTrainingDataExactlyWhenUnconstrained) {
  const auto t = blobs(60, {"Normal", "A", "B", "C"}, 3, 3, 2.0);
  const auto m = fit_decision_tree(t, 64);
  DetectorModel dm{m};
  EXPECT_DOUBLE_EQ(accuracy(predict(dm, t), t, dm.classes()), 1.0);
  EXPECT_LE(fit_decision_tree(t, 2).tree.depth(), 2u);
}

TEST(DecisionTree, LeavesRespectMinLeaf) {
  const auto t = blobs(50, {"Normal", "A"}, 4, 2, 3.0);
  const auto m = fit_decision_tree(t, 20, 7);
  std::vector<std::size_t> hits(m.tree.nodes.size(), 0);
  for (std::size_t i = 0; i < t.rows(); ++i) ++hits[static_cast<std::size_t>(&m.tree.leaf_for(t.row(i)) - m.tree.nodes.data())];
  for (std::size_t n = 0; n < hits.size(); ++n)
    if (m.tree.nodes[n].feature < 0) {
      EXPECT_GE(hits[n], 7u);
    }
}

TEST(DecisionTree, RejectsEmptyTraining) {
  FeatureTable t;
  t.columns = {"a"};
  EXPECT_THROW(fit_decision_tree(t), ValidationError);
}

// ---- forest ----------------------------------------------------------------

TEST(RandomForest, SeededAndAccurate) {
  const auto train = blobs(80, {"Normal", "A", "B"}, 5);
  const auto test = blobs(40, {"Normal", "A", "B"}, 6);
  ForestParams p;
  p.n_trees = 15;
  p.seed = 9;
  const auto a = fit_random_forest(train, p);
  const auto b = fit_random_forest(train, p);
  for (std::size_t i = 0; i < test.rows(); ++i) ASSERT_EQ(a.scores(test.row(i)), b.scores(test.row(i)));
  DetectorModel dm{a};
  EXPECT_GT(accuracy(predict(dm, test), test, dm.classes()), 0.95);
  for (std::size_t i = 0; i < test.rows(); ++i) {
    const auto s = a.scores(test.row(i));
    EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-9);
  }
  p.n_trees = 0;
  EXPECT_THROW(fit_random_forest(train, p), ValidationError);
}

// ---- boosting --------------------------------------------------------------

TEST(Gbdt, TrainingLossNeverIncreasesAndMatchesOracle) {
  const auto t = blobs(40, {"Normal", "A", "B", "C"}, 7, 3, 2.5);
  GbdtParams p;
  p.n_rounds = 25;
  p.learning_rate = 0.8;  // large enough that some steps need backtracking
  p.max_depth = 3;
  const auto m = fit_gbdt(t, p);
  ASSERT_EQ(m.training_loss.size(), 26u);
  for (std::size_t r = 1; r < m.training_loss.size(); ++r) EXPECT_LE(m.training_loss[r], m.training_loss[r - 1] + 1e-12);

  // Recompute the loss from the stored model after every round.
  std::vector<int> labels;
  for (std::size_t i = 0; i < t.rows(); ++i)
    labels.push_back(static_cast<int>(std::find(m.classes.begin(), m.classes.end(), t.class_name(i)) - m.classes.begin()));
  for (std::size_t r = 0; r <= p.n_rounds; r += 5) {
    std::vector<std::vector<double>> raw;
    for (std::size_t i = 0; i < t.rows(); ++i) raw.push_back(m.raw_scores(t.row(i), r));
    EXPECT_NEAR(oracle::log_loss(raw, labels), m.training_loss[r], 1e-9) << r;
  }
}

TEST(Gbdt, InitIsTheLogPrior) {
  auto t = blobs(30, {"Normal", "A"}, 8);
  const double v[3] = {0, 0, 0};
  for (int i = 0; i < 30; ++i) t.add_row(v, 0, Provenance::original, 0);
  GbdtParams p;
  p.n_rounds = 0;
  const auto m = fit_gbdt(t, p);
  EXPECT_NEAR(m.init[0], std::log(60.0 / 90.0), 1e-12);
  EXPECT_NEAR(m.init[1], std::log(30.0 / 90.0), 1e-12);
}

TEST(Gbdt, FeatureSubsamplingRestrictsSplits) {
  const auto t = blobs(40, {"Normal", "A", "B"}, 9, 5);
  GbdtParams p;
  p.n_rounds = 5;
  p.feature_frac = 0.4;
  p.seed = 3;
  const auto m = fit_gbdt(t, p);
  for (const auto& round : m.rounds)
    for (const auto& tree : round) {
      std::set<int> feats;
      for (const auto& n : tree.nodes)
        if (n.feature >= 0) feats.insert(n.feature);
      EXPECT_LE(feats.size(), 2u);
    }
  p.learning_rate = 0.0;
  EXPECT_THROW(fit_gbdt(t, p), ValidationError);
}

TEST(Gbdt, SingleClassIsConstant) {
  auto t = blobs(20, {"Normal"}, 1);
  const auto m = fit_gbdt(t);
  EXPECT_TRUE(m.rounds.empty());
  EXPECT_EQ(m.scores(t.row(0)), std::vector<double>{1.0});
}

// ---- frequency baseline ----------------------------------------------------

TEST(Frequency, FlagsEarlyFramesAndUnknownIds) {
  AmbientModel am;
  am.duration = 5;
  am.seed = 2;
  AmbientStream s;
  s.id = 0x100;
  s.period = 0.01;
  s.jitter_std = 0.0001;
  am.streams = {s};
  const auto ambient = generate_ambient(am);
  const auto det = fit_frequency_detector(ambient, 4.0);
  ASSERT_TRUE(det.known(0x100));
  EXPECT_NEAR(det.ids.at(0x100).mean_us, 10000, 50);

  TrafficLog probe;
  const std::vector<std::uint8_t> d{};
  probe.frames = {CanFrame::make(Timestamp{0}, 0x100, d), CanFrame::make(Timestamp{10000}, 0x100, d),
                  CanFrame::make(Timestamp{10001}, 0x100, d), CanFrame::make(Timestamp{12000}, 0x200, d),
                  CanFrame::make(Timestamp{20001}, 0x100, d)};
  EXPECT_EQ(det.flags(probe), (std::vector<bool>{false, false, true, true, false}));
}

TEST(Frequency, SparseIdsAreExcludedWithAWarning) {
  TrafficLog log;
  const std::vector<std::uint8_t> d{};
  for (int i = 0; i < 5; ++i) log.frames.push_back(CanFrame::make(Timestamp{i * 100}, 1, d));
  log.frames.push_back(CanFrame::make(Timestamp{7}, 2, d));
  int warnings = 0;
  ScopedWarningHandler h([&](std::string_view) { ++warnings; });
  const auto det = fit_frequency_detector(log);
  EXPECT_TRUE(det.known(1));
  EXPECT_FALSE(det.known(2));
  EXPECT_EQ(warnings, 1);
}

// ---- persistence -----------------------------------------------------------

TEST(ModelIo, EveryKindRoundTripsToIdenticalPredictions) {
  const auto train = blobs(40, {"Normal", "A", "B"}, 10);
  const auto test = blobs(20, {"Normal", "A", "B"}, 11);
  ForestParams fp;
  fp.n_trees = 5;
  GbdtParams gp;
  gp.n_rounds = 10;
  std::vector<DetectorModel> models{DetectorModel{fit_decision_tree(train)}, DetectorModel{fit_random_forest(train, fp)},
                                    DetectorModel{fit_gbdt(train, gp)}};
  models[2].mean_visits = 12.5;
  for (const auto& m : models) {
    const auto back = round_trip(m);
    EXPECT_EQ(back.kind(), m.kind());
    EXPECT_EQ(back.classes(), m.classes());
    for (std::size_t i = 0; i < test.rows(); ++i) ASSERT_EQ(back.scores(test.row(i)), m.scores(test.row(i)));
  }
  EXPECT_DOUBLE_EQ(round_trip(models[2]).mean_visits, 12.5);
  EXPECT_TRUE(std::isnan(round_trip(models[0]).latency_ns));

  TrafficLog log;
  for (int i = 0; i < 5; ++i) log.frames.push_back(CanFrame::make(Timestamp{i * 1000}, 0x10, std::vector<std::uint8_t>{}));
  const DetectorModel freq{fit_frequency_detector(log, 3.0)};
  const auto fb = round_trip(freq);
  const auto& f = std::get<FrequencyDetector>(fb.impl);
  EXPECT_DOUBLE_EQ(f.k_sigma, 3.0);
  EXPECT_DOUBLE_EQ(f.ids.at(0x10).mean_us, 1000);
}

TEST(ModelIo, RejectsForeignAndCorruptDocuments) {
  EXPECT_THROW(load_model(nlohmann::json::parse(R"({"format":"other"})")), ValidationError);
  EXPECT_THROW(load_model(nlohmann::json::parse(R"({"format":"canids-model","version":99})")), ValidationError);
  EXPECT_THROW(load_model(nlohmann::json::parse(R"({"format":"canids-model","version":1,"model":{"kind":"tree"}})")),
               ValidationError);
  const auto t = blobs(10, {"Normal", "A"}, 1);
  std::stringstream ss;
  save_model(DetectorModel{fit_decision_tree(t)}, ss);
  auto doc = nlohmann::json::parse(ss);
  doc["model"]["tree"]["left"][0] = 0;  // a node pointing at itself
  EXPECT_THROW(load_model(doc), ValidationError);
}

// ---- LCCDE arbitration -----------------------------------------------------

TEST(Lccde, ArbitrationAgreesWithOracleOverAllLabelTriples) {
  // Three classes, every label triple, every leader assignment, several
  // confidence patterns (including ties), both majority readings.
  const std::vector<std::array<double, 3>> confs{
      {0.9, 0.5, 0.7}, {0.5, 0.9, 0.7}, {0.5, 0.7, 0.9}, {0.6, 0.6, 0.6}, {0.8, 0.8, 0.3}, {0.3, 0.8, 0.8}};
  std::size_t checked = 0;
  for (int l0 = 0; l0 < 3; ++l0)
    for (int l1 = 0; l1 < 3; ++l1)
      for (int l2 = 0; l2 < 3; ++l2) {
        const std::vector<int> leader{l0, l1, l2};
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c)
              for (const auto& conf : confs)
                for (bool literal : {true, false}) {
                  BaseTriple t{Prediction{a, conf[0], {}}, Prediction{b, conf[1], {}}, Prediction{c, conf[2], {}}};
                  const auto got = lccde_arbitrate(t, leader, literal);
                  const auto [want_cls, want_model] = oracle::lccde({a, b, c}, conf, leader, literal);
                  ASSERT_EQ(got.label, want_cls) << a << b << c << " leaders " << l0 << l1 << l2 << " lit " << literal;
                  EXPECT_DOUBLE_EQ(got.confidence, conf[static_cast<std::size_t>(want_model)]);
                  ++checked;
                }
      }
  EXPECT_EQ(checked, 27u * 27u * 6u * 2u);
}

TEST(Lccde, CaseClassification) {
  auto t = [](int a, int b, int c) { return BaseTriple{Prediction{a, 1, {}}, Prediction{b, 1, {}}, Prediction{c, 1, {}}}; };
  EXPECT_EQ(classify_triple(t(1, 1, 1)), LccdeCase::unanimous);
  EXPECT_EQ(classify_triple(t(1, 2, 1)), LccdeCase::majority);
  EXPECT_EQ(classify_triple(t(0, 1, 2)), LccdeCase::distinct);
}

TEST(Lccde, LeadersFromScores) {
  const std::vector<std::string> classes{"Normal", "A", "B", "C"};
  const std::vector<std::array<double, 3>> f1{{0.9, 0.95, 0.9}, {0.5, 0.5, 0.5}, {0.2, 0.1, 0.8}, {0, 0, 0}};
  const std::vector<std::size_t> support{10, 10, 10, 0};
  ScopedWarningHandler quiet([](std::string_view) {});
  const auto l = leaders_from_scores(classes, f1, support, {3.0, 1.0, 2.0});
  EXPECT_EQ(l[0], 1);
  EXPECT_EQ(l[1], 1);  // tie broken by speed
  EXPECT_EQ(l[2], 2);
  EXPECT_EQ(l[3], 2);  // macro F1: 0.533, 0.517, 0.733
  const auto tie = leaders_from_scores(classes, f1, support, {1.0, 1.0, 1.0});
  EXPECT_EQ(tie[1], 0);  // full tie: lowest index
}

TEST(Lccde, FitPredictSaveLoad) {
  const auto train = blobs(60, {"Normal", "A", "B", "C"}, 12, 3, 1.2);
  const auto test = blobs(30, {"Normal", "A", "B", "C"}, 13, 3, 1.2);
  LccdeParams p;
  for (auto& b : p.base) b.n_rounds = 15;
  p.seed = 4;
  const auto m = fit_lccde(train, p);
  ASSERT_EQ(m.leaders.leader.size(), m.classes().size());
  for (auto l : m.leaders.leader) EXPECT_TRUE(l >= 0 && l < 3);
  const auto preds = predict(m, test);
  EXPECT_GT(accuracy(preds, test, m.classes()), 0.9);

  const auto again = fit_lccde(train, p);
  EXPECT_EQ(again.leaders.leader, m.leaders.leader);

  std::stringstream ss;
  save_model(m, ss);
  const auto back = load_lccde(nlohmann::json::parse(ss));
  EXPECT_EQ(back.leaders.leader, m.leaders.leader);
  EXPECT_EQ(back.majority_literal, m.majority_literal);
  const auto bp = predict(back, test);
  for (std::size_t i = 0; i < bp.size(); ++i) ASSERT_EQ(bp[i].label, preds[i].label);
}

TEST(Lccde, KFoldLeaderSelection) {
  const auto train = blobs(30, {"Normal", "A", "B"}, 14);
  LccdeParams p;
  for (auto& b : p.base) b.n_rounds = 5;
  p.folds = 3;
  const auto m = fit_lccde(train, p);
  EXPECT_EQ(m.leaders.classes.size(), 3u);
  for (const auto& row : m.leaders.f1)
    for (double v : row) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
}
