#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "canids/candump.hpp"
#include "canids/features.hpp"
#include "canids/synth.hpp"
#include "canids/windows.hpp"
#include "support/oracles.hpp"

using namespace canids;

namespace {

AmbientModel two_streams(double duration = 2.0, std::uint64_t seed = 1) {
  AmbientModel m;
  m.duration = duration;
  m.seed = seed;
  AmbientStream a;
  a.id = 0x0D0;
  a.period = 0.01;
  a.phase = 0.0;
  a.payload.base = {0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88};
  AmbientStream b;
  b.id = 0x1A0;
  b.period = 0.02;
  b.phase = 0.005;
  b.payload.base = {0, 1, 2, 3};
  b.payload.counter_bytes = {3};
  m.streams = {a, b};
  return m;
}

std::size_t count_class(const LabeledLog& log, std::string_view cls) {
  std::size_t n = 0;
  for (const auto& f : log.frames) n += f.label.name == cls;
  return n;
}

FeatureTable table_from(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& labels) {
  FeatureTable t;
  for (std::size_t c = 0; c < rows.front().size(); ++c) t.columns.push_back("f" + std::to_string(c));
  for (std::size_t i = 0; i < rows.size(); ++i)
    t.add_row(rows[i], t.class_index(labels[i]), Provenance::original, static_cast<std::int64_t>(i));
  return t;
}

}  // namespace

// ---- ambient ---------------------------------------------------------------

TEST(Ambient, ZeroJitterIsExactlyPeriodic) {
  const auto log = generate_ambient(two_streams());
  EXPECT_TRUE(log.is_time_sorted());
  std::vector<std::int64_t> a, b;
  for (const auto& f : log.frames) (f.id() == 0x0D0 ? a : b).push_back(f.timestamp().micros);
  ASSERT_EQ(a.size(), 200u);
  ASSERT_EQ(b.size(), 100u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], static_cast<std::int64_t>(i) * 10000);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b[i], 5000 + static_cast<std::int64_t>(i) * 20000);
}

TEST(Ambient, CounterBytesIncrement) {
  const auto log = generate_ambient(two_streams());
  int k = 0;
  for (const auto& f : log.frames)
    if (f.id() == 0x1A0) {
      ASSERT_EQ(f.dlc(), 4u);
      EXPECT_EQ(f.data()[3], static_cast<std::uint8_t>(3 + k));
      ++k;
    }
}

TEST(Ambient, DeterministicInSeedAndDistinctAcrossSeeds) {
  const auto m1 = AmbientModel::typical(12, 3.0, 5);
  const auto x = generate_ambient(m1);
  const auto y = generate_ambient(m1);
  EXPECT_EQ(x.frames, y.frames);
  const auto z = generate_ambient(AmbientModel::typical(12, 3.0, 6));
  EXPECT_NE(x.frames, z.frames);
  std::set<std::uint32_t> ids;
  for (const auto& f : x.frames) ids.insert(f.id());
  EXPECT_EQ(ids.size(), 12u);
  for (auto id : ids) EXPECT_GE(id, 0x040u);
}

TEST(Ambient, ValidationRejectsBadModels) {
  auto m = two_streams();
  m.duration = 0;
  EXPECT_THROW(generate_ambient(m), ValidationError);
  m = two_streams();
  m.streams[0].period = -1;
  EXPECT_THROW(generate_ambient(m), ValidationError);
  m = two_streams();
  m.streams[1].payload.counter_bytes = {4};
  EXPECT_THROW(generate_ambient(m), ValidationError);
  EXPECT_THROW(AmbientModel::typical(0, 1, 1), ValidationError);
}

// ---- injectors -------------------------------------------------------------

TEST(Inject, DosCountMatchesHalfOpenSchedule) {
  const auto base = label_all_normal(generate_ambient(two_streams()));
  const auto iv = Interval::seconds(0.5, 0.8);
  const auto out = inject_dos(base, iv);
  // [0.5, 0.8) every 300 us: ceil(300000 / 300) = 1000 frames.
  EXPECT_EQ(count_class(out, "DoS Attack"), 1000u);
  EXPECT_EQ(out.size(), base.size() + 1000);
  EXPECT_TRUE(out.is_time_sorted());
  for (const auto& f : out.frames) {
    if (!f.is_attack()) continue;
    EXPECT_EQ(f.frame.id(), 0u);
    EXPECT_EQ(f.frame.dlc(), 8u);
    for (auto b : f.frame.data()) EXPECT_EQ(b, 0);
    EXPECT_TRUE(iv.contains(f.frame.timestamp()));
    EXPECT_LT(f.frame.timestamp(), iv.end);
  }
}

TEST(Inject, DegenerateIntervalInjectsNothing) {
  const auto base = label_all_normal(generate_ambient(two_streams()));
  const auto out = inject_dos(base, Interval::seconds(0.5, 0.5));
  EXPECT_EQ(out.frames, base.frames);
}

TEST(Inject, InjectionOnlyAddsFrames) {
  const auto base = label_all_normal(generate_ambient(two_streams()));
  const auto out = inject_fuzzy(base, Interval::seconds(0.1, 0.3), 9);
  std::multiset<std::pair<std::int64_t, std::uint32_t>> before, after;
  for (const auto& f : base.frames) before.insert({f.frame.timestamp().micros, f.frame.id()});
  for (const auto& f : out.frames)
    if (!f.is_attack()) after.insert({f.frame.timestamp().micros, f.frame.id()});
  EXPECT_EQ(before, after);
  EXPECT_EQ(count_class(out, "Fuzzy Attack"), 400u);
  for (const auto& f : out.frames)
    if (f.is_attack()) {
      EXPECT_TRUE(f.frame.id() != 0x0D0 && f.frame.id() != 0x1A0);
    }
}

TEST(Inject, FuzzyIsSeeded) {
  const auto base = label_all_normal(generate_ambient(two_streams()));
  const auto iv = Interval::seconds(0.1, 0.2);
  EXPECT_EQ(inject_fuzzy(base, iv, 3).frames, inject_fuzzy(base, iv, 3).frames);
  EXPECT_NE(inject_fuzzy(base, iv, 3).frames, inject_fuzzy(base, iv, 4).frames);
}

TEST(Inject, SpoofAndFuzzingPayloads) {
  const auto base = label_all_normal(generate_ambient(two_streams()));
  const std::vector<std::uint8_t> gear{0, 0, 0, 0, 0, 0x20, 0, 0};
  const auto spoof = inject_targeted_spoof(base, 0x43F, gear, Interval::seconds(1.0, 1.1));
  EXPECT_EQ(count_class(spoof, "Spoofing Attack"), 100u);
  for (const auto& f : spoof.frames)
    if (f.is_attack()) {
      EXPECT_EQ(std::vector<std::uint8_t>(f.frame.data().begin(), f.frame.data().end()), gear);
    }

  const std::vector<std::uint32_t> cycle{0x000, 0x001, 0x002};
  const auto fz = inject_fuzzing_max_payload(base, Interval::seconds(0.0, 0.01), cycle, 0.001);
  std::vector<std::uint32_t> seen;
  for (const auto& f : fz.frames)
    if (f.is_attack()) {
      seen.push_back(f.frame.id());
      EXPECT_EQ(to_hex(f.frame.data()), "FFFFFFFFFFFFFFFF");
    }
  ASSERT_EQ(seen.size(), 10u);
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], cycle[i % 3]);
}

TEST(Inject, FabricationFollowsEveryTargetFrameByOneMicrosecond) {
  const auto base = label_all_normal(generate_ambient(two_streams()));
  const auto iv = Interval::seconds(0.5, 1.0);
  const auto fab = inject_fabrication(base, 0x0D0, NibblePattern("XXXXXXXXXXXXFFXX"), iv);
  std::size_t legit_in_iv = 0;
  for (const auto& f : base.frames)
    if (f.frame.id() == 0x0D0 && iv.contains(f.frame.timestamp())) ++legit_in_iv;
  EXPECT_EQ(legit_in_iv, 51u);  // 0.50, 0.51, ..., 1.00 closed
  EXPECT_EQ(count_class(fab, "Fabrication Attack"), legit_in_iv);
  for (std::size_t i = 0; i < fab.size(); ++i) {
    const auto& f = fab.frames[i];
    if (!f.is_attack()) continue;
    ASSERT_GT(i, 0u);
    const auto& prev = fab.frames[i - 1];
    EXPECT_EQ(prev.frame.id(), 0x0D0u);
    EXPECT_FALSE(prev.is_attack());
    EXPECT_EQ(f.frame.timestamp() - prev.frame.timestamp(), kFlamDelayMicros);
    EXPECT_EQ(to_hex(f.frame.data()), "112233445566FF88");
  }
}

TEST(Inject, MasqueradeRemovesTheLegitimatePredecessor) {
  const auto base = label_all_normal(generate_ambient(two_streams()));
  const auto iv = Interval::seconds(0.5, 1.0);
  const auto fab = inject_fabrication(base, 0x0D0, NibblePattern("XXXXXXXXXXXXFFXX"), iv);
  const auto mas = to_masquerade(fab, 0x0D0, iv, "Masquerade Attack");
  EXPECT_EQ(mas.size(), base.size());
  EXPECT_EQ(count_class(mas, "Masquerade Attack"), 51u);
  for (const auto& f : mas.frames)
    if (f.frame.id() == 0x0D0 && iv.contains(f.frame.timestamp() + (-kFlamDelayMicros))) {
      EXPECT_TRUE(f.is_attack()) << f.frame.timestamp().to_string();
    }
  // Outside the interval the target keeps its legitimate frames.
  std::size_t outside = 0;
  for (const auto& f : mas.frames)
    if (f.frame.id() == 0x0D0 && !f.is_attack()) ++outside;
  EXPECT_EQ(outside, 200u - 51u);
}

TEST(Synthesize, MetadataReproducesConstructionLabels) {
  const auto ambient = generate_ambient(two_streams(3.0, 2));
  std::vector<AttackScenario> sc(4);
  sc[0].kind = AttackKind::dos;
  sc[0].interval = Interval::seconds(0.2, 0.4);
  sc[1].kind = AttackKind::fuzzy;
  sc[1].interval = Interval::seconds(0.6, 0.7);
  sc[2].kind = AttackKind::fabrication;
  sc[2].interval = Interval::seconds(1.0, 1.5);
  sc[2].target_id = 0x0D0;
  sc[2].payload_spec = NibblePattern("XXXXXXXXXXXXFFXX");
  sc[3].kind = AttackKind::masquerade;
  sc[3].interval = Interval::seconds(2.0, 2.5);
  sc[3].target_id = 0x0D0;
  sc[3].payload_spec = NibblePattern("XXXXXXXXXXXX00XX");
  const auto r = synthesize(ambient, sc, 7);
  EXPECT_FALSE(r.metadata.empty());
  const auto relabeled = apply_metadata_labels(strip_labels(r.log), r.metadata, r.log.label_space);
  EXPECT_EQ(relabeled.frames, r.log.frames);
  EXPECT_EQ(count_class(r.log, "Masquerade Attack"), 51u);

  std::stringstream md;
  write_metadata(r.metadata, md);
  const auto back = read_metadata(md);
  EXPECT_EQ(apply_metadata_labels(strip_labels(r.log), back, r.log.label_space).frames, r.log.frames);
}

TEST(Synthesize, CollidingPatternIsRejected) {
  // Fabricating the legitimate payload unchanged makes forged frames
  // indistinguishable from real ones.
  const auto ambient = generate_ambient(two_streams());
  AttackScenario s;
  s.kind = AttackKind::fabrication;
  s.interval = Interval::seconds(0.5, 0.6);
  s.target_id = 0x0D0;
  s.payload_spec = NibblePattern("11");
  EXPECT_THROW(synthesize(ambient, {s}), ValidationError);
}

TEST(Synthesize, ScenarioJson) {
  const auto list = scenarios_from_json(nlohmann::json::parse(R"({"scenarios":[
      {"kind":"dos","interval":[0.1,0.2]},
      {"kind":"targeted_spoof","interval":[0.3,0.4],"target_id":"43F","payload":"0000000000200000","attack_class":"Gear Spoofing Attack"},
      {"kind":"fuzzing_max_payload","interval":[0.5,0.6],"id_cycle":["000","001"],"period":0.002}]})"));
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(list[1].class_name(), "Gear Spoofing Attack");
  EXPECT_EQ(*list[1].target_id, 0x43Fu);
  EXPECT_DOUBLE_EQ(list[2].effective_period(), 0.002);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"kind":"masquerade","interval":[0,1]})")), ValidationError);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"kind":"bogus","interval":[0,1]})")), ValidationError);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"kind":"dos","interval":[2,1]})")), ValidationError);
  const auto r = synthesize(generate_ambient(two_streams()), list, 1);
  EXPECT_EQ(count_class(r.log, "Gear Spoofing Attack"), 100u);
}

// ---- feature table ---------------------------------------------------------

TEST(Features, TenColumnsWithDlcNineWithout) {
  const LabeledFrame f{CanFrame::make(Timestamp{5}, 0x0BA, std::vector<std::uint8_t>{1, 2, 3}), AttackClass{"X"}};
  const auto v = frame_to_features(f, true);
  EXPECT_EQ(v.values, (std::vector<double>{186, 3, 1, 2, 3, 0, 0, 0, 0, 0}));
  EXPECT_EQ(frame_to_features(f, false).values.size(), 9u);
  EXPECT_EQ(feature_columns(true).size(), 10u);
  EXPECT_EQ(feature_columns(false).front(), "id");
}

TEST(Features, CsvRoundTripPreservesValuesAndProvenance) {
  auto t = table_from({{1, 2.5, 0}, {3, 4, 1e-7}, {5, 6, 255}}, {"Normal", "A", "A"});
  t.timestamps[2] = -1;
  t.provenance[2] = Provenance::synthetic;
  std::stringstream ss;
  write_feature_csv(t, ss);
  const auto back = read_feature_csv(ss, t.classes);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.values, t.values);
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.provenance, t.provenance);
  EXPECT_EQ(back.timestamps, t.timestamps);
  std::istringstream bad("a,label,provenance,timestamp\n1,A,maybe,\n");
  EXPECT_THROW(read_feature_csv(bad), ParseError);
}

// ---- split -----------------------------------------------------------------

TEST(Split, StratifiedCountsWithinOnePerClass) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> labels;
    const auto n = 20 + rng.below(500);
    for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.below(5)));
    std::vector<std::int64_t> ts(n, 0);
    const double ratio = 0.5 + 0.4 * rng.uniform01();
    ScopedWarningHandler quiet([](std::string_view) {});
    const auto s = split_indices(labels, ts, {ratio, SplitMode::stratified_random, static_cast<std::uint64_t>(trial)});
    EXPECT_EQ(s.train.size() + s.test.size(), n);
    std::map<int, std::size_t> total, train;
    for (auto l : labels) ++total[l];
    const bool no_singletons = std::all_of(total.begin(), total.end(), [](const auto& kv) { return kv.second > 1; });
    if (no_singletons) {
      EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))));
    }
    for (auto i : s.train) ++train[labels[i]];
    for (auto [l, c] : total) {
      if (c < 2) continue;
      EXPECT_LE(std::fabs(static_cast<double>(train[l]) - ratio * static_cast<double>(c)), 1.0) << l;
    }
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), n);
  }
}

TEST(Split, SingletonClassStaysInTrainWithWarning) {
  std::vector<int> labels{0, 0, 0, 0, 1};
  std::vector<std::int64_t> ts(5, 0);
  std::vector<std::string> warnings;
  ScopedWarningHandler h([&](std::string_view w) { warnings.emplace_back(w); });
  const auto s = split_indices(labels, ts, {0.6, SplitMode::stratified_random, 0});
  EXPECT_NE(std::find(s.train.begin(), s.train.end(), 4u), s.train.end());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Split, ChronologicalTakesThePrefix) {
  std::vector<int> labels(10, 0);
  std::vector<std::int64_t> ts{9, 8, 7, 6, 5, 4, 3, 2, 1, 0};
  const auto s = split_indices(labels, ts, {0.7, SplitMode::chronological, 0});
  EXPECT_EQ(s.test, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_THROW(split_indices(labels, ts, {1.0, SplitMode::chronological, 0}), ValidationError);
}

TEST(Split, SeededAndReproducible) {
  std::vector<int> labels(200);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  std::vector<std::int64_t> ts(200, 0);
  const auto a = split_indices(labels, ts, {0.8, SplitMode::stratified_random, 1});
  const auto b = split_indices(labels, ts, {0.8, SplitMode::stratified_random, 1});
  const auto c = split_indices(labels, ts, {0.8, SplitMode::stratified_random, 2});
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, c.train);
}

// ---- SMOTE -----------------------------------------------------------------

TEST(Smote, RaisesMinoritiesToExactlyTheTarget) {
  Rng rng(4);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  auto add = [&](const std::string& cls, std::size_t n, double centre) {
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back({centre + rng.normal(), centre - rng.normal(), rng.uniform01()});
      labels.push_back(cls);
    }
  };
  add("Normal", 300, 0);
  add("A", 40, 10);
  add("B", 7, -10);
  add("C", 250, 5);
  const auto t = table_from(rows, labels);
  const auto r = smote_oversample(t, {200, 5, 3});
  std::map<std::string, std::size_t> count;
  for (std::size_t i = 0; i < r.table.rows(); ++i) ++count[r.table.class_name(i)];
  EXPECT_EQ(count["Normal"], 300u);
  EXPECT_EQ(count["A"], 200u);
  EXPECT_EQ(count["B"], 200u);
  EXPECT_EQ(count["C"], 250u);
  // Originals come first and are untouched.
  for (std::size_t i = 0; i < t.rows(); ++i) {
    EXPECT_EQ(r.parent[i], -1);
    EXPECT_EQ(r.table.provenance[i], Provenance::original);
    for (std::size_t c = 0; c < t.cols(); ++c) EXPECT_EQ(r.table.row(i)[c], t.row(i)[c]);
  }
}

TEST(Smote, SyntheticRowsLieOnSegmentsToTrueNeighbours) {
  Rng rng(8);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (int i = 0; i < 30; ++i) {
    rows.push_back({rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100), 7});
    labels.push_back("A");
  }
  const auto t = table_from(rows, labels);
  const auto r = smote_oversample(t, {500, 5, 11});
  std::vector<std::size_t> members(30);
  std::iota(members.begin(), members.end(), 0);
  for (std::size_t i = t.rows(); i < r.table.rows(); ++i) {
    const auto p = static_cast<std::size_t>(r.parent[i]);
    const std::vector<double> syn(r.table.row(i).begin(), r.table.row(i).end());
    bool ok = false;
    for (auto nn : oracle::knn(rows, members, p, 5)) ok = ok || oracle::on_segment(rows[p], rows[nn], syn, 1e-9);
    ASSERT_TRUE(ok) << "row " << i;
  }
}

TEST(Smote, DeterministicPerSeedAndSingletonDuplicates) {
  const auto t = table_from({{0, 0}, {1, 1}, {2, 2}, {9, 9}}, {"A", "A", "A", "B"});
  ScopedWarningHandler quiet([](std::string_view) {});
  const auto a = smote_oversample(t, {10, 2, 1});
  const auto b = smote_oversample(t, {10, 2, 1});
  EXPECT_EQ(a.table.values, b.table.values);
  for (std::size_t i = 0; i < a.table.rows(); ++i)
    if (a.table.class_name(i) == "B") {
      EXPECT_EQ(a.table.row(i)[0], 9);
    }
  EXPECT_THROW(smote_oversample(t, {10, 0, 1}), ValidationError);
}

// ---- windows ---------------------------------------------------------------

TEST(Windows, CountMatchesFormula) {
  EXPECT_EQ(window_count(100, 29, 1), 72u);
  EXPECT_EQ(window_count(100, 29, 29), 3u);
  EXPECT_EQ(window_count(28, 29, 1), 0u);
  EXPECT_EQ(window_count(29, 29, 5), 1u);
  EXPECT_THROW(window_count(10, 0, 1), ValidationError);
}

TEST(Windows, GridsMatchEnumerationOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    LabeledLog log;
    std::vector<bool> attack;
    const auto n = rng.below(120);
    for (std::size_t i = 0; i < n; ++i) {
      const bool a = rng.below(20) == 0;
      attack.push_back(a);
      log.frames.push_back({CanFrame::make(Timestamp{static_cast<std::int64_t>(i)},
                                           static_cast<std::uint32_t>(rng.below(kStandardIdLimit)), {}),
                            a ? AttackClass{"X"} : AttackClass::normal()});
    }
    const std::size_t w = 1 + rng.below(30), s = 1 + rng.below(10);
    ScopedWarningHandler quiet([](std::string_view) {});
    const auto grids = build_bit_grids(log, w, s);
    const auto expect = oracle::window_labels(attack, w, s);
    ASSERT_EQ(grids.size(), expect.size());
    for (std::size_t g = 0; g < grids.size(); ++g) {
      EXPECT_EQ(grids[g].label, expect[g]);
      ASSERT_EQ(grids[g].rows.size(), w);
      for (std::size_t i = 0; i < w; ++i)
        EXPECT_EQ(id_from_bits(grids[g].rows[i]), log.frames[g * s + i].frame.id());
    }
    const auto seqs = build_id_sequences(log, w, s);
    ASSERT_EQ(seqs.size(), expect.size());
    for (std::size_t g = 0; g < seqs.size(); ++g) EXPECT_EQ(seqs[g].label, expect[g]);
  }
}

TEST(Windows, ShortLogWarnsAndYieldsNothing) {
  LabeledLog log;
  for (int i = 0; i < 5; ++i) log.frames.push_back({CanFrame::make(Timestamp{i}, 1, {}), AttackClass::normal()});
  int warnings = 0;
  ScopedWarningHandler h([&](std::string_view) { ++warnings; });
  EXPECT_TRUE(build_bit_grids(log).empty());
  EXPECT_EQ(warnings, 1);
}

TEST(Windows, PackedGridRoundTrip) {
  Rng rng(6);
  LabeledLog log;
  for (int i = 0; i < 100; ++i)
    log.frames.push_back({CanFrame(Timestamp{i}, "can0", static_cast<std::uint32_t>(rng.below(kExtendedIdLimit)),
                                   IdFormat::extended, {}),
                          AttackClass::normal()});
  const auto grids = build_bit_grids(log, 29, 7);
  std::stringstream ss;
  write_bit_grids(grids, 29, ss);
  EXPECT_EQ(ss.str().size(), 12 + grids.size() * packed_grid_bytes(29));
  const auto back = read_bit_grids(ss);
  ASSERT_EQ(back.size(), grids.size());
  for (std::size_t g = 0; g < grids.size(); ++g) EXPECT_EQ(back[g].rows, grids[g].rows);
  std::stringstream truncated(ss.str().substr(0, 20));
  EXPECT_THROW(read_bit_grids(truncated), ParseError);
}
