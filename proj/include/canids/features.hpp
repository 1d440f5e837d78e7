#pragma once

// Tabular model inputs: per-frame feature vectors, train/test splitting and
// SMOTE rebalancing of attack classes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "canids/core.hpp"
#include "canids/csv.hpp"
#include "canids/rng.hpp"

namespace canids {

/// [id, dlc?, b0..b7] with each field as its numeric value.
struct FeatureVector {
  std::vector<double> values;
  AttackClass label;
};

inline FeatureVector frame_to_features(const LabeledFrame& f, bool include_dlc) {
  FeatureVector v;
  v.values.reserve(include_dlc ? 10 : 9);
  v.values.push_back(static_cast<double>(f.frame.id()));
  if (include_dlc) v.values.push_back(static_cast<double>(f.frame.dlc()));
  for (auto b : f.frame.padded_data()) v.values.push_back(static_cast<double>(b));
  v.label = f.label;
  return v;
}

inline std::vector<std::string> feature_columns(bool include_dlc) {
  std::vector<std::string> c{"id"};
  if (include_dlc) c.emplace_back("dlc");
  for (int i = 0; i < 8; ++i) c.push_back("b" + std::to_string(i));
  return c;
}

enum class Provenance : std::uint8_t { original, synthetic };

/// Row-major feature matrix with class labels and provenance.
struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<std::string> classes;  // label index -> class name
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<Provenance> provenance;
  std::vector<std::int64_t> timestamps;  // micros; -1 for synthetic rows

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return columns.size(); }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
  const std::string& class_name(std::size_t i) const { return classes[static_cast<std::size_t>(labels[i])]; }

  int class_index(std::string_view name) {
    auto it = std::find(classes.begin(), classes.end(), name);
    if (it != classes.end()) return static_cast<int>(it - classes.begin());
    classes.emplace_back(name);
    return static_cast<int>(classes.size() - 1);
  }

  void add_row(std::span<const double> v, int label, Provenance p, std::int64_t ts) {
    if (v.size() != cols()) throw ValidationError("feature row width mismatch");
    values.insert(values.end(), v.begin(), v.end());
    labels.push_back(label);
    provenance.push_back(p);
    timestamps.push_back(ts);
  }

  FeatureTable subset(std::span<const std::size_t> idx) const {
    FeatureTable t;
    t.columns = columns;
    t.classes = classes;
    t.values.reserve(idx.size() * cols());
    for (auto i : idx) t.add_row(row(i), labels[i], provenance[i], timestamps[i]);
    return t;
  }

  std::vector<std::string> label_names() const {
    std::vector<std::string> out;
    out.reserve(rows());
    for (std::size_t i = 0; i < rows(); ++i) out.push_back(class_name(i));
    return out;
  }
};

inline FeatureTable build_feature_table(const LabeledLog& log, bool include_dlc) {
  FeatureTable t;
  t.columns = feature_columns(include_dlc);
  t.classes = log.label_space.names();
  t.values.reserve(log.size() * t.cols());
  for (const auto& f : log.frames) {
    const auto v = frame_to_features(f, include_dlc);
    t.add_row(v.values, t.class_index(f.label.name), Provenance::original, f.frame.timestamp().micros);
  }
  return t;
}

// ---- split -----------------------------------------------------------------

enum class SplitMode { stratified_random, chronological };

struct SplitSpec {
  double ratio = 0.8;
  SplitMode mode = SplitMode::stratified_random;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("split ratio must lie in (0, 1)");
  }
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Index-level split. Both index lists come back in ascending order so that
/// time order is preserved within each side.
inline SplitIndices split_indices(std::span<const int> labels, std::span<const std::int64_t> timestamps,
                                  const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = labels.size();
  const auto target = static_cast<std::size_t>(std::llround(spec.ratio * static_cast<double>(n)));
  SplitIndices out;
  if (spec.mode == SplitMode::chronological) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return timestamps[a] < timestamps[b]; });
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(target));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(target), order.end());
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);

    struct Alloc {
      int label;
      std::size_t take;
      double frac;
    };
    std::vector<Alloc> allocs;
    std::size_t forced = 0, floors = 0;
    for (auto& [label, idx] : by_class) {
      if (idx.size() < 2) {
        warn("class index " + std::to_string(label) + " has fewer than 2 samples; kept whole in train");
        forced += idx.size();
        allocs.push_back({label, idx.size(), -1.0});
        continue;
      }
      const double exact = spec.ratio * static_cast<double>(idx.size());
      const auto fl = static_cast<std::size_t>(std::floor(exact));
      floors += fl;
      allocs.push_back({label, fl, exact - static_cast<double>(fl)});
    }
    // Largest remainder: hand out the units still missing to reach `target`.
    std::size_t missing = target > forced + floors ? target - forced - floors : 0;
    std::vector<std::size_t> order(allocs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return allocs[a].frac > allocs[b].frac; });
    for (auto k : order) {
      if (missing == 0) break;
      if (allocs[k].frac <= 0.0) continue;
      ++allocs[k].take;
      --missing;
    }
    for (const auto& a : allocs) {
      auto idx = by_class[a.label];
      Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(a.label)));
      rng.shuffle(idx.begin(), idx.end());
      out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(a.take));
      out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(a.take), idx.end());
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline std::pair<FeatureTable, FeatureTable> split_train_test(const FeatureTable& data, const SplitSpec& spec) {
  const auto s = split_indices(data.labels, data.timestamps, spec);
  return {data.subset(s.train), data.subset(s.test)};
}

inline std::pair<LabeledLog, LabeledLog> split_train_test(const LabeledLog& log, const SplitSpec& spec) {
  std::vector<int> labels;
  std::vector<std::int64_t> ts;
  for (const auto& f : log.frames) {
    labels.push_back(static_cast<int>(log.label_space.index_of(f.label.name).value_or(0)));
    ts.push_back(f.frame.timestamp().micros);
  }
  const auto s = split_indices(labels, ts, spec);
  LabeledLog train, test;
  train.label_space = test.label_space = log.label_space;
  for (auto i : s.train) train.frames.push_back(log.frames[i]);
  for (auto i : s.test) test.frames.push_back(log.frames[i]);
  return {std::move(train), std::move(test)};
}

// ---- SMOTE -----------------------------------------------------------------

struct SmoteOptions {
  std::size_t target_count = 100'000;
  std::size_t k = 5;
  std::uint64_t seed = 0;
};

struct SmoteResult {
  FeatureTable table;
  /// Per output row: index of the parent row in the input table for synthetic
  /// rows, -1 for originals.
  std::vector<std::int64_t> parent;
};

namespace detail {

/// k nearest rows (Euclidean) to `self` among `members`, excluding self;
/// ties broken by lower row index.
inline std::vector<std::size_t> nearest_neighbors(const FeatureTable& t, std::span<const std::size_t> members,
                                                  std::size_t self, std::size_t k) {
  using Entry = std::pair<double, std::size_t>;  // (distance^2, row)
  std::priority_queue<Entry> heap;
  const auto x = t.row(self);
  for (auto m : members) {
    if (m == self) continue;
    const auto y = t.row(m);
    double d = 0;
    for (std::size_t c = 0; c < x.size(); ++c) d += (x[c] - y[c]) * (x[c] - y[c]);
    if (heap.size() < k) heap.push({d, m});
    else if (Entry{d, m} < heap.top()) {
      heap.pop();
      heap.push({d, m});
    }
  }
  std::vector<std::size_t> out(heap.size());
  for (auto i = out.size(); i-- > 0; heap.pop()) out[i] = heap.top().second;
  return out;
}

}  // namespace detail

/// Raises every attack class below `target_count` to exactly `target_count`
/// rows with x + u*(nn - x), u ~ U[0,1), nn one of the k nearest same-class
/// rows. Normal and classes already at or above the target are untouched.
/// Parents are taken round-robin over a seeded shuffle of the class's rows.
inline SmoteResult smote_oversample(const FeatureTable& train, const SmoteOptions& opt = {}) {
  if (opt.k == 0) throw ValidationError("SMOTE needs k >= 1");
  SmoteResult r;
  r.table = train;
  r.parent.assign(train.rows(), -1);

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < train.rows(); ++i) by_class[train.labels[i]].push_back(i);

  std::vector<double> syn(train.cols());
  for (const auto& [label, members] : by_class) {
    const auto& name = train.classes[static_cast<std::size_t>(label)];
    if (name == kNormalLabel || members.size() >= opt.target_count) continue;
    const std::size_t need = opt.target_count - members.size();
    Rng rng(derive_seed(opt.seed, name));
    if (members.size() == 1) {
      warn("SMOTE undefined for class '" + name + "' with a single sample; duplicating it");
      for (std::size_t i = 0; i < need; ++i) {
        r.table.add_row(train.row(members[0]), label, Provenance::synthetic, -1);
        r.parent.push_back(static_cast<std::int64_t>(members[0]));
      }
      continue;
    }
    const auto k = std::min(opt.k, members.size() - 1);
    std::vector<std::size_t> parents = members;
    rng.shuffle(parents.begin(), parents.end());
    std::map<std::size_t, std::vector<std::size_t>> nn_cache;
    for (std::size_t i = 0; i < need; ++i) {
      const auto p = parents[i % parents.size()];
      auto it = nn_cache.find(p);
      if (it == nn_cache.end()) it = nn_cache.emplace(p, detail::nearest_neighbors(train, members, p, k)).first;
      const auto nn = it->second[rng.below(it->second.size())];
      const double u = rng.uniform01();
      const auto x = train.row(p), y = train.row(nn);
      for (std::size_t c = 0; c < syn.size(); ++c) syn[c] = x[c] + u * (y[c] - x[c]);
      r.table.add_row(syn, label, Provenance::synthetic, -1);
      r.parent.push_back(static_cast<std::int64_t>(p));
    }
  }
  return r;
}

// ---- persistence -----------------------------------------------------------

namespace detail {

inline std::string format_number(double v) {
  char buf[40];
  if (std::nearbyint(v) == v && std::fabs(v) < 9.0e15) std::snprintf(buf, sizeof buf, "%.0f", v);
  else std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// CSV with header: feature columns, label, provenance, timestamp.
inline void write_feature_csv(const FeatureTable& t, std::ostream& out) {
  for (const auto& c : t.columns) out << c << ',';
  out << "label,provenance,timestamp\n";
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (double v : t.row(i)) out << detail::format_number(v) << ',';
    out << detail::csv_escape(t.class_name(i)) << ','
        << (t.provenance[i] == Provenance::original ? "original" : "synthetic") << ',';
    if (t.timestamps[i] >= 0) out << Timestamp{t.timestamps[i]}.to_string();
    out << '\n';
  }
}

/// Reads a feature CSV. `classes` seeds the class index order.
inline FeatureTable read_feature_csv(std::istream& in, std::vector<std::string> classes = {}) {
  FeatureTable t;
  t.classes = std::move(classes);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty feature file");
  auto header = detail::split_csv(line);
  if (header.size() < 4 || header[header.size() - 3] != "label" || header[header.size() - 2] != "provenance" ||
      header.back() != "timestamp")
    throw ParseError(1, "feature header must end with label,provenance,timestamp");
  t.columns.assign(header.begin(), header.end() - 3);
  std::vector<double> row(t.cols());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size()) throw ParseError(line_no, "row arity mismatch");
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const auto s = detail::trim(cells[c]);
      double v;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size()) throw ParseError(line_no, "unparseable feature value");
      row[c] = v;
    }
    const auto& prov = cells[t.cols() + 1];
    if (prov != "original" && prov != "synthetic") throw ParseError(line_no, "bad provenance '" + prov + "'");
    std::int64_t ts = -1;
    if (!cells.back().empty()) {
      auto parsed = parse_timestamp(cells.back());
      if (!parsed) throw ParseError(line_no, "bad timestamp");
      ts = parsed->micros;
    }
    t.add_row(row, t.class_index(cells[t.cols()]), prov == "original" ? Provenance::original : Provenance::synthetic,
              ts);
  }
  return t;
}

}  // namespace canids
