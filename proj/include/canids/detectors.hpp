#pragma once

// Classical detectors behind one train/predict surface: CART decision tree,
// random forest, softmax gradient-boosted trees, and an inter-arrival
// frequency baseline.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "canids/core.hpp"
#include "canids/features.hpp"
#include "canids/rng.hpp"
#include "canids/tree.hpp"

namespace canids {

struct Prediction {
  int label = 0;  // index into the model's class list
  double confidence = 0.0;
  std::vector<double> scores;
};

inline Prediction prediction_from_scores(std::vector<double> scores) {
  Prediction p;
  const auto it = std::max_element(scores.begin(), scores.end());  // first max wins ties
  p.label = static_cast<int>(it - scores.begin());
  p.confidence = *it;
  p.scores = std::move(scores);
  return p;
}

namespace detail {

/// Maps table labels onto the compact list of classes present in training.
struct ClassIndex {
  std::vector<std::string> classes;
  std::vector<int> labels;
};

inline ClassIndex compact_classes(const FeatureTable& t) {
  std::vector<int> remap(t.classes.size(), -1);
  std::vector<bool> present(t.classes.size(), false);
  for (auto l : t.labels) present[static_cast<std::size_t>(l)] = true;
  ClassIndex ci;
  for (std::size_t c = 0; c < t.classes.size(); ++c)
    if (present[c]) {
      remap[c] = static_cast<int>(ci.classes.size());
      ci.classes.push_back(t.classes[c]);
    }
  ci.labels.reserve(t.rows());
  for (auto l : t.labels) ci.labels.push_back(remap[static_cast<std::size_t>(l)]);
  return ci;
}

inline MatrixView view(const FeatureTable& t) { return {t.values, t.cols()}; }

}  // namespace detail

// ---- decision tree ---------------------------------------------------------

struct DecisionTreeModel {
  std::vector<std::string> classes;
  TreeParams params;
  Tree tree;

  std::vector<double> scores(std::span<const double> x) const { return tree.evaluate(x); }
};

inline DecisionTreeModel fit_decision_tree(const FeatureTable& train, std::size_t max_depth = 12,
                                           std::size_t min_leaf = 1) {
  if (train.rows() == 0) throw ValidationError("empty training set");
  auto ci = detail::compact_classes(train);
  DecisionTreeModel m;
  m.classes = ci.classes;
  m.params = {max_depth, min_leaf, 1.0, {}};
  std::vector<std::size_t> rows(train.rows());
  std::iota(rows.begin(), rows.end(), 0);
  GiniCriterion crit(ci.labels, ci.classes.size());
  m.tree = grow_tree(detail::view(train), rows, crit, m.params);
  return m;
}

// ---- random forest ---------------------------------------------------------

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 12;
  std::size_t min_leaf = 1;
  bool bootstrap = true;
  double feature_frac = 1.0 / 3.0;
  std::uint64_t seed = 0;
};

struct RandomForestModel {
  std::vector<std::string> classes;
  ForestParams params;
  std::vector<Tree> trees;

  std::vector<double> scores(std::span<const double> x) const {
    std::vector<double> acc(classes.size(), 0.0);
    for (const auto& t : trees) {
      const auto& v = t.evaluate(x);
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += v[c];
    }
    for (auto& a : acc) a /= static_cast<double>(trees.size());
    return acc;
  }
};

inline RandomForestModel fit_random_forest(const FeatureTable& train, const ForestParams& params = {}) {
  if (train.rows() == 0) throw ValidationError("empty training set");
  if (params.n_trees == 0) throw ValidationError("forest needs at least one tree");
  auto ci = detail::compact_classes(train);
  RandomForestModel m;
  m.classes = ci.classes;
  m.params = params;
  const auto x = detail::view(train);
  GiniCriterion crit(ci.labels, ci.classes.size());
  const TreeParams tp{params.max_depth, params.min_leaf, params.feature_frac, {}};
  const auto n = train.rows();
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, t));
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = rng.below(n);
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    m.trees.push_back(grow_tree(x, rows, crit, tp, &rng));
  }
  return m;
}

// ---- gradient boosting -----------------------------------------------------

struct GbdtParams {
  std::size_t n_rounds = 200;
  double learning_rate = 0.1;
  std::size_t max_depth = 6;
  std::size_t min_leaf = 1;
  double lambda = 1.0;
  /// Fraction of features offered to each tree.
  double feature_frac = 1.0;
  std::uint64_t seed = 0;
};

struct GbdtModel {
  std::vector<std::string> classes;
  GbdtParams params;
  std::vector<double> init;                // per-class raw score
  std::vector<std::vector<Tree>> rounds;   // rounds[r][k]
  std::vector<double> round_scale;         // step multiplier actually applied
  std::vector<double> training_loss;       // mean log-loss after each round (index 0 = init)

  std::vector<double> raw_scores(std::span<const double> x, std::size_t n_rounds) const {
    std::vector<double> f = init;
    const auto upto = std::min(n_rounds, rounds.size());
    for (std::size_t r = 0; r < upto; ++r)
      for (std::size_t k = 0; k < f.size(); ++k)
        f[k] += params.learning_rate * round_scale[r] * rounds[r][k].evaluate(x)[0];
    return f;
  }

  std::vector<double> scores(std::span<const double> x, std::size_t n_rounds = SIZE_MAX) const {
    return softmax(raw_scores(x, n_rounds));
  }

  static std::vector<double> softmax(std::vector<double> f) {
    const double mx = *std::max_element(f.begin(), f.end());
    double z = 0;
    for (auto& v : f) z += (v = std::exp(v - mx));
    for (auto& v : f) v /= z;
    return f;
  }
};

namespace detail {

inline double mean_log_loss(const std::vector<double>& raw, std::span<const int> labels, std::size_t k) {
  double loss = 0;
  const auto n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double* f = raw.data() + i * k;
    const double mx = *std::max_element(f, f + k);
    double z = 0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(f[c] - mx);
    loss += std::log(z) + mx - f[labels[i]];
  }
  return loss / static_cast<double>(n);
}

}  // namespace detail

/// Multiclass boosting on softmax cross-entropy: each round fits one Newton
/// regression tree per class. A round whose step would raise the training
/// loss is halved until it does not (up to 20 times, else skipped), so the
/// recorded training loss never increases.
inline GbdtModel fit_gbdt(const FeatureTable& train, const GbdtParams& params = {}) {
  if (train.rows() == 0) throw ValidationError("empty training set");
  if (!(params.learning_rate > 0)) throw ValidationError("learning rate must be positive");
  auto ci = detail::compact_classes(train);
  GbdtModel m;
  m.classes = ci.classes;
  m.params = params;
  const auto n = train.rows();
  const auto k = ci.classes.size();

  std::vector<double> prior(k, 0.0);
  for (auto l : ci.labels) prior[static_cast<std::size_t>(l)] += 1.0;
  for (auto& p : prior) p = std::log(std::max(p / static_cast<double>(n), 1e-12));
  m.init = prior;

  std::vector<double> raw(n * k);
  for (std::size_t i = 0; i < n; ++i) std::copy(prior.begin(), prior.end(), raw.begin() + static_cast<std::ptrdiff_t>(i * k));
  double loss = detail::mean_log_loss(raw, ci.labels, k);
  m.training_loss.push_back(loss);
  if (k < 2) return m;

  const auto x = detail::view(train);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  const auto sorted = detail::presort(x, rows);
  const TreeParams tp{params.max_depth, params.min_leaf, 1.0, {}};
  Rng rng(derive_seed(params.seed, "gbdt"));
  const auto n_feats = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(params.feature_frac * static_cast<double>(x.cols))), 1, x.cols);

  std::vector<double> grad(n), hess(n), prob(n * k), delta(n * k), trial(n * k);
  for (std::size_t r = 0; r < params.n_rounds; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* f = raw.data() + i * k;
      const double mx = *std::max_element(f, f + k);
      double z = 0;
      for (std::size_t c = 0; c < k; ++c) z += (prob[i * k + c] = std::exp(f[c] - mx));
      for (std::size_t c = 0; c < k; ++c) prob[i * k + c] /= z;
    }
    std::vector<Tree> trees;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = prob[i * k + c];
        grad[i] = p - (ci.labels[i] == static_cast<int>(c) ? 1.0 : 0.0);
        hess[i] = std::max(p * (1.0 - p), 1e-12);
      }
      TreeParams tree_params = tp;
      if (n_feats < x.cols) {
        std::vector<std::size_t> feats(x.cols);
        std::iota(feats.begin(), feats.end(), 0);
        rng.shuffle(feats.begin(), feats.end());
        tree_params.allowed_features.assign(feats.begin(), feats.begin() + static_cast<std::ptrdiff_t>(n_feats));
      }
      NewtonCriterion crit(grad, hess, params.lambda);
      trees.push_back(grow_tree(x, rows, sorted, crit, tree_params));
      for (std::size_t i = 0; i < n; ++i) delta[i * k + c] = trees.back().evaluate(x.row(i))[0];
    }
    double scale = 1.0, new_loss = loss;
    for (int attempt = 0; attempt <= 20; ++attempt) {
      for (std::size_t j = 0; j < n * k; ++j) trial[j] = raw[j] + params.learning_rate * scale * delta[j];
      new_loss = detail::mean_log_loss(trial, ci.labels, k);
      if (new_loss <= loss) break;
      scale *= 0.5;
    }
    if (new_loss > loss) scale = 0.0, new_loss = loss;
    else raw.swap(trial);
    loss = new_loss;
    m.rounds.push_back(std::move(trees));
    m.round_scale.push_back(scale);
    m.training_loss.push_back(loss);
  }
  return m;
}

// ---- frequency baseline ----------------------------------------------------

struct IdTiming {
  double mean_us = 0;
  double std_us = 0;
  std::size_t observations = 0;
};

/// Flags a frame when its gap to the previous frame with the same id is
/// shorter than mean - k_sigma * std of the ambient gaps, or when its id was
/// not modeled (unseen, or fewer than 3 ambient frames).
struct FrequencyDetector {
  std::vector<std::string> classes{std::string(kNormalLabel), "Attack"};
  double k_sigma = 4.0;
  std::map<std::uint32_t, IdTiming> ids;

  bool known(std::uint32_t id) const { return ids.contains(id); }

  /// Streams over (id, timestamp) pairs in time order.
  template <class Ids, class Times>
  std::vector<bool> flags(const Ids& id_of, const Times& ts_of, std::size_t n) const {
    std::vector<bool> out(n, false);
    std::map<std::uint32_t, std::int64_t> last;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t id = id_of(i);
      const std::int64_t t = ts_of(i);
      auto it = ids.find(id);
      if (it == ids.end()) {
        out[i] = true;
      } else if (auto prev = last.find(id); prev != last.end()) {
        const double gap = static_cast<double>(t - prev->second);
        out[i] = gap < it->second.mean_us - k_sigma * it->second.std_us;
      }
      last[id] = t;
    }
    return out;
  }

  template <class Frame>
  std::vector<bool> flags(const BasicTrafficLog<Frame>& log) const {
    return flags([&](std::size_t i) { return frame_of(log.frames[i]).id(); },
                 [&](std::size_t i) { return frame_of(log.frames[i]).timestamp().micros; }, log.size());
  }
};

template <class Frame>
FrequencyDetector fit_frequency_detector(const BasicTrafficLog<Frame>& ambient, double k_sigma = 4.0,
                                         std::string attack_label = "Attack") {
  std::map<std::uint32_t, std::vector<std::int64_t>> times;
  for (const auto& f : ambient.frames) times[frame_of(f).id()].push_back(frame_of(f).timestamp().micros);
  FrequencyDetector d;
  d.k_sigma = k_sigma;
  d.classes = {std::string(kNormalLabel), std::move(attack_label)};
  std::size_t excluded = 0;
  for (auto& [id, ts] : times) {
    if (ts.size() < 3) {
      ++excluded;
      continue;
    }
    std::sort(ts.begin(), ts.end());
    double sum = 0, sq = 0;
    const auto gaps = static_cast<double>(ts.size() - 1);
    for (std::size_t i = 1; i < ts.size(); ++i) sum += static_cast<double>(ts[i] - ts[i - 1]);
    const double mean = sum / gaps;
    for (std::size_t i = 1; i < ts.size(); ++i) {
      const double d0 = static_cast<double>(ts[i] - ts[i - 1]) - mean;
      sq += d0 * d0;
    }
    d.ids[id] = {mean, gaps > 1 ? std::sqrt(sq / (gaps - 1)) : 0.0, ts.size()};
  }
  if (excluded > 0)
    warn(std::to_string(excluded) + " ids with fewer than 3 ambient frames excluded from the frequency model");
  return d;
}

// ---- common surface --------------------------------------------------------

enum class DetectorKind { tree, forest, gbdt, frequency };

inline const char* to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::tree: return "tree";
    case DetectorKind::forest: return "forest";
    case DetectorKind::gbdt: return "gbdt";
    case DetectorKind::frequency: return "frequency";
  }
  return "?";
}

inline DetectorKind detector_kind_from_string(std::string_view s) {
  for (auto k : {DetectorKind::tree, DetectorKind::forest, DetectorKind::gbdt, DetectorKind::frequency})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown detector kind '" + std::string(s) + "'");
}

/// A fitted detector plus the measurements recorded for it.
struct DetectorModel {
  std::variant<DecisionTreeModel, RandomForestModel, GbdtModel, FrequencyDetector> impl;
  /// Median per-sample predict wall time on validation data (ns); NaN until measured.
  double latency_ns = std::numeric_limits<double>::quiet_NaN();
  /// Mean tree nodes visited per sample on validation data; a deterministic speed proxy.
  double mean_visits = std::numeric_limits<double>::quiet_NaN();
  double fit_seconds = 0.0;

  DetectorKind kind() const { return static_cast<DetectorKind>(impl.index()); }

  const std::vector<std::string>& classes() const {
    return std::visit([](const auto& m) -> const std::vector<std::string>& { return m.classes; }, impl);
  }

  /// Scores one row. The frequency detector has no per-row view (it needs the
  /// stream), so it only answers via predict().
  std::vector<double> scores(std::span<const double> x) const {
    return std::visit(
        [&](const auto& m) -> std::vector<double> {
          if constexpr (std::is_same_v<std::decay_t<decltype(m)>, FrequencyDetector>)
            throw ValidationError("frequency detector scores whole streams, not single rows");
          else
            return m.scores(x);
        },
        impl);
  }

  std::size_t visits(std::span<const double> x) const {
    return std::visit(
        [&](const auto& m) -> std::size_t {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, DecisionTreeModel>) return m.tree.path_length(x);
          else if constexpr (std::is_same_v<M, RandomForestModel>) {
            std::size_t s = 0;
            for (const auto& t : m.trees) s += t.path_length(x);
            return s;
          } else if constexpr (std::is_same_v<M, GbdtModel>) {
            std::size_t s = 0;
            for (const auto& r : m.rounds)
              for (const auto& t : r) s += t.path_length(x);
            return s;
          } else {
            return 1;
          }
        },
        impl);
  }
};

/// Predicts every row. Rows must be in time order for the frequency detector,
/// which reads the "id" column and the row timestamps; `context_rows` leading
/// rows only warm up its per-id state and are dropped from the result.
inline std::vector<Prediction> predict(const DetectorModel& model, const FeatureTable& rows,
                                       std::size_t context_rows = 0) {
  std::vector<Prediction> out;
  if (const auto* fd = std::get_if<FrequencyDetector>(&model.impl)) {
    const auto id_col = static_cast<std::size_t>(
        std::find(rows.columns.begin(), rows.columns.end(), "id") - rows.columns.begin());
    if (id_col >= rows.cols()) throw ValidationError("frequency detector needs an 'id' column");
    const auto flags = fd->flags([&](std::size_t i) { return static_cast<std::uint32_t>(rows.row(i)[id_col]); },
                                 [&](std::size_t i) { return rows.timestamps[i]; }, rows.rows());
    for (std::size_t i = context_rows; i < rows.rows(); ++i)
      out.push_back(prediction_from_scores(flags[i] ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0}));
    return out;
  }
  out.reserve(rows.rows() - std::min(context_rows, rows.rows()));
  for (std::size_t i = context_rows; i < rows.rows(); ++i) out.push_back(prediction_from_scores(model.scores(rows.row(i))));
  return out;
}

/// Records median per-sample latency and mean visits over at most `max_rows` rows.
inline void measure_speed(DetectorModel& model, const FeatureTable& rows, std::size_t max_rows = 2000) {
  if (model.kind() == DetectorKind::frequency || rows.rows() == 0) return;
  const auto n = std::min(rows.rows(), max_rows);
  std::vector<double> ns(n);
  double visits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto s = model.scores(rows.row(i));
    const auto t1 = std::chrono::steady_clock::now();
    ns[i] = std::chrono::duration<double, std::nano>(t1 - t0).count() + 0.0 * s[0];
    visits += static_cast<double>(model.visits(rows.row(i)));
  }
  std::nth_element(ns.begin(), ns.begin() + static_cast<std::ptrdiff_t>(n / 2), ns.end());
  model.latency_ns = ns[n / 2];
  model.mean_visits = visits / static_cast<double>(n);
}

}  // namespace canids
