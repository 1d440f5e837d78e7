#pragma once

// Leader Class and Confidence Decision Ensemble over three base learners.
// Training picks a leader model per class from validation F1 (ties by speed,
// then model index). Prediction arbitrates the three base predictions:
//   (a) unanimous: that class, at the highest of the three confidences;
//   (b) two agree on m: the leader of m decides (literal reading), or the
//       majority wins outright when majority_literal is off;
//   (c) all differ: a base model whose own prediction it leads is trusted;
//       among several, or none, the most confident prediction wins.

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canids/detectors.hpp"
#include "canids/features.hpp"
#include "canids/metrics.hpp"
#include "canids/model_io.hpp"

namespace canids {

inline constexpr std::size_t kLccdeBaseModels = 3;

/// How a base model's speed is measured for the leader tie-break.
enum class SpeedMeasure {
  latency,  // median per-sample predict wall time
  visits,   // mean tree nodes visited per sample (machine independent)
};

inline const char* to_string(SpeedMeasure s) { return s == SpeedMeasure::latency ? "latency" : "visits"; }

inline SpeedMeasure speed_measure_from_string(std::string_view s) {
  if (s == "latency") return SpeedMeasure::latency;
  if (s == "visits") return SpeedMeasure::visits;
  throw ValidationError("unknown speed measure '" + std::string(s) + "' (expected latency or visits)");
}

struct LeaderMap {
  std::vector<std::string> classes;
  std::vector<int> leader;                // per class: base model index
  std::vector<std::array<double, 3>> f1;  // per class, per model (validation)
  std::array<double, 3> speed{};          // lower is faster
  SpeedMeasure measure = SpeedMeasure::visits;

  int leader_of(std::size_t cls) const { return leader[cls]; }
};

enum class LccdeCase { unanimous, majority, distinct };

/// Base predictions for one sample, labels already mapped to ensemble class indices.
using BaseTriple = std::array<Prediction, 3>;

inline LccdeCase classify_triple(const BaseTriple& p) {
  const bool ab = p[0].label == p[1].label, bc = p[1].label == p[2].label, ac = p[0].label == p[2].label;
  if (ab && bc) return LccdeCase::unanimous;
  if (ab || bc || ac) return LccdeCase::majority;
  return LccdeCase::distinct;
}

namespace detail {

/// Index of the highest confidence among `who`; first wins ties.
inline std::size_t most_confident(const BaseTriple& p, std::initializer_list<std::size_t> who) {
  std::size_t best = *who.begin();
  for (auto i : who)
    if (p[i].confidence > p[best].confidence) best = i;
  return best;
}

inline Prediction label_only(const Prediction& p) { return {p.label, p.confidence, {}}; }

}  // namespace detail

/// Arbitrates one sample. `leader[c]` is the leader model of class c.
inline Prediction lccde_arbitrate(const BaseTriple& p, std::span<const int> leader, bool majority_literal = true) {
  switch (classify_triple(p)) {
    case LccdeCase::unanimous:
      return detail::label_only(p[detail::most_confident(p, {0, 1, 2})]);
    case LccdeCase::majority: {
      const int m = p[0].label == p[1].label || p[0].label == p[2].label ? p[0].label : p[1].label;
      if (majority_literal) return detail::label_only(p[static_cast<std::size_t>(leader[static_cast<std::size_t>(m)])]);
      std::vector<std::size_t> voters;
      for (std::size_t i = 0; i < 3; ++i)
        if (p[i].label == m) voters.push_back(i);
      const auto best = p[voters[0]].confidence >= p[voters[1]].confidence ? voters[0] : voters[1];
      return detail::label_only(p[best]);
    }
    case LccdeCase::distinct: {
      std::vector<std::size_t> aligned;
      for (std::size_t i = 0; i < 3; ++i)
        if (leader[static_cast<std::size_t>(p[i].label)] == static_cast<int>(i)) aligned.push_back(i);
      if (aligned.size() == 1) return detail::label_only(p[aligned[0]]);
      std::size_t best = aligned.empty() ? 0 : aligned[0];
      for (std::size_t i = 0; i < 3; ++i) {
        if (!aligned.empty() && std::find(aligned.begin(), aligned.end(), i) == aligned.end()) continue;
        if (p[i].confidence > p[best].confidence) best = i;
      }
      return detail::label_only(p[best]);
    }
  }
  return {};
}

// ---- model -----------------------------------------------------------------

struct LccdeModel {
  std::array<DetectorModel, 3> base;
  LeaderMap leaders;
  bool majority_literal = true;

  const std::vector<std::string>& classes() const { return leaders.classes; }

  /// Maps a base model's class index onto the ensemble class list.
  std::vector<std::vector<int>> class_maps() const {
    std::vector<std::vector<int>> maps;
    for (const auto& b : base) {
      std::vector<int> m;
      for (const auto& name : b.classes())
        m.push_back(static_cast<int>(std::find(leaders.classes.begin(), leaders.classes.end(), name) -
                                     leaders.classes.begin()));
      maps.push_back(std::move(m));
    }
    return maps;
  }
};

namespace detail {

inline std::vector<std::string> union_classes(const std::array<DetectorModel, 3>& base,
                                              const std::vector<std::string>& extra) {
  std::vector<std::string> out;
  auto add = [&](const std::string& s) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  };
  for (const auto& b : base)
    for (const auto& c : b.classes()) add(c);
  for (const auto& c : extra) add(c);
  return out;
}

inline std::vector<BaseTriple> base_triples(const std::array<DetectorModel, 3>& base,
                                            const std::vector<std::vector<int>>& maps, const FeatureTable& rows) {
  std::array<std::vector<Prediction>, 3> preds;
  for (std::size_t m = 0; m < 3; ++m) {
    preds[m] = predict(base[m], rows);
    for (auto& p : preds[m]) p.label = maps[m][static_cast<std::size_t>(p.label)];
  }
  std::vector<BaseTriple> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = {preds[0][i], preds[1][i], preds[2][i]};
  return out;
}

inline double speed_of(const DetectorModel& m, SpeedMeasure s) {
  const double v = s == SpeedMeasure::latency ? m.latency_ns : m.mean_visits;
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

/// argmax score, ties by lower speed, then lower index.
inline int pick_leader(const std::array<double, 3>& score, const std::array<double, 3>& speed) {
  int best = 0;
  for (int m = 1; m < 3; ++m) {
    const auto i = static_cast<std::size_t>(m), b = static_cast<std::size_t>(best);
    if (score[i] > score[b] || (score[i] == score[b] && speed[i] < speed[b])) best = m;
  }
  return best;
}

}  // namespace detail

/// Chooses leaders from per-class F1 (`f1[class][model]`) and per-class
/// support. Classes without validation support take the leader with the best
/// macro F1 over supported classes.
inline std::vector<int> leaders_from_scores(const std::vector<std::string>& classes,
                                            const std::vector<std::array<double, 3>>& f1,
                                            const std::vector<std::size_t>& support,
                                            const std::array<double, 3>& speed) {
  std::array<double, 3> macro{};
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (support[c] > 0) {
      for (std::size_t m = 0; m < 3; ++m) macro[m] += f1[c][m];
      ++counted;
    }
  if (counted > 0)
    for (auto& v : macro) v /= static_cast<double>(counted);
  const int global = detail::pick_leader(macro, speed);

  std::vector<int> leader(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (support[c] == 0) {
      warn("class '" + classes[c] + "' absent from validation data; leader chosen by macro F1");
      leader[c] = global;
    } else {
      leader[c] = detail::pick_leader(f1[c], speed);
    }
  }
  return leader;
}

/// Per-class validation F1 of each base model, in `classes` order.
inline std::vector<std::array<double, 3>> validation_f1(const std::array<DetectorModel, 3>& base,
                                                        const FeatureTable& val,
                                                        const std::vector<std::string>& classes,
                                                        std::vector<std::size_t>* support = nullptr) {
  std::vector<std::array<double, 3>> f1(classes.size(), std::array<double, 3>{});
  const auto truth = val.label_names();
  for (std::size_t m = 0; m < 3; ++m) {
    std::vector<std::string> pred;
    pred.reserve(val.rows());
    for (const auto& p : predict(base[m], val)) pred.push_back(base[m].classes()[static_cast<std::size_t>(p.label)]);
    const auto rep = compute_metrics(truth, pred, classes, true);
    for (std::size_t c = 0; c < classes.size(); ++c) {
      f1[c][m] = rep.per_class[c].f1;
      if (support && m == 0) support->push_back(rep.per_class[c].support);
    }
  }
  return f1;
}

/// Leader selection on a validation table. Speeds must already be measured
/// on the base models when `measure` is latency or visits.
inline LeaderMap select_leaders(const std::array<DetectorModel, 3>& base, const FeatureTable& val,
                                SpeedMeasure measure = SpeedMeasure::visits) {
  if (val.rows() == 0) throw ValidationError("leader selection needs validation rows");
  LeaderMap lm;
  lm.measure = measure;
  lm.classes = detail::union_classes(base, val.classes);
  for (std::size_t m = 0; m < 3; ++m) lm.speed[m] = detail::speed_of(base[m], measure);
  std::vector<std::size_t> support;
  lm.f1 = validation_f1(base, val, lm.classes, &support);
  lm.leader = leaders_from_scores(lm.classes, lm.f1, support, lm.speed);
  return lm;
}

inline std::vector<Prediction> predict(const LccdeModel& model, const FeatureTable& rows) {
  const auto triples = detail::base_triples(model.base, model.class_maps(), rows);
  std::vector<Prediction> out;
  out.reserve(triples.size());
  for (const auto& t : triples) out.push_back(lccde_arbitrate(t, model.leaders.leader, model.majority_literal));
  return out;
}

// ---- training --------------------------------------------------------------

struct LccdeParams {
  std::array<GbdtParams, 3> base = default_bases();
  /// Held-out share of train used for leader selection when folds < 2.
  double validation_frac = 0.25;
  /// k-fold F1 averaging when >= 2; base models are then refit on all of train.
  std::size_t folds = 0;
  SpeedMeasure speed = SpeedMeasure::visits;
  bool majority_literal = true;
  std::uint64_t seed = 0;

  static std::array<GbdtParams, 3> default_bases() {
    std::array<GbdtParams, 3> b;
    b[0] = {60, 0.10, 6, 1, 1.0, 0.8, 1};
    b[1] = {60, 0.20, 4, 1, 1.0, 0.8, 2};
    b[2] = {60, 0.05, 8, 1, 1.0, 0.8, 3};
    return b;
  }
};

namespace detail {

inline std::array<DetectorModel, 3> fit_bases(const FeatureTable& train, const LccdeParams& p) {
  std::array<DetectorModel, 3> base;
  for (std::size_t m = 0; m < 3; ++m) {
    auto gp = p.base[m];
    gp.seed = derive_seed(p.seed, gp.seed);
    const auto t0 = std::chrono::steady_clock::now();
    base[m].impl = fit_gbdt(train, gp);
    base[m].fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return base;
}

}  // namespace detail

inline LccdeModel fit_lccde(const FeatureTable& train, const LccdeParams& params = {}) {
  if (train.rows() == 0) throw ValidationError("empty training set");
  LccdeModel model;
  model.majority_literal = params.majority_literal;

  if (params.folds >= 2) {
    // Stratified fold assignment: each class's shuffled rows dealt round-robin.
    std::vector<std::size_t> fold(train.rows());
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < train.rows(); ++i) by_class[train.labels[i]].push_back(i);
    for (auto& [label, idx] : by_class) {
      Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(label) + 0x10000));
      rng.shuffle(idx.begin(), idx.end());
      for (std::size_t j = 0; j < idx.size(); ++j) fold[idx[j]] = j % params.folds;
    }
    model.base = detail::fit_bases(train, params);
    for (auto& b : model.base) measure_speed(b, train);
    auto& lm = model.leaders;
    lm.measure = params.speed;
    lm.classes = detail::union_classes(model.base, train.classes);
    for (std::size_t m = 0; m < 3; ++m) lm.speed[m] = detail::speed_of(model.base[m], params.speed);
    lm.f1.assign(lm.classes.size(), std::array<double, 3>{});
    std::vector<std::size_t> support(lm.classes.size(), 0);
    for (std::size_t k = 0; k < params.folds; ++k) {
      std::vector<std::size_t> tr, va;
      for (std::size_t i = 0; i < train.rows(); ++i) (fold[i] == k ? va : tr).push_back(i);
      if (va.empty() || tr.empty()) continue;
      const auto bases = detail::fit_bases(train.subset(tr), params);
      std::vector<std::size_t> s;
      const auto f1 = validation_f1(bases, train.subset(va), lm.classes, &s);
      for (std::size_t c = 0; c < lm.classes.size(); ++c) {
        for (std::size_t m = 0; m < 3; ++m) lm.f1[c][m] += f1[c][m] / static_cast<double>(params.folds);
        support[c] += s[c];
      }
    }
    lm.leader = leaders_from_scores(lm.classes, lm.f1, support, lm.speed);
    return model;
  }

  SplitSpec spec;
  spec.ratio = 1.0 - params.validation_frac;
  spec.seed = derive_seed(params.seed, "lccde-validation");
  auto [fit_part, val_part] = split_train_test(train, spec);
  if (val_part.rows() == 0 || fit_part.rows() == 0) throw ValidationError("training set too small for a validation split");
  model.base = detail::fit_bases(fit_part, params);
  for (auto& b : model.base) measure_speed(b, val_part);
  model.leaders = select_leaders(model.base, val_part, params.speed);
  return model;
}

// ---- persistence -----------------------------------------------------------

inline nlohmann::ordered_json leaders_to_json(const LeaderMap& lm) {
  nlohmann::ordered_json j;
  j["measure"] = to_string(lm.measure);
  j["classes"] = lm.classes;
  j["leader"] = lm.leader;
  j["f1"] = nlohmann::ordered_json::array();
  for (const auto& row : lm.f1) j["f1"].push_back(row);
  j["speed"] = nlohmann::ordered_json::array();
  for (double s : lm.speed) j["speed"].push_back(detail::number_or_null(std::isinf(s) ? std::nan("") : s));
  return j;
}

inline LeaderMap leaders_from_json(const nlohmann::json& j) {
  LeaderMap lm;
  lm.measure = speed_measure_from_string(j.at("measure").get<std::string>());
  lm.classes = j.at("classes").get<std::vector<std::string>>();
  lm.leader = j.at("leader").get<std::vector<int>>();
  for (const auto& row : j.at("f1")) lm.f1.push_back(row.get<std::array<double, 3>>());
  for (std::size_t m = 0; m < 3; ++m) {
    const auto& s = j.at("speed").at(m);
    lm.speed[m] = s.is_number() ? s.get<double>() : std::numeric_limits<double>::infinity();
  }
  if (lm.leader.size() != lm.classes.size() || lm.f1.size() != lm.classes.size())
    throw ValidationError("leader map size mismatch");
  for (int l : lm.leader)
    if (l < 0 || l > 2) throw ValidationError("leader index out of range");
  return lm;
}

inline void save_model(const LccdeModel& model, std::ostream& out) {
  auto doc = model_envelope("lccde");
  doc["majority_literal"] = model.majority_literal;
  doc["leaders"] = leaders_to_json(model.leaders);
  doc["base"] = nlohmann::ordered_json::array();
  for (const auto& b : model.base) doc["base"].push_back(model_body_to_json(b));
  out << doc.dump(1) << '\n';
}

inline LccdeModel load_lccde(const nlohmann::json& doc) {
  check_envelope(doc);
  if (doc.at("kind") != "lccde") throw ValidationError("model document is not an lccde ensemble");
  try {
    LccdeModel m;
    m.majority_literal = doc.at("majority_literal").get<bool>();
    m.leaders = leaders_from_json(doc.at("leaders"));
    const auto& base = doc.at("base");
    if (base.size() != 3) throw ValidationError("lccde needs exactly 3 base models");
    for (std::size_t i = 0; i < 3; ++i) m.base[i] = model_body_from_json(base[i]);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("lccde document: ") + e.what());
  }
}

}  // namespace canids
