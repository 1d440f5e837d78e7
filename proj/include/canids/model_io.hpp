#pragma once

// JSON model documents: {"format": "canids-model", "version": 1, "kind": ..., ...}.
// Readers accept any document with the same major version.

#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "canids/detectors.hpp"

namespace canids {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson tree_to_json(const Tree& t) {
  ojson f = ojson::array(), thr = ojson::array(), l = ojson::array(), r = ojson::array(), v = ojson::array();
  for (const auto& n : t.nodes) {
    f.push_back(n.feature);
    thr.push_back(n.threshold);
    l.push_back(n.left);
    r.push_back(n.right);
    v.push_back(n.feature < 0 ? ojson(n.value) : ojson::array());
  }
  return ojson{{"feature", f}, {"threshold", thr}, {"left", l}, {"right", r}, {"value", v}};
}

inline Tree tree_from_json(const nlohmann::json& j) {
  Tree t;
  const auto& f = j.at("feature");
  t.nodes.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto& n = t.nodes[i];
    n.feature = f[i].get<int>();
    n.threshold = j.at("threshold")[i].get<double>();
    n.left = j.at("left")[i].get<int>();
    n.right = j.at("right")[i].get<int>();
    n.value = j.at("value")[i].get<std::vector<double>>();
    const auto size = static_cast<int>(f.size());
    if (n.feature >= 0 && (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= size ||
                           n.right >= size))
      throw ValidationError("malformed tree: child index out of order");
    if (n.feature < 0 && n.value.empty()) throw ValidationError("malformed tree: leaf without value");
  }
  if (t.nodes.empty()) throw ValidationError("malformed tree: no nodes");
  return t;
}

inline double json_number_or_nan(const nlohmann::json& j, const char* key) {
  return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : std::numeric_limits<double>::quiet_NaN();
}

inline ojson number_or_null(double v) { return std::isnan(v) ? ojson(nullptr) : ojson(v); }

}  // namespace detail

inline nlohmann::ordered_json model_body_to_json(const DetectorModel& model) {
  using detail::ojson;
  ojson j;
  j["kind"] = to_string(model.kind());
  j["classes"] = model.classes();
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, DecisionTreeModel>) {
          j["params"] = {{"max_depth", m.params.max_depth}, {"min_leaf", m.params.min_leaf}};
          j["tree"] = detail::tree_to_json(m.tree);
        } else if constexpr (std::is_same_v<M, RandomForestModel>) {
          j["params"] = {{"n_trees", m.params.n_trees},     {"max_depth", m.params.max_depth},
                         {"min_leaf", m.params.min_leaf},   {"bootstrap", m.params.bootstrap},
                         {"feature_frac", m.params.feature_frac}, {"seed", m.params.seed}};
          j["trees"] = ojson::array();
          for (const auto& t : m.trees) j["trees"].push_back(detail::tree_to_json(t));
        } else if constexpr (std::is_same_v<M, GbdtModel>) {
          j["params"] = {{"n_rounds", m.params.n_rounds},   {"learning_rate", m.params.learning_rate},
                         {"max_depth", m.params.max_depth}, {"min_leaf", m.params.min_leaf},
                         {"lambda", m.params.lambda},       {"feature_frac", m.params.feature_frac},
                         {"seed", m.params.seed}};
          j["init"] = m.init;
          j["round_scale"] = m.round_scale;
          j["training_loss"] = m.training_loss;
          j["rounds"] = ojson::array();
          for (const auto& r : m.rounds) {
            ojson round = ojson::array();
            for (const auto& t : r) round.push_back(detail::tree_to_json(t));
            j["rounds"].push_back(std::move(round));
          }
        } else {
          j["params"] = {{"k_sigma", m.k_sigma}};
          j["ids"] = ojson::array();
          for (const auto& [id, t] : m.ids)
            j["ids"].push_back({{"id", id}, {"mean_us", t.mean_us}, {"std_us", t.std_us}, {"observations", t.observations}});
        }
      },
      model.impl);
  j["measurements"] = {{"latency_ns", detail::number_or_null(model.latency_ns)},
                       {"mean_visits", detail::number_or_null(model.mean_visits)},
                       {"fit_seconds", model.fit_seconds}};
  return j;
}

inline DetectorModel model_body_from_json(const nlohmann::json& j) {
  try {
    DetectorModel model;
    const auto kind = detector_kind_from_string(j.at("kind").get<std::string>());
    const auto classes = j.at("classes").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    switch (kind) {
      case DetectorKind::tree: {
        DecisionTreeModel m;
        m.classes = classes;
        m.params.max_depth = p.at("max_depth").get<std::size_t>();
        m.params.min_leaf = p.at("min_leaf").get<std::size_t>();
        m.tree = detail::tree_from_json(j.at("tree"));
        model.impl = std::move(m);
        break;
      }
      case DetectorKind::forest: {
        RandomForestModel m;
        m.classes = classes;
        m.params.n_trees = p.at("n_trees").get<std::size_t>();
        m.params.max_depth = p.at("max_depth").get<std::size_t>();
        m.params.min_leaf = p.at("min_leaf").get<std::size_t>();
        m.params.bootstrap = p.at("bootstrap").get<bool>();
        m.params.feature_frac = p.at("feature_frac").get<double>();
        m.params.seed = p.at("seed").get<std::uint64_t>();
        for (const auto& t : j.at("trees")) m.trees.push_back(detail::tree_from_json(t));
        model.impl = std::move(m);
        break;
      }
      case DetectorKind::gbdt: {
        GbdtModel m;
        m.classes = classes;
        m.params.n_rounds = p.at("n_rounds").get<std::size_t>();
        m.params.learning_rate = p.at("learning_rate").get<double>();
        m.params.max_depth = p.at("max_depth").get<std::size_t>();
        m.params.min_leaf = p.at("min_leaf").get<std::size_t>();
        m.params.lambda = p.at("lambda").get<double>();
        m.params.feature_frac = p.at("feature_frac").get<double>();
        m.params.seed = p.at("seed").get<std::uint64_t>();
        m.init = j.at("init").get<std::vector<double>>();
        m.round_scale = j.at("round_scale").get<std::vector<double>>();
        m.training_loss = j.at("training_loss").get<std::vector<double>>();
        for (const auto& r : j.at("rounds")) {
          std::vector<Tree> round;
          for (const auto& t : r) round.push_back(detail::tree_from_json(t));
          if (round.size() != m.init.size()) throw ValidationError("gbdt round has wrong tree count");
          m.rounds.push_back(std::move(round));
        }
        if (m.round_scale.size() != m.rounds.size()) throw ValidationError("gbdt round_scale length mismatch");
        model.impl = std::move(m);
        break;
      }
      case DetectorKind::frequency: {
        FrequencyDetector m;
        m.classes = classes;
        m.k_sigma = p.at("k_sigma").get<double>();
        for (const auto& e : j.at("ids"))
          m.ids[e.at("id").get<std::uint32_t>()] = {e.at("mean_us").get<double>(), e.at("std_us").get<double>(),
                                                    e.at("observations").get<std::size_t>()};
        model.impl = std::move(m);
        break;
      }
    }
    if (j.contains("measurements")) {
      const auto& ms = j.at("measurements");
      model.latency_ns = detail::json_number_or_nan(ms, "latency_ns");
      model.mean_visits = detail::json_number_or_nan(ms, "mean_visits");
      model.fit_seconds = ms.value("fit_seconds", 0.0);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model document: ") + e.what());
  }
}

inline nlohmann::ordered_json model_envelope(std::string_view kind) {
  return {{"format", "canids-model"}, {"version", kModelFormatVersion}, {"kind", kind}};
}

inline void check_envelope(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", std::string{}) != "canids-model")
    throw ValidationError("not a canids model document");
  if (j.value("version", 0) != kModelFormatVersion)
    throw ValidationError("unsupported model format version " + std::to_string(j.value("version", 0)));
}

inline void save_model(const DetectorModel& model, std::ostream& out) {
  auto doc = model_envelope(to_string(model.kind()));
  doc["model"] = model_body_to_json(model);
  out << doc.dump(1) << '\n';
}

inline DetectorModel load_model(const nlohmann::json& doc) {
  check_envelope(doc);
  return model_body_from_json(doc.at("model"));
}

}  // namespace canids
