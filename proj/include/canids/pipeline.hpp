#pragma once

// End-to-end orchestration shared by the command-line tool: file handling,
// model specs, evaluation in frame or window mode, and the full pipeline run.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "canids/candump.hpp"
#include "canids/csv.hpp"
#include "canids/detectors.hpp"
#include "canids/features.hpp"
#include "canids/lccde.hpp"
#include "canids/metadata.hpp"
#include "canids/metrics.hpp"
#include "canids/model_io.hpp"
#include "canids/synth.hpp"
#include "canids/windows.hpp"

namespace canids {

namespace fs = std::filesystem;

// ---- files -----------------------------------------------------------------

inline std::ifstream open_input(const fs::path& path, bool binary = false) {
  if (!fs::exists(path)) throw ValidationError("input file not found: " + path.string());
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw ValidationError("cannot open input file: " + path.string());
  return in;
}

inline nlohmann::json read_json_file(const fs::path& path) {
  auto in = open_input(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

/// Refuses to replace an existing file unless `force`.
inline void check_writable(const fs::path& path, bool force) {
  if (fs::exists(path) && !force)
    throw ValidationError("output exists (use --force to overwrite): " + path.string());
}

inline std::ofstream open_output(const fs::path& path, bool force, bool binary = false) {
  check_writable(path, force);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

/// Creates an output directory. An existing non-empty one needs `force`.
inline void prepare_output_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir)) throw ValidationError("output is not a directory: " + dir.string());
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw ValidationError("output directory not empty (use --force to overwrite): " + dir.string());
  fs::create_directories(dir);
}

template <class Write>
void write_file(const fs::path& path, bool force, Write&& write) {
  auto out = open_output(path, force);
  write(out);
  if (!out) throw Error("write failed: " + path.string());
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j, bool force) {
  write_file(path, force, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

// ---- datasets --------------------------------------------------------------

inline CsvSchema schema_named(std::string_view name, const std::string& attack_class = "DoS Attack") {
  if (name == "hcrl") return CsvSchema::hcrl(attack_class);
  if (name == "ivn") return CsvSchema::ivn();
  if (name == "workbench") return CsvSchema::workbench();
  throw ValidationError("unknown CSV schema '" + std::string(name) + "' (expected hcrl, ivn, workbench or a JSON file)");
}

/// Reads a frame CSV in the workbench layout.
inline LabeledLog read_frames_csv(const fs::path& path) {
  auto in = open_input(path);
  return parse_csv_dataset(in, CsvSchema::workbench());
}

inline TrafficLog read_candump(const fs::path& path, ParseMode mode = ParseMode::strict) {
  auto in = open_input(path);
  auto r = parse_candump_log(in, mode);
  if (r.skipped > 0) warn(std::to_string(r.skipped) + " malformed lines skipped in " + path.string());
  return std::move(r.log);
}

inline FeatureTable read_feature_file(const fs::path& path) {
  auto in = open_input(path);
  return read_feature_csv(in);
}

// ---- models ----------------------------------------------------------------

using AnyModel = std::variant<DetectorModel, LccdeModel>;

inline std::string kind_name(const AnyModel& m) {
  if (const auto* d = std::get_if<DetectorModel>(&m)) return to_string(d->kind());
  return "lccde";
}

inline const std::vector<std::string>& classes_of(const AnyModel& m) {
  return std::visit([](const auto& x) -> const std::vector<std::string>& { return x.classes(); }, m);
}

inline bool is_frequency(const AnyModel& m) {
  const auto* d = std::get_if<DetectorModel>(&m);
  return d && d->kind() == DetectorKind::frequency;
}

inline void save_any_model(const AnyModel& m, std::ostream& out) {
  std::visit([&](const auto& x) { save_model(x, out); }, m);
}

inline AnyModel load_any_model(const fs::path& path) {
  const auto doc = read_json_file(path);
  check_envelope(doc);
  if (doc.value("kind", std::string{}) == "lccde") return load_lccde(doc);
  return load_model(doc);
}

/// Frequency model from the Normal, original rows of a time-ordered table.
inline FrequencyDetector fit_frequency_detector(const FeatureTable& t, double k_sigma = 4.0) {
  const auto id_col = static_cast<std::size_t>(std::find(t.columns.begin(), t.columns.end(), "id") - t.columns.begin());
  if (id_col >= t.cols()) throw ValidationError("frequency detector needs an 'id' column");
  TrafficLog ambient;
  const std::array<std::uint8_t, 0> none{};
  for (std::size_t i = 0; i < t.rows(); ++i) {
    if (t.class_name(i) != kNormalLabel || t.provenance[i] != Provenance::original || t.timestamps[i] < 0) continue;
    const auto id = static_cast<std::uint32_t>(t.row(i)[id_col]);
    ambient.frames.emplace_back(Timestamp{t.timestamps[i]}, "can0", id,
                                id < kStandardIdLimit ? IdFormat::standard : IdFormat::extended, none);
  }
  if (ambient.empty()) throw ValidationError("frequency detector needs Normal frames with timestamps");
  ambient.sort_by_time();
  return fit_frequency_detector(ambient, k_sigma);
}

/// A model request: {"kind": ..., "name"?: ..., hyperparameters...}.
struct ModelSpec {
  std::string name;
  std::string kind;
  nlohmann::json params = nlohmann::json::object();

  static ModelSpec from_json(const nlohmann::json& j) {
    ModelSpec s;
    if (!j.is_object() || !j.contains("kind")) throw ValidationError("model spec needs a \"kind\"");
    s.kind = j.at("kind").get<std::string>();
    s.name = j.value("name", s.kind);
    for (const auto& [k, v] : j.items())
      if (k != "kind" && k != "name") s.params[k] = v;
    return s;
  }
};

namespace detail {

/// Reads typed hyperparameters and rejects unknown keys.
class ParamReader {
 public:
  explicit ParamReader(const nlohmann::json& p) : p_(p) {}
  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.push_back(key);
    if (!p_.contains(key)) return fallback;
    try {
      return p_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("model parameter '" + key + "' has the wrong type");
    }
  }
  void finish(const std::string& kind) const {
    for (const auto& [k, v] : p_.items())
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
        throw ValidationError("unknown parameter '" + k + "' for model kind " + kind);
  }

 private:
  const nlohmann::json& p_;
  std::vector<std::string> seen_;
};

inline GbdtParams gbdt_params(ParamReader& r, GbdtParams d) {
  d.n_rounds = r.get("n_rounds", d.n_rounds);
  d.learning_rate = r.get("learning_rate", d.learning_rate);
  d.max_depth = r.get("max_depth", d.max_depth);
  d.min_leaf = r.get("min_leaf", d.min_leaf);
  d.lambda = r.get("lambda", d.lambda);
  d.feature_frac = r.get("feature_frac", d.feature_frac);
  d.seed = r.get("seed", d.seed);
  return d;
}

}  // namespace detail

/// Fits the model described by `spec`. `seed` is used unless the spec sets one.
inline AnyModel fit_model(const ModelSpec& spec, const FeatureTable& train, std::uint64_t seed) {
  detail::ParamReader r(spec.params);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  if (spec.kind == "lccde") {
    LccdeParams p;
    p.seed = r.get("seed", seed);
    p.validation_frac = r.get("validation_frac", p.validation_frac);
    p.folds = r.get("folds", p.folds);
    p.speed = speed_measure_from_string(r.get<std::string>("speed", to_string(p.speed)));
    p.majority_literal = r.get("majority_literal", p.majority_literal);
    if (spec.params.contains("base")) {
      const auto& bases = spec.params.at("base");
      if (!bases.is_array() || bases.size() != 3) throw ValidationError("lccde \"base\" must list 3 GBDT configs");
      for (std::size_t i = 0; i < 3; ++i) {
        detail::ParamReader br(bases[i]);
        p.base[i] = detail::gbdt_params(br, p.base[i]);
        br.finish("gbdt");
      }
      r.get<nlohmann::json>("base", {});
    }
    r.finish(spec.kind);
    if (!(p.validation_frac > 0 && p.validation_frac < 1)) throw ValidationError("validation_frac must lie in (0, 1)");
    return fit_lccde(train, p);
  }

  DetectorModel m;
  if (spec.kind == "tree") {
    const auto depth = r.get<std::size_t>("max_depth", 12);
    const auto leaf = r.get<std::size_t>("min_leaf", 1);
    r.finish(spec.kind);
    m.impl = fit_decision_tree(train, depth, leaf);
  } else if (spec.kind == "forest") {
    ForestParams p;
    p.seed = seed;
    p.n_trees = r.get("n_trees", p.n_trees);
    p.max_depth = r.get("max_depth", p.max_depth);
    p.min_leaf = r.get("min_leaf", p.min_leaf);
    p.bootstrap = r.get("bootstrap", p.bootstrap);
    p.feature_frac = r.get("feature_frac", p.feature_frac);
    p.seed = r.get("seed", p.seed);
    r.finish(spec.kind);
    m.impl = fit_random_forest(train, p);
  } else if (spec.kind == "gbdt") {
    GbdtParams d;
    d.seed = seed;
    const auto p = detail::gbdt_params(r, d);
    r.finish(spec.kind);
    m.impl = fit_gbdt(train, p);
  } else if (spec.kind == "frequency") {
    const auto k = r.get("k_sigma", 4.0);
    r.finish(spec.kind);
    m.impl = fit_frequency_detector(train, k);
  } else {
    throw ValidationError("unknown model kind '" + spec.kind + "' (expected tree, forest, gbdt, lccde, frequency)");
  }
  m.fit_seconds = elapsed();
  return m;
}

// ---- evaluation ------------------------------------------------------------

enum class EvalMode { frame, window };

inline EvalMode eval_mode_from_string(std::string_view s) {
  if (s == "frame") return EvalMode::frame;
  if (s == "window") return EvalMode::window;
  throw ValidationError("unknown evaluation mode '" + std::string(s) + "' (expected frame or window)");
}

struct EvalOptions {
  EvalMode mode = EvalMode::frame;
  std::size_t window = kGridWindow;
  std::size_t step = kGridWindow;
  bool include_normal = false;
  std::string dataset = "test";
  std::string model_name;
  /// Overrides the stored LCCDE case-(b) rule when set.
  std::optional<bool> majority_literal;
};

/// Predicted class names for every row of `test`. The frequency detector
/// replays `context` rows (earlier traffic) merged in time order with the test
/// rows so that per-id gaps are measured on the full stream.
inline std::vector<std::string> predict_names(const AnyModel& model, const FeatureTable& test,
                                              const FeatureTable* context = nullptr,
                                              std::optional<bool> majority_literal = std::nullopt) {
  std::vector<Prediction> preds;
  if (const auto* d = std::get_if<DetectorModel>(&model)) {
    if (d->kind() == DetectorKind::frequency && context && context->rows() > 0) {
      FeatureTable merged = *context;
      const std::size_t offset = merged.rows();
      for (std::size_t i = 0; i < test.rows(); ++i)
        merged.add_row(test.row(i), merged.class_index(test.class_name(i)), test.provenance[i], test.timestamps[i]);
      std::vector<std::size_t> order(merged.rows());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return merged.timestamps[a] < merged.timestamps[b]; });
      const auto sorted = merged.subset(order);
      const auto all = predict(*d, sorted);
      preds.resize(test.rows());
      for (std::size_t k = 0; k < order.size(); ++k)
        if (order[k] >= offset) preds[order[k] - offset] = all[k];
    } else {
      preds = predict(*d, test);
    }
  } else {
    auto lm = std::get<LccdeModel>(model);
    if (majority_literal) lm.majority_literal = *majority_literal;
    preds = predict(lm, test);
  }
  const auto& classes = classes_of(model);
  std::vector<std::string> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(classes[static_cast<std::size_t>(p.label)]);
  return out;
}

namespace detail {

inline nlohmann::ordered_json describe_model(const AnyModel& model, nlohmann::ordered_json& timings) {
  nlohmann::ordered_json d;
  d["kind"] = kind_name(model);
  if (const auto* m = std::get_if<DetectorModel>(&model)) {
    d["params"] = model_body_to_json(*m).at("params");
    timings["fit_seconds"] = m->fit_seconds;
  } else {
    const auto& e = std::get<LccdeModel>(model);
    d["majority_literal"] = e.majority_literal;
    d["base"] = nlohmann::ordered_json::array();
    for (const auto& b : e.base) d["base"].push_back(model_body_to_json(b).at("params"));
    auto leaders = leaders_to_json(e.leaders);
    if (e.leaders.measure == SpeedMeasure::latency) {
      timings["leader_speed_ns"] = leaders["speed"];
      leaders.erase("speed");
    }
    d["leaders"] = std::move(leaders);
    double fit = 0;
    for (const auto& b : e.base) fit += b.fit_seconds;
    timings["fit_seconds"] = fit;
  }
  return d;
}

}  // namespace detail

/// Scores a model on a test table. Window mode slides `window`-frame windows
/// over the time-ordered test rows; a window is an attack when any of its
/// frames is, and is predicted attack when any frame is predicted attack.
/// The frequency detector is always scored on Normal vs Attack.
inline EvalReport evaluate_pipeline(const AnyModel& model, const FeatureTable& test, const EvalOptions& opt = {},
                                    const FeatureTable* context = nullptr) {
  if (test.rows() == 0) throw ValidationError("empty test set");
  const auto t0 = std::chrono::steady_clock::now();
  auto predicted = predict_names(model, test, context, opt.majority_literal);
  const double predict_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto truth = test.label_names();
  std::vector<std::string> order = classes_of(model);
  for (const auto& c : test.classes)
    if (std::find(order.begin(), order.end(), c) == order.end()) order.push_back(c);

  if (is_frequency(model) || opt.mode == EvalMode::window) {
    const auto attack = is_frequency(model) ? classes_of(model)[1] : std::string("Attack");
    truth = binarize(truth, attack);
    predicted = binarize(predicted, attack);
    order = {std::string(kNormalLabel), attack};
  }

  if (opt.mode == EvalMode::window) {
    std::vector<std::size_t> idx(test.rows());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return test.timestamps[a] < test.timestamps[b]; });
    const auto n = window_count(test.rows(), opt.window, opt.step);
    if (n == 0) throw ValidationError("test set shorter than one window");
    std::vector<std::size_t> t_attack(test.rows() + 1, 0), p_attack(test.rows() + 1, 0);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      t_attack[k + 1] = t_attack[k] + (truth[idx[k]] != kNormalLabel);
      p_attack[k + 1] = p_attack[k] + (predicted[idx[k]] != kNormalLabel);
    }
    std::vector<std::string> wt, wp;
    for (std::size_t w = 0; w < n; ++w) {
      const auto s = w * opt.step, e = s + opt.window;
      wt.push_back(t_attack[e] - t_attack[s] > 0 ? order[1] : order[0]);
      wp.push_back(p_attack[e] - p_attack[s] > 0 ? order[1] : order[0]);
    }
    truth = std::move(wt);
    predicted = std::move(wp);
  }

  auto report = compute_metrics(truth, predicted, order, opt.include_normal);
  report.model = opt.model_name.empty() ? kind_name(model) : opt.model_name;
  report.dataset = opt.dataset;
  report.mode = opt.mode == EvalMode::frame ? "frame" : "window";
  report.descriptors["model"] = detail::describe_model(model, report.timings);
  report.descriptors["test_rows"] = test.rows();
  if (opt.mode == EvalMode::window) report.descriptors["window"] = {{"size", opt.window}, {"step", opt.step}};
  report.timings["predict_seconds"] = predict_seconds;
  report.timings["predict_ns_per_row"] = predict_seconds * 1e9 / static_cast<double>(test.rows());
  return report;
}

// ---- pipeline --------------------------------------------------------------

struct PipelineConfig {
  std::uint64_t seed = 0;
  nlohmann::json input;  // {"kind": synth|candump|csv|frames, ...}
  bool include_dlc = false;
  SplitSpec split;
  /// The frequency detector needs uninterrupted streams: it is trained and
  /// tested on a chronological split with the same ratio.
  bool smote = false;
  std::size_t smote_target = 1000;
  std::size_t smote_k = 5;
  bool windows = false;
  std::size_t grid_step = kGridWindow;
  std::size_t sequence_window = kSequenceWindow;
  std::size_t sequence_step = 1;
  std::vector<ModelSpec> models;
  std::vector<EvalMode> eval_modes{EvalMode::frame};
  std::size_t eval_window = kGridWindow;
  std::size_t eval_step = kGridWindow;
  bool include_normal = false;
  /// Directory relative paths in `input` are resolved against.
  fs::path base_dir = ".";

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
  fs::path resolve(const nlohmann::json& j) const { return resolve(j.get<std::string>()); }
};

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const fs::path& base_dir = ".") {
  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    c.input = j.at("input");
    if (j.contains("features")) c.include_dlc = j.at("features").value("include_dlc", false);
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split.ratio = s.value("ratio", 0.8);
      const auto mode = s.value("mode", std::string("stratified"));
      if (mode == "stratified") c.split.mode = SplitMode::stratified_random;
      else if (mode == "chronological") c.split.mode = SplitMode::chronological;
      else throw ValidationError("unknown split mode '" + mode + "'");
    }
    if (j.contains("smote")) {
      const auto& s = j.at("smote");
      c.smote = s.value("enabled", true);
      c.smote_target = s.value("target_count", c.smote_target);
      c.smote_k = s.value("k", c.smote_k);
    }
    if (j.contains("windows")) {
      const auto& w = j.at("windows");
      c.windows = w.value("enabled", true);
      c.grid_step = w.value("grid_step", c.grid_step);
      c.sequence_window = w.value("sequence_window", c.sequence_window);
      c.sequence_step = w.value("sequence_step", c.sequence_step);
    }
    for (const auto& m : j.at("models")) c.models.push_back(ModelSpec::from_json(m));
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      if (e.contains("modes")) {
        c.eval_modes.clear();
        for (const auto& m : e.at("modes")) c.eval_modes.push_back(eval_mode_from_string(m.get<std::string>()));
      }
      c.eval_window = e.value("window", c.eval_window);
      c.eval_step = e.value("step", c.eval_step);
      c.include_normal = e.value("include_normal", c.include_normal);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pipeline config: ") + e.what());
  }
  c.split.validate();
  if (c.models.empty()) throw ValidationError("pipeline config lists no models");
  std::vector<std::string> names;
  for (const auto& m : c.models) {
    if (std::find(names.begin(), names.end(), m.name) != names.end())
      throw ValidationError("duplicate model name '" + m.name + "'");
    names.push_back(m.name);
  }
  // Referenced files must exist before any work starts.
  const auto kind = c.input.value("kind", std::string{});
  std::vector<std::string> keys;
  if (kind == "synth") keys = {"ambient", "scenarios"};
  else if (kind == "candump") keys = {"path", "metadata"};
  else if (kind == "csv" || kind == "frames") keys = {"path"};
  else throw ValidationError("input kind must be synth, candump, csv or frames");
  for (const auto& k : keys) {
    if (!c.input.contains(k)) {
      if (k == "metadata") continue;
      throw ValidationError("input needs \"" + k + "\"");
    }
    if (c.input.at(k).is_string() && !fs::exists(c.resolve(c.input.at(k).get<std::string>())))
      throw ValidationError("input file not found: " + c.resolve(c.input.at(k).get<std::string>()).string());
  }
  return c;
}

inline nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["input"] = nlohmann::ordered_json::parse(c.input.dump());
  j["features"] = {{"include_dlc", c.include_dlc}};
  j["split"] = {{"ratio", c.split.ratio},
                {"mode", c.split.mode == SplitMode::chronological ? "chronological" : "stratified"}};
  j["smote"] = {{"enabled", c.smote}, {"target_count", c.smote_target}, {"k", c.smote_k}};
  j["windows"] = {{"enabled", c.windows},
                  {"grid_step", c.grid_step},
                  {"sequence_window", c.sequence_window},
                  {"sequence_step", c.sequence_step}};
  j["models"] = nlohmann::ordered_json::array();
  for (const auto& m : c.models) {
    nlohmann::ordered_json mj{{"kind", m.kind}, {"name", m.name}};
    for (const auto& [k, v] : m.params.items()) mj[k] = nlohmann::ordered_json::parse(v.dump());
    j["models"].push_back(std::move(mj));
  }
  j["eval"]["modes"] = nlohmann::ordered_json::array();
  for (auto m : c.eval_modes) j["eval"]["modes"].push_back(m == EvalMode::frame ? "frame" : "window");
  j["eval"]["window"] = c.eval_window;
  j["eval"]["step"] = c.eval_step;
  j["eval"]["include_normal"] = c.include_normal;
  return j;
}

/// Every seed used by a run, derived from the global seed by stage name.
inline std::map<std::string, std::uint64_t> pipeline_seeds(const PipelineConfig& c) {
  std::map<std::string, std::uint64_t> s;
  s["global"] = c.seed;
  s["synth"] = derive_seed(c.seed, "synth");
  s["split"] = derive_seed(c.seed, "split");
  s["smote"] = derive_seed(c.seed, "smote");
  for (const auto& m : c.models) s["model:" + m.name] = derive_seed(c.seed, "model:" + m.name);
  return s;
}

/// Loads the configured input as a time-ordered labeled log. Synthesized
/// inputs also leave their ambient log, attack log and sidecar in `data_dir`.
inline LabeledLog load_pipeline_input(const PipelineConfig& c, const fs::path& data_dir, bool force) {
  const auto& in = c.input;
  const auto kind = in.at("kind").get<std::string>();
  LabeledLog log;
  if (kind == "synth") {
    const auto seeds = pipeline_seeds(c);
    const auto ambient_model = ambient_from_json(read_json_file(c.resolve(in.at("ambient"))), seeds.at("synth"));
    const auto scenarios = scenarios_from_json(read_json_file(c.resolve(in.at("scenarios"))));
    const auto ambient = generate_ambient(ambient_model);
    auto r = synthesize(ambient, scenarios, seeds.at("synth"));
    write_file(data_dir / "ambient.candump", force, [&](std::ostream& o) { serialize_candump(ambient, o); });
    write_file(data_dir / "log.candump", force, [&](std::ostream& o) { serialize_candump(r.log, o); });
    write_file(data_dir / "metadata.json", force, [&](std::ostream& o) { write_metadata(r.metadata, o); });
    log = std::move(r.log);
  } else if (kind == "candump") {
    const auto raw = read_candump(c.resolve(in.at("path")));
    std::vector<AttackMetadata> md;
    if (in.contains("metadata")) {
      auto f = open_input(c.resolve(in.at("metadata")));
      md = read_metadata(f);
    }
    LabelSpace space = LabelSpace::road();
    if (in.contains("label_space")) {
      auto b = LabelSpace::builtin(in.at("label_space").get<std::string>());
      if (!b) throw ValidationError("unknown label space '" + in.at("label_space").get<std::string>() + "'");
      space = *b;
    }
    log = apply_metadata_labels(raw, md, space);
  } else if (kind == "csv") {
    CsvSchema schema;
    const auto& sj = in.contains("schema") ? in.at("schema") : nlohmann::json("workbench");
    if (sj.is_object()) schema = schema_from_json(sj);
    else schema = schema_named(sj.get<std::string>(), in.value("attack_class", std::string("DoS Attack")));
    auto f = open_input(c.resolve(in.at("path")));
    log = parse_csv_dataset(f, schema);
  } else {
    log = read_frames_csv(c.resolve(in.at("path")));
  }
  log.sort_by_time();
  return log;
}

struct PipelineResult {
  std::vector<EvalReport> reports;
  fs::path report_json;
};

/// Runs every stage and writes the run directory:
///   config.json, seeds.json, data/, prep/, models/, reports/.
inline PipelineResult run_pipeline(const PipelineConfig& c, const fs::path& out, bool force) {
  prepare_output_dir(out, force);
  const auto seeds = pipeline_seeds(c);
  write_json(out / "config.json", pipeline_config_to_json(c), force);
  nlohmann::ordered_json sj;
  for (const auto& [k, v] : seeds) sj[k] = v;
  write_json(out / "seeds.json", sj, force);

  const auto data_dir = out / "data", prep_dir = out / "prep", model_dir = out / "models", report_dir = out / "reports";
  for (const auto& d : {data_dir, prep_dir, model_dir, report_dir}) fs::create_directories(d);

  const auto log = load_pipeline_input(c, data_dir, force);
  if (log.empty()) throw ValidationError("input contains no frames");
  write_file(data_dir / "labeled.csv", force, [&](std::ostream& o) { write_frames_csv(log, o); });

  const auto table = build_feature_table(log, c.include_dlc);
  auto split = c.split;
  split.seed = seeds.at("split");
  const auto idx = split_indices(table.labels, table.timestamps, split);
  auto train = table.subset(idx.train);
  const auto test = table.subset(idx.test);
  SplitSpec chrono = split;
  chrono.mode = SplitMode::chronological;
  const auto cidx = split_indices(table.labels, table.timestamps, chrono);
  const auto chrono_train = table.subset(cidx.train), chrono_test = table.subset(cidx.test);

  LabeledLog train_frames, test_frames;
  train_frames.label_space = test_frames.label_space = log.label_space;
  for (auto i : idx.train) train_frames.frames.push_back(log.frames[i]);
  for (auto i : idx.test) test_frames.frames.push_back(log.frames[i]);
  write_file(prep_dir / "train_frames.csv", force, [&](std::ostream& o) { write_frames_csv(train_frames, o); });
  write_file(prep_dir / "test_frames.csv", force, [&](std::ostream& o) { write_frames_csv(test_frames, o); });

  if (c.smote) {
    SmoteOptions so;
    so.target_count = c.smote_target;
    so.k = c.smote_k;
    so.seed = seeds.at("smote");
    train = smote_oversample(train, so).table;
  }
  write_file(prep_dir / "train.csv", force, [&](std::ostream& o) { write_feature_csv(train, o); });
  write_file(prep_dir / "test.csv", force, [&](std::ostream& o) { write_feature_csv(test, o); });

  if (c.windows) {
    for (const auto& [name, frames] : {std::pair{"train", &train_frames}, std::pair{"test", &test_frames}}) {
      const auto grids = build_bit_grids(*frames, kGridWindow, c.grid_step);
      write_file(prep_dir / (std::string(name) + "_grids.bin"), force,
                 [&](std::ostream& o) { write_bit_grids(grids, kGridWindow, o); });
      write_file(prep_dir / (std::string(name) + "_grid_labels.csv"), force,
                 [&](std::ostream& o) { write_window_labels(grids, o); });
      const auto seqs = build_id_sequences(*frames, c.sequence_window, c.sequence_step);
      write_file(prep_dir / (std::string(name) + "_sequences.csv"), force,
                 [&](std::ostream& o) { write_id_sequences(seqs, o); });
    }
  }

  // Normal is never resampled, so the class balance after SMOTE is recorded.
  std::vector<std::size_t> counts(train.classes.size(), 0);
  for (auto l : train.labels) ++counts[static_cast<std::size_t>(l)];
  nlohmann::ordered_json train_counts = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < counts.size(); ++c) train_counts[train.classes[c]] = counts[c];

  nlohmann::ordered_json prep;
  prep["rows"] = table.rows();
  prep["train_rows"] = train.rows();
  prep["test_rows"] = test.rows();
  prep["classes"] = table.classes;
  prep["train_class_counts"] = train_counts;
  prep["split"] = {{"ratio", c.split.ratio},
                   {"mode", c.split.mode == SplitMode::chronological ? "chronological" : "stratified"},
                   {"seed", split.seed}};
  write_json(prep_dir / "prep.json", prep, force);

  PipelineResult result;
  for (const auto& spec : c.models) {
    const bool freq = spec.kind == "frequency";
    const auto& fit_on = freq ? chrono_train : train;
    const auto& test_on = freq ? chrono_test : test;
    const auto model = fit_model(spec, fit_on, seeds.at("model:" + spec.name));
    write_file(model_dir / (spec.name + ".json"), force, [&](std::ostream& o) { save_any_model(model, o); });
    for (auto mode : c.eval_modes) {
      EvalOptions eo;
      eo.mode = mode;
      eo.window = c.eval_window;
      eo.step = c.eval_step;
      eo.include_normal = c.include_normal;
      eo.model_name = spec.name;
      eo.dataset = freq ? "test (chronological)" : "test";
      auto rep = evaluate_pipeline(model, test_on, eo, freq ? &chrono_train : nullptr);
      rep.seeds = seeds;
      if (!freq) rep.descriptors["train_class_counts"] = train_counts;
      result.reports.push_back(std::move(rep));
    }
  }
  result.report_json = report_dir / "report.json";
  write_file(result.report_json, force, [&](std::ostream& o) { emit_reports(result.reports, ReportFormat::json, o); });
  write_file(report_dir / "report.csv", force, [&](std::ostream& o) { emit_reports(result.reports, ReportFormat::csv, o); });
  write_file(report_dir / "report.txt", force,
             [&](std::ostream& o) { emit_reports(result.reports, ReportFormat::text_table, o); });
  return result;
}

}  // namespace canids
