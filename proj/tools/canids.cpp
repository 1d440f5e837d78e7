// canids: command-line front end for the CAN intrusion-detection workbench.
//
//   canids ingest   <path> --format candump|csv [--schema NAME|FILE] --out FILE
//   canids label    <log.candump> <metadata.json> --out FILE
//   canids synth    --ambient FILE --scenarios FILE --out DIR
//   canids prep     <frames.csv> [--split R] [--smote N] [--windows] --out DIR
//   canids train    <train.csv> --model KIND [--config FILE] --out FILE
//   canids eval     <model.json> <test.csv> [--mode frame|window] --out DIR
//   canids pipeline --config FILE --out DIR
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or validation failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "canids/canids.hpp"

namespace {

using namespace canids;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  bool force = false;
  std::string config;
};

std::string require_out(const Globals& g) {
  if (g.out.empty()) throw ValidationError("--out is required");
  return g.out;
}

nlohmann::json config_or_empty(const Globals& g) {
  return g.config.empty() ? nlohmann::json::object() : read_json_file(g.config);
}

void cmd_ingest(const Globals& g, const std::string& path, const std::string& format, const std::string& schema_arg,
                const std::string& attack_class, bool lenient) {
  const auto out = require_out(g);
  check_writable(out, g.force);
  if (format == "candump") {
    const auto log = read_candump(path, lenient ? ParseMode::lenient : ParseMode::strict);
    write_file(out, g.force, [&](std::ostream& o) { serialize_candump(log, o); });
    std::cerr << "ingested " << log.size() << " frames\n";
  } else if (format == "csv") {
    CsvSchema schema;
    if (fs::exists(schema_arg)) schema = schema_from_json(read_json_file(schema_arg));
    else schema = schema_named(schema_arg, attack_class);
    auto in = open_input(path);
    auto log = parse_csv_dataset(in, schema);
    log.sort_by_time();
    write_file(out, g.force, [&](std::ostream& o) { write_frames_csv(log, o); });
    std::cerr << "ingested " << log.size() << " labeled frames\n";
  } else {
    throw ValidationError("unknown format '" + format + "' (expected candump or csv)");
  }
}

void cmd_label(const Globals& g, const std::string& log_path, const std::string& metadata_path,
               const std::string& space_name) {
  const auto out = require_out(g);
  check_writable(out, g.force);
  const auto raw = read_candump(log_path);
  auto md_in = open_input(metadata_path);
  const auto md = read_metadata(md_in);
  auto space = LabelSpace::builtin(space_name);
  if (!space) throw ValidationError("unknown label space '" + space_name + "'");
  const auto labeled = apply_metadata_labels(raw, md, *space);
  write_file(out, g.force, [&](std::ostream& o) { write_frames_csv(labeled, o); });
  std::size_t attacks = 0;
  for (const auto& f : labeled.frames) attacks += f.is_attack();
  std::cerr << "labeled " << labeled.size() << " frames (" << attacks << " attack)\n";
}

void cmd_synth(const Globals& g, const std::string& ambient_path, const std::string& scenario_path) {
  const fs::path out = require_out(g);
  const auto ambient_json = read_json_file(ambient_path);
  const auto scenario_json = read_json_file(scenario_path);
  const auto seed = g.seed_set ? g.seed : 0;
  const auto model = ambient_from_json(ambient_json, derive_seed(seed, "synth"));
  const auto scenarios = scenarios_from_json(scenario_json);
  prepare_output_dir(out, g.force);
  const auto ambient = generate_ambient(model);
  const auto r = synthesize(ambient, scenarios, derive_seed(seed, "synth"));
  write_file(out / "ambient.candump", g.force, [&](std::ostream& o) { serialize_candump(ambient, o); });
  write_file(out / "log.candump", g.force, [&](std::ostream& o) { serialize_candump(r.log, o); });
  write_file(out / "metadata.json", g.force, [&](std::ostream& o) { write_metadata(r.metadata, o); });
  write_file(out / "labeled.csv", g.force, [&](std::ostream& o) { write_frames_csv(r.log, o); });
  std::cerr << "synthesized " << r.log.size() << " frames, " << r.metadata.size() << " metadata entries\n";
}

void cmd_prep(const Globals& g, const std::string& frames_path, double ratio, const std::string& mode,
              std::size_t smote, std::size_t smote_k, bool windows, std::size_t grid_step, bool include_dlc) {
  const fs::path out = require_out(g);
  auto log = read_frames_csv(frames_path);
  log.sort_by_time();
  SplitSpec spec;
  spec.ratio = ratio;
  spec.seed = derive_seed(g.seed, "split");
  if (mode == "chronological") spec.mode = SplitMode::chronological;
  else if (mode != "stratified") throw ValidationError("unknown split mode '" + mode + "'");
  spec.validate();
  prepare_output_dir(out, g.force);

  const auto table = build_feature_table(log, include_dlc);
  const auto idx = split_indices(table.labels, table.timestamps, spec);
  auto train = table.subset(idx.train);
  const auto test = table.subset(idx.test);
  LabeledLog train_frames, test_frames;
  for (auto i : idx.train) train_frames.frames.push_back(log.frames[i]);
  for (auto i : idx.test) test_frames.frames.push_back(log.frames[i]);
  if (smote > 0) {
    SmoteOptions so;
    so.target_count = smote;
    so.k = smote_k;
    so.seed = derive_seed(g.seed, "smote");
    train = smote_oversample(train, so).table;
  }
  write_file(out / "train.csv", g.force, [&](std::ostream& o) { write_feature_csv(train, o); });
  write_file(out / "test.csv", g.force, [&](std::ostream& o) { write_feature_csv(test, o); });
  write_file(out / "train_frames.csv", g.force, [&](std::ostream& o) { write_frames_csv(train_frames, o); });
  write_file(out / "test_frames.csv", g.force, [&](std::ostream& o) { write_frames_csv(test_frames, o); });
  if (windows) {
    for (const auto& [name, frames] : {std::pair{"train", &train_frames}, std::pair{"test", &test_frames}}) {
      const auto grids = build_bit_grids(*frames, kGridWindow, grid_step);
      write_file(out / (std::string(name) + "_grids.bin"), g.force,
                 [&](std::ostream& o) { write_bit_grids(grids, kGridWindow, o); });
      write_file(out / (std::string(name) + "_grid_labels.csv"), g.force,
                 [&](std::ostream& o) { write_window_labels(grids, o); });
      const auto seqs = build_id_sequences(*frames);
      write_file(out / (std::string(name) + "_sequences.csv"), g.force,
                 [&](std::ostream& o) { write_id_sequences(seqs, o); });
    }
  }
  nlohmann::ordered_json prep{{"rows", table.rows()},
                              {"train_rows", train.rows()},
                              {"test_rows", test.rows()},
                              {"classes", table.classes},
                              {"split", {{"ratio", ratio}, {"mode", mode}, {"seed", spec.seed}}},
                              {"smote", {{"target_count", smote}, {"k", smote_k}}}};
  write_json(out / "prep.json", prep, g.force);
  std::cerr << "train " << train.rows() << " rows, test " << test.rows() << " rows\n";
}

void cmd_train(const Globals& g, const std::string& train_path, const std::string& kind,
               std::optional<bool> majority_literal) {
  const auto out = require_out(g);
  check_writable(out, g.force);
  auto spec_json = config_or_empty(g);
  if (!kind.empty()) spec_json["kind"] = kind;
  if (majority_literal) spec_json["majority_literal"] = *majority_literal;
  if (!spec_json.contains("kind")) throw ValidationError("--model or a config with \"kind\" is required");
  const auto spec = ModelSpec::from_json(spec_json);
  const auto train = read_feature_file(train_path);
  const auto model = fit_model(spec, train, derive_seed(g.seed, "model:" + spec.name));
  write_file(out, g.force, [&](std::ostream& o) { save_any_model(model, o); });
  std::cerr << "trained " << kind_name(model) << " on " << train.rows() << " rows\n";
}

void cmd_eval(const Globals& g, const std::string& model_path, const std::string& test_path, const std::string& mode,
              std::size_t window, std::size_t step, const std::string& context_path, bool include_normal,
              std::optional<bool> majority_literal) {
  const fs::path out = require_out(g);
  const auto model = load_any_model(model_path);
  const auto test = read_feature_file(test_path);
  std::optional<FeatureTable> context;
  if (!context_path.empty()) context = read_feature_file(context_path);
  EvalOptions eo;
  eo.mode = eval_mode_from_string(mode);
  eo.window = window;
  eo.step = step;
  eo.include_normal = include_normal;
  eo.dataset = fs::path(test_path).filename().string();
  eo.majority_literal = majority_literal;
  prepare_output_dir(out, g.force);
  const auto report = evaluate_pipeline(model, test, eo, context ? &*context : nullptr);
  write_file(out / "report.json", g.force, [&](std::ostream& o) { emit_report(report, ReportFormat::json, o); });
  write_file(out / "report.csv", g.force, [&](std::ostream& o) { emit_report(report, ReportFormat::csv, o); });
  write_file(out / "report.txt", g.force, [&](std::ostream& o) { emit_report(report, ReportFormat::text_table, o); });
  emit_report(report, ReportFormat::text_table, std::cout);
}

void cmd_pipeline(const Globals& g) {
  if (g.config.empty()) throw ValidationError("pipeline needs --config");
  const auto out = require_out(g);
  const auto j = read_json_file(g.config);
  auto cfg = pipeline_config_from_json(j, fs::path(g.config).parent_path().empty() ? fs::path(".")
                                                                                    : fs::path(g.config).parent_path());
  if (g.seed_set) cfg.seed = g.seed;
  const auto r = run_pipeline(cfg, out, g.force);
  emit_reports(r.reports, ReportFormat::text_table, std::cout);
}

std::optional<bool> flag_value(const CLI::Option* opt, bool value) {
  return opt->count() > 0 ? std::optional<bool>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CAN bus intrusion-detection workbench"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Global seed for every stochastic stage");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_flag("--force", g.force, "Overwrite existing outputs");
  app.add_option("--config", g.config, "JSON configuration file");
  app.fallthrough();

  std::string in1, in2, format = "candump", schema = "workbench", attack_class = "DoS Attack", label_space = "road";
  bool lenient = false;
  auto* ingest = app.add_subcommand("ingest", "Normalize a candump log or a CSV dataset");
  ingest->add_option("path", in1, "Input file")->required();
  ingest->add_option("--format", format, "candump or csv")->capture_default_str();
  ingest->add_option("--schema", schema, "hcrl, ivn, workbench, or a schema JSON file")->capture_default_str();
  ingest->add_option("--attack-class", attack_class, "Class for injected rows (hcrl)")->capture_default_str();
  ingest->add_flag("--lenient", lenient, "Skip malformed candump lines instead of failing");

  auto* label = app.add_subcommand("label", "Label a candump log from attack metadata");
  label->add_option("log", in1, "candump log")->required();
  label->add_option("metadata", in2, "Metadata JSON")->required();
  label->add_option("--label-space", label_space, "road, hcrl, ivn or synth")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Synthesize ambient traffic and inject attacks");
  synth->add_option("--ambient", in1, "Ambient model JSON")->required();
  synth->add_option("--scenarios", in2, "Attack scenario JSON")->required();

  double ratio = 0.8;
  std::string split_mode = "stratified";
  std::size_t smote = 0, smote_k = 5, grid_step = kGridWindow;
  bool windows = false, include_dlc = false;
  auto* prep = app.add_subcommand("prep", "Build feature tables and split train/test");
  prep->add_option("frames", in1, "Labeled frames CSV")->required();
  prep->add_option("--split", ratio, "Train share")->capture_default_str();
  prep->add_option("--split-mode", split_mode, "stratified or chronological")->capture_default_str();
  prep->add_option("--smote", smote, "Raise attack classes to this many rows (0 = off)");
  prep->add_option("--smote-k", smote_k, "SMOTE neighbours")->capture_default_str();
  prep->add_flag("--windows", windows, "Also write bit grids and id sequences");
  prep->add_option("--grid-step", grid_step, "Bit grid step")->capture_default_str();
  prep->add_flag("--include-dlc", include_dlc, "Add the DLC feature column");

  std::string kind;
  bool literal = true;
  auto* train = app.add_subcommand("train", "Fit a detector");
  train->add_option("train", in1, "Training feature CSV")->required();
  train->add_option("--model", kind, "tree, forest, gbdt, lccde or frequency");
  auto* train_literal = train->add_option("--lccde-majority-literal", literal,
                                          "LCCDE: leader of the majority class decides (true) or majority wins (false)");

  std::string mode = "frame", context;
  std::size_t window = kGridWindow, step = kGridWindow;
  bool include_normal = false;
  bool eval_literal_value = true;
  auto* eval = app.add_subcommand("eval", "Score a model on a test set");
  eval->add_option("model", in1, "Model JSON")->required();
  eval->add_option("test", in2, "Test feature CSV")->required();
  eval->add_option("--mode", mode, "frame or window")->capture_default_str();
  eval->add_option("--window", window, "Window size (window mode)")->capture_default_str();
  eval->add_option("--step", step, "Window step (window mode)")->capture_default_str();
  eval->add_option("--context", context, "Earlier traffic replayed before the test rows (frequency detector)");
  eval->add_flag("--include-normal", include_normal, "Include Normal in macro averages");
  auto* eval_literal = eval->add_option("--lccde-majority-literal", eval_literal_value, "Override the LCCDE rule");

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage from one config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    if (ingest->parsed()) cmd_ingest(g, in1, format, schema, attack_class, lenient);
    else if (label->parsed()) cmd_label(g, in1, in2, label_space);
    else if (synth->parsed()) cmd_synth(g, in1, in2);
    else if (prep->parsed())
      cmd_prep(g, in1, ratio, split_mode, smote, smote_k, windows, grid_step, include_dlc);
    else if (train->parsed()) cmd_train(g, in1, kind, flag_value(train_literal, literal));
    else if (eval->parsed())
      cmd_eval(g, in1, in2, mode, window, step, context, include_normal, flag_value(eval_literal, eval_literal_value));
    else if (pipeline->parsed()) cmd_pipeline(g);
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
