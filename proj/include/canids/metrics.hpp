#pragma once

// Confusion matrices, per-class precision/recall/F1, and report emission as
// JSON, CSV and an aligned text table.

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canids/core.hpp"
#include "canids/csv.hpp"
#include "canids/error.hpp"

namespace canids {

inline constexpr int kReportSchemaVersion = 1;

struct ClassMetrics {
  std::string name;
  std::size_t support = 0;    // true count
  std::size_t predicted = 0;  // predicted count
  std::size_t tp = 0;
  double precision = 0, recall = 0, f1 = 0;
  // Set when the quantity is a 0/0 and was reported as 0.
  bool precision_undefined = false, recall_undefined = false, f1_undefined = false;
};

struct Averages {
  double precision = 0, recall = 0, f1 = 0;
};

struct EvalReport {
  std::string model;    // display name, e.g. "forest" or "lccde"
  std::string dataset;  // display name of the test artifact
  std::string mode = "frame";
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<ClassMetrics> per_class;
  bool macro_includes_normal = false;
  Averages macro, micro;
  double accuracy = 0;
  std::size_t total = 0;
  std::map<std::string, std::uint64_t> seeds;
  /// Model and dataset descriptors; must not contain timing values.
  nlohmann::ordered_json descriptors = nlohmann::ordered_json::object();
  /// Wall-clock values, kept apart so the rest of the report is reproducible.
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();

  const ClassMetrics& metrics_for(std::string_view cls) const {
    for (const auto& m : per_class)
      if (m.name == cls) return m;
    throw ValidationError("class '" + std::string(cls) + "' not in report");
  }
};

namespace detail {

inline double ratio_or_zero(std::size_t num, std::size_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline double harmonic(double p, double r, bool& undefined) {
  undefined = p + r == 0.0;
  return undefined ? 0.0 : 2.0 * p * r / (p + r);
}

}  // namespace detail

/// Scores `predicted` against `truth`. Classes listed in `class_order` come
/// first, in that order; any other names seen follow in sorted order. The
/// macro average skips Normal unless `include_normal`, and skips classes that
/// are neither present nor predicted.
inline EvalReport compute_metrics(std::span<const std::string> truth, std::span<const std::string> predicted,
                                  std::vector<std::string> class_order = {}, bool include_normal = false) {
  if (truth.size() != predicted.size())
    throw ValidationError("truth and prediction lengths differ (" + std::to_string(truth.size()) + " vs " +
                          std::to_string(predicted.size()) + ")");
  if (truth.empty()) throw ValidationError("cannot compute metrics on zero samples");

  EvalReport r;
  r.classes = std::move(class_order);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < r.classes.size(); ++i) index.emplace(r.classes[i], i);
  std::vector<std::string> extra;
  for (auto* side : {&truth, &predicted})
    for (const auto& s : *side)
      if (!index.contains(s) && std::find(extra.begin(), extra.end(), s) == extra.end()) extra.push_back(s);
  std::sort(extra.begin(), extra.end());
  for (auto& s : extra) {
    index.emplace(s, r.classes.size());
    r.classes.push_back(std::move(s));
  }

  const auto k = r.classes.size();
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) ++r.confusion[index.at(truth[i])][index.at(predicted[i])];

  r.total = truth.size();
  std::size_t correct = 0, sum_support = 0, sum_predicted = 0;
  r.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& m = r.per_class[c];
    m.name = r.classes[c];
    m.tp = r.confusion[c][c];
    for (std::size_t j = 0; j < k; ++j) {
      m.support += r.confusion[c][j];
      m.predicted += r.confusion[j][c];
    }
    m.precision = detail::ratio_or_zero(m.tp, m.predicted, m.precision_undefined);
    m.recall = detail::ratio_or_zero(m.tp, m.support, m.recall_undefined);
    m.f1 = detail::harmonic(m.precision, m.recall, m.f1_undefined);
    correct += m.tp;
    sum_support += m.support;
    sum_predicted += m.predicted;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  bool unused = false;
  r.micro.precision = detail::ratio_or_zero(correct, sum_predicted, unused);
  r.micro.recall = detail::ratio_or_zero(correct, sum_support, unused);
  r.micro.f1 = detail::harmonic(r.micro.precision, r.micro.recall, unused);

  r.macro_includes_normal = include_normal;
  std::size_t counted = 0;
  for (const auto& m : r.per_class) {
    if (!include_normal && m.name == kNormalLabel) continue;
    if (m.support == 0 && m.predicted == 0) continue;
    r.macro.precision += m.precision;
    r.macro.recall += m.recall;
    r.macro.f1 += m.f1;
    ++counted;
  }
  if (counted > 0) {
    r.macro.precision /= static_cast<double>(counted);
    r.macro.recall /= static_cast<double>(counted);
    r.macro.f1 /= static_cast<double>(counted);
  }
  return r;
}

/// Collapses every non-Normal name to `attack_name`.
inline std::vector<std::string> binarize(std::span<const std::string> labels, const std::string& attack_name = "Attack") {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const auto& s : labels) out.push_back(s == kNormalLabel ? std::string(kNormalLabel) : attack_name);
  return out;
}

// ---- emission --------------------------------------------------------------

enum class ReportFormat { json, csv, text_table };

inline ReportFormat report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "text" || s == "text_table") return ReportFormat::text_table;
  throw ValidationError("unknown report format '" + std::string(s) + "'");
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  using J = nlohmann::ordered_json;
  J j;
  j["model"] = r.model;
  j["dataset"] = r.dataset;
  j["mode"] = r.mode;
  j["descriptors"] = r.descriptors;
  j["seeds"] = J::object();
  for (const auto& [k, v] : r.seeds) j["seeds"][k] = v;
  j["classes"] = r.classes;
  j["confusion"] = r.confusion;
  j["per_class"] = J::array();
  for (const auto& m : r.per_class) {
    J undefined = J::array();
    if (m.precision_undefined) undefined.push_back("precision");
    if (m.recall_undefined) undefined.push_back("recall");
    if (m.f1_undefined) undefined.push_back("f1");
    j["per_class"].push_back({{"class", m.name},
                              {"support", m.support},
                              {"predicted", m.predicted},
                              {"tp", m.tp},
                              {"precision", m.precision},
                              {"recall", m.recall},
                              {"f1", m.f1},
                              {"undefined", undefined}});
  }
  j["macro"] = {{"includes_normal", r.macro_includes_normal},
                {"precision", r.macro.precision},
                {"recall", r.macro.recall},
                {"f1", r.macro.f1}};
  j["micro"] = {{"precision", r.micro.precision}, {"recall", r.micro.recall}, {"f1", r.micro.f1}};
  j["accuracy"] = r.accuracy;
  j["total"] = r.total;
  return j;
}

/// One document for a set of reports. Timings of every report are gathered
/// in the top-level "timings" object, keyed by model name.
inline nlohmann::ordered_json reports_to_json(std::span<const EvalReport> reports) {
  nlohmann::ordered_json doc;
  doc["schema"] = "canids-report";
  doc["version"] = kReportSchemaVersion;
  doc["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) doc["reports"].push_back(report_to_json(r));
  doc["timings"] = nlohmann::ordered_json::object();
  for (const auto& r : reports) doc["timings"][r.model + "/" + r.mode] = r.timings;
  return doc;
}

namespace detail {

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace detail

inline void emit_reports(std::span<const EvalReport> reports, ReportFormat format, std::ostream& out) {
  switch (format) {
    case ReportFormat::json:
      out << reports_to_json(reports).dump(2) << '\n';
      return;
    case ReportFormat::csv:
      out << "model,mode,class,support,predicted,tp,precision,recall,f1,undefined\n";
      for (const auto& r : reports)
        for (const auto& m : r.per_class) {
          std::string undef;
          if (m.precision_undefined) undef += "p";
          if (m.recall_undefined) undef += "r";
          if (m.f1_undefined) undef += "f";
          out << detail::csv_escape(r.model) << ',' << r.mode << ',' << detail::csv_escape(m.name) << ',' << m.support
              << ',' << m.predicted << ',' << m.tp << ',' << detail::fixed4(m.precision) << ','
              << detail::fixed4(m.recall) << ',' << detail::fixed4(m.f1) << ',' << undef << '\n';
        }
      return;
    case ReportFormat::text_table: {
      std::size_t wm = 5, wc = 5;
      for (const auto& r : reports) {
        wm = std::max(wm, r.model.size() + r.mode.size() + 3);
        for (const auto& m : r.per_class) wc = std::max(wc, m.name.size());
      }
      auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(w, s.size()), ' ');
        return s;
      };
      out << pad("Model", wm) << "  " << pad("Class", wc) << "  Precision  Recall     F1-score   Support\n";
      out << std::string(wm + wc + 43, '-') << '\n';
      for (const auto& r : reports) {
        const auto label = r.model + " (" + r.mode + ")";
        for (const auto& m : r.per_class) {
          if (m.support == 0 && m.predicted == 0) continue;
          out << pad(label, wm) << "  " << pad(m.name, wc) << "  " << pad(detail::fixed4(m.precision), 9) << "  "
              << pad(detail::fixed4(m.recall), 9) << "  " << pad(detail::fixed4(m.f1), 9) << "  " << m.support
              << '\n';
        }
        out << pad(label, wm) << "  " << pad("macro", wc) << "  " << pad(detail::fixed4(r.macro.precision), 9)
            << "  " << pad(detail::fixed4(r.macro.recall), 9) << "  " << pad(detail::fixed4(r.macro.f1), 9) << "  "
            << r.total << '\n';
      }
      return;
    }
  }
}

inline void emit_report(const EvalReport& report, ReportFormat format, std::ostream& out) {
  emit_reports(std::span<const EvalReport>(&report, 1), format, out);
}

}  // namespace canids
