#pragma once

// Tabular CAN datasets (HCRL Car-Hacking, IVN challenge, and the workbench's
// own labeled-frame files) described by a column schema.

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canids/core.hpp"

namespace canids {

namespace detail {

/// Splits one CSV record. Double-quoted fields may contain commas.
inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::optional<std::uint64_t> parse_uint(std::string_view s, bool hex) {
  s = trim(s);
  if (hex && s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, hex ? 16 : 10);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// How the payload bytes are laid out in a row.
enum class DataLayout {
  byte_columns,  // one column per byte starting at data_col
  hex_string,    // one column, contiguous hex ("04B7EC04")
  spaced_hex,    // one column, space separated ("04 B7 EC 04")
};

struct CsvSchema {
  bool has_header = true;
  int timestamp_col = 0;
  int id_col = 1;
  int dlc_col = 2;       // -1 when absent; dlc then follows the payload
  int channel_col = -1;  // -1: channel comes from default_channel
  int data_col = 3;
  DataLayout data_layout = DataLayout::byte_columns;
  /// byte_columns only: number of byte columns when not driven by dlc.
  int byte_columns = 8;
  /// byte_columns only: the row holds exactly dlc byte columns.
  bool dlc_driven = false;
  /// -1: no label column; -2: label immediately follows the payload columns.
  int label_col = -1;
  bool id_hex = true;
  bool bytes_hex = true;
  bool dlc_hex = false;
  std::string default_channel = "can0";
  /// Ids written with more than three hex digits are extended-format even when
  /// the value fits 11 bits (candump convention). Otherwise format follows value.
  bool id_width_selects_format = false;
  /// Raw label value -> class name. Empty map: raw values are class names.
  std::map<std::string, std::string, std::less<>> label_map;
  LabelSpace label_space;

  /// Label right after the last payload column.
  static constexpr int kLabelFollowsData = -2;

  void validate() const {
    if (timestamp_col < 0 || id_col < 0) throw ValidationError("schema needs timestamp and id columns");
    if (data_layout == DataLayout::byte_columns && !dlc_driven && (byte_columns < 0 || byte_columns > 8))
      throw ValidationError("schema byte columns must number at most 8");
    if (dlc_driven && dlc_col < 0) throw ValidationError("dlc-driven layout needs a dlc column");
  }

  /// HCRL Car-Hacking CSV: Timestamp,ID,DLC,D0..D{dlc-1},Flag with Flag T
  /// (injected) or R (regular). No header.
  static CsvSchema hcrl(std::string attack_class) {
    CsvSchema s;
    s.has_header = false;
    s.dlc_driven = true;
    s.label_col = kLabelFollowsData;
    s.label_space = LabelSpace::hcrl();
    s.label_space.add(attack_class);
    s.label_map = {{"T", attack_class}, {"R", std::string(kNormalLabel)}};
    return s;
  }

  /// IVN challenge CSV: Timestamp,Arbitration_ID,DLC,Data,Class,SubClass.
  static CsvSchema ivn() {
    CsvSchema s;
    s.data_layout = DataLayout::spaced_hex;
    s.label_col = 5;
    s.label_space = LabelSpace::ivn();
    s.label_map = {{"Normal", "Normal"}, {"Flooding", "Flooding"}, {"Fuzzy", "Fuzzy"}, {"Malfunction", "Malfunction"}};
    return s;
  }

  /// The workbench's labeled-frame file: timestamp,channel,id,dlc,data,label.
  static CsvSchema workbench() {
    CsvSchema s;
    s.timestamp_col = 0;
    s.channel_col = 1;
    s.id_col = 2;
    s.dlc_col = 3;
    s.data_col = 4;
    s.data_layout = DataLayout::hex_string;
    s.label_col = 5;
    s.id_width_selects_format = true;
    s.label_space = LabelSpace{};
    return s;
  }
};

inline CsvSchema schema_from_json(const nlohmann::json& j) {
  CsvSchema s;
  try {
    if (j.contains("preset")) {
      const auto p = j.at("preset").get<std::string>();
      if (p == "hcrl") s = CsvSchema::hcrl(j.value("attack_class", std::string("DoS Attack")));
      else if (p == "ivn") s = CsvSchema::ivn();
      else if (p == "workbench") s = CsvSchema::workbench();
      else throw ValidationError("unknown schema preset '" + p + "'");
    }
    s.has_header = j.value("has_header", s.has_header);
    s.timestamp_col = j.value("timestamp_col", s.timestamp_col);
    s.id_col = j.value("id_col", s.id_col);
    s.dlc_col = j.value("dlc_col", s.dlc_col);
    s.channel_col = j.value("channel_col", s.channel_col);
    s.data_col = j.value("data_col", s.data_col);
    s.byte_columns = j.value("byte_columns", s.byte_columns);
    s.dlc_driven = j.value("dlc_driven", s.dlc_driven);
    if (j.contains("label_col")) {
      const auto& l = j.at("label_col");
      s.label_col = l.is_string() && l.get<std::string>() == "after_data" ? CsvSchema::kLabelFollowsData : l.get<int>();
    }
    s.id_hex = j.value("id_hex", s.id_hex);
    s.bytes_hex = j.value("bytes_hex", s.bytes_hex);
    s.dlc_hex = j.value("dlc_hex", s.dlc_hex);
    s.default_channel = j.value("default_channel", s.default_channel);
    if (j.contains("data_layout")) {
      const auto d = j.at("data_layout").get<std::string>();
      if (d == "byte_columns") s.data_layout = DataLayout::byte_columns;
      else if (d == "hex_string") s.data_layout = DataLayout::hex_string;
      else if (d == "spaced_hex") s.data_layout = DataLayout::spaced_hex;
      else throw ValidationError("unknown data_layout '" + d + "'");
    }
    if (j.contains("label_map")) {
      s.label_map.clear();
      for (auto& [k, v] : j.at("label_map").items()) s.label_map[k] = v.get<std::string>();
    }
    if (j.contains("label_space")) {
      const auto& ls = j.at("label_space");
      if (ls.is_string()) {
        auto b = LabelSpace::builtin(ls.get<std::string>());
        if (!b) throw ValidationError("unknown label space '" + ls.get<std::string>() + "'");
        s.label_space = *b;
      } else {
        s.label_space = LabelSpace{};
        for (const auto& n : ls) s.label_space.add(n.get<std::string>());
      }
    }
    for (const auto& [raw, cls] : s.label_map) s.label_space.add(cls);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("schema JSON: ") + e.what());
  }
  s.validate();
  return s;
}

/// Parses a labeled CSV dataset. Errors carry the 1-based row index (the
/// header, when present, is row 1).
inline LabeledLog parse_csv_dataset(std::istream& in, const CsvSchema& schema) {
  schema.validate();
  LabeledLog out;
  out.label_space = schema.label_space;
  std::string line;
  std::size_t row = 0;
  if (schema.has_header && std::getline(in, line)) ++row;

  auto col = [&](const std::vector<std::string>& cells, int idx, const char* what) -> std::string_view {
    if (idx < 0 || static_cast<std::size_t>(idx) >= cells.size())
      throw ParseError(row, std::string("row arity mismatch: missing ") + what + " column");
    return detail::trim(cells[static_cast<std::size_t>(idx)]);
  };

  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);

    const auto ts = parse_timestamp(col(cells, schema.timestamp_col, "timestamp"), false);
    if (!ts) throw ParseError(row, "unparseable timestamp");
    const auto id_text = col(cells, schema.id_col, "id");
    const auto id = detail::parse_uint(id_text, schema.id_hex);
    if (!id || *id >= kExtendedIdLimit) throw ParseError(row, "unparseable id '" + std::string(id_text) + "'");

    std::optional<std::size_t> dlc;
    if (schema.dlc_col >= 0) {
      const auto v = detail::parse_uint(col(cells, schema.dlc_col, "dlc"), schema.dlc_hex);
      if (!v || *v > kMaxDlc) throw ParseError(row, "invalid dlc");
      dlc = static_cast<std::size_t>(*v);
    }

    std::vector<std::uint8_t> data;
    int last_data_col = schema.data_col;
    switch (schema.data_layout) {
      case DataLayout::byte_columns: {
        const int n = schema.dlc_driven ? static_cast<int>(*dlc) : schema.byte_columns;
        for (int k = 0; k < n; ++k) {
          const auto cell = col(cells, schema.data_col + k, "data byte");
          if (cell.empty() && !schema.dlc_driven) continue;
          const auto v = detail::parse_uint(cell, schema.bytes_hex);
          if (!v || *v > 0xFF) throw ParseError(row, "unparseable data byte '" + std::string(cell) + "'");
          data.push_back(static_cast<std::uint8_t>(*v));
        }
        last_data_col = schema.data_col + n - 1;
        break;
      }
      case DataLayout::hex_string: {
        const auto cell = col(cells, schema.data_col, "data");
        if (cell.size() % 2 != 0) throw ParseError(row, "odd-length data hex");
        for (std::size_t k = 0; k < cell.size(); k += 2) {
          const auto v = detail::parse_uint(cell.substr(k, 2), true);
          if (!v) throw ParseError(row, "unparseable data hex");
          data.push_back(static_cast<std::uint8_t>(*v));
        }
        break;
      }
      case DataLayout::spaced_hex: {
        auto cell = col(cells, schema.data_col, "data");
        while (!cell.empty()) {
          const auto sp = cell.find(' ');
          const auto tok = cell.substr(0, sp);
          if (!tok.empty()) {
            const auto v = detail::parse_uint(tok, schema.bytes_hex);
            if (!v || *v > 0xFF) throw ParseError(row, "unparseable data byte '" + std::string(tok) + "'");
            data.push_back(static_cast<std::uint8_t>(*v));
          }
          cell = sp == std::string_view::npos ? std::string_view{} : cell.substr(sp + 1);
        }
        break;
      }
    }
    if (data.size() > kMaxDlc) throw ParseError(row, "dlc exceeds 8");
    if (dlc) {
      if (data.size() < *dlc) throw ParseError(row, "fewer data bytes than dlc");
      data.resize(*dlc);  // bytes beyond dlc are not part of the frame
    }

    const int label_idx = schema.label_col == CsvSchema::kLabelFollowsData ? last_data_col + 1 : schema.label_col;
    const int expected_arity = std::max({schema.timestamp_col, schema.id_col, schema.dlc_col, schema.channel_col,
                                         last_data_col, label_idx}) + 1;
    if (schema.label_col == CsvSchema::kLabelFollowsData && static_cast<int>(cells.size()) != expected_arity)
      throw ParseError(row, "row arity mismatch: expected " + std::to_string(expected_arity) + " fields, got " +
                                std::to_string(cells.size()));
    if (static_cast<int>(cells.size()) < expected_arity)
      throw ParseError(row, "row arity mismatch: expected at least " + std::to_string(expected_arity) + " fields");

    AttackClass label = AttackClass::normal();
    if (label_idx >= 0) {
      const auto raw = col(cells, label_idx, "label");
      std::string name;
      if (raw.empty()) throw ParseError(row, "missing label");
      if (schema.label_map.empty()) {
        name = std::string(raw);
      } else {
        auto it = schema.label_map.find(raw);
        if (it == schema.label_map.end()) throw ParseError(row, "unknown label '" + std::string(raw) + "'");
        name = it->second;
      }
      if (!out.label_space.contains(name)) {
        if (schema.label_map.empty()) out.label_space.add(name);
        else throw ParseError(row, "label '" + name + "' not in label space");
      }
      label = AttackClass{name};
    }

    std::string channel = schema.channel_col >= 0 ? std::string(col(cells, schema.channel_col, "channel"))
                                                  : schema.default_channel;
    const auto format = (schema.id_width_selects_format && id_text.size() > 3) || *id >= kStandardIdLimit
                            ? IdFormat::extended
                            : IdFormat::standard;
    try {
      out.frames.push_back({CanFrame(*ts, std::move(channel), static_cast<std::uint32_t>(*id), format, data), label});
    } catch (const ValidationError& e) {
      throw ParseError(row, e.what());
    }
  }
  return out;
}

/// Writes frames in the workbench schema. Unlabeled logs get an empty label column.
template <class Frame>
void write_frames_csv(const BasicTrafficLog<Frame>& log, std::ostream& out) {
  out << "timestamp,channel,id,dlc,data,label\n";
  for (const auto& item : log.frames) {
    const CanFrame& f = frame_of(item);
    char id[16];
    std::snprintf(id, sizeof id, f.id_format() == IdFormat::standard ? "%03X" : "%08X", f.id());
    out << f.timestamp().to_string() << ',' << detail::csv_escape(f.channel()) << ',' << id << ',' << f.dlc() << ','
        << to_hex(f.data()) << ',';
    if constexpr (std::is_same_v<Frame, LabeledFrame>) out << detail::csv_escape(item.label.name);
    out << '\n';
  }
}

}  // namespace canids
