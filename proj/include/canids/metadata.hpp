#pragma once

// Capture metadata: attack intervals, injected ids and data patterns, and the
// labeling pass that turns an unlabeled capture into ground truth.

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canids/core.hpp"

namespace canids {

/// Up to 16 nibbles, each a fixed hex digit or the wildcard 'X'. Position i
/// refers to nibble i of the payload rendered as hex, most significant first.
class NibblePattern {
 public:
  NibblePattern() = default;

  explicit NibblePattern(std::string_view text) {
    if (text.size() > 2 * kMaxDlc) throw ValidationError("data pattern longer than 16 nibbles");
    for (char c : text) {
      if (c == 'X' || c == 'x') {
        nibbles_.push_back(kWild);
      } else {
        const int v = hex_digit_value(c);
        if (v < 0) throw ValidationError("invalid character '" + std::string(1, c) + "' in data pattern");
        nibbles_.push_back(static_cast<std::int8_t>(v));
      }
    }
  }

  static NibblePattern exact(std::span<const std::uint8_t> bytes) { return NibblePattern(to_hex(bytes)); }

  std::size_t size() const { return nibbles_.size(); }
  bool is_wildcard(std::size_t i) const { return nibbles_[i] == kWild; }
  int nibble(std::size_t i) const { return nibbles_[i]; }

  /// True when every fixed nibble equals the corresponding payload nibble. A
  /// fixed nibble past the end of the payload never matches.
  bool matches(std::span<const std::uint8_t> data) const {
    for (std::size_t i = 0; i < nibbles_.size(); ++i) {
      if (nibbles_[i] == kWild) continue;
      if (i / 2 >= data.size()) return false;
      const int v = (i % 2 == 0) ? data[i / 2] >> 4 : data[i / 2] & 0xF;
      if (v != nibbles_[i]) return false;
    }
    return true;
  }

  /// Fixed nibbles overwrite `base`; wildcard nibbles keep base's value.
  /// Nibbles beyond base's length extend the payload (wildcards there become 0).
  std::vector<std::uint8_t> apply(std::span<const std::uint8_t> base) const {
    std::vector<std::uint8_t> out(base.begin(), base.end());
    const auto needed = (nibbles_.size() + 1) / 2;
    if (out.size() < needed) out.resize(needed, 0);
    for (std::size_t i = 0; i < nibbles_.size(); ++i) {
      if (nibbles_[i] == kWild) continue;
      auto& b = out[i / 2];
      b = (i % 2 == 0) ? static_cast<std::uint8_t>((b & 0x0F) | (nibbles_[i] << 4))
                       : static_cast<std::uint8_t>((b & 0xF0) | nibbles_[i]);
    }
    return out;
  }

  std::string to_string() const {
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string s;
    for (auto n : nibbles_) s.push_back(n == kWild ? 'X' : digits[n]);
    return s;
  }

  friend bool operator==(const NibblePattern&, const NibblePattern&) = default;

 private:
  static constexpr std::int8_t kWild = -1;
  std::vector<std::int8_t> nibbles_;
};

struct AttackMetadata {
  Timestamp start;
  Timestamp end;
  std::optional<std::uint32_t> injection_id;  // nullopt = any id
  NibblePattern data_pattern;
  std::string attack_class;

  /// Closed interval on both ends.
  bool matches(const CanFrame& f) const {
    return f.timestamp() >= start && f.timestamp() <= end &&
           (!injection_id || *injection_id == f.id()) && data_pattern.matches(f.data());
  }
};

inline void validate(const AttackMetadata& m) {
  if (m.start > m.end) throw ValidationError("metadata interval start after end");
  if (m.attack_class.empty() || m.attack_class == kNormalLabel)
    throw ValidationError("metadata attack_class must name an attack");
}

/// Labels each frame with the class of the matching metadata entry, Normal
/// when none matches. Two entries assigning different classes to the same
/// frame is an error.
inline LabeledLog apply_metadata_labels(const TrafficLog& log, const std::vector<AttackMetadata>& metadata,
                                        LabelSpace label_space = LabelSpace::road()) {
  for (const auto& m : metadata) {
    validate(m);
    label_space.add(m.attack_class);
  }
  LabeledLog out;
  out.label_space = std::move(label_space);
  out.frames.reserve(log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& f = log.frames[i];
    const AttackMetadata* hit = nullptr;
    for (const auto& m : metadata) {
      if (!m.matches(f)) continue;
      if (hit && hit->attack_class != m.attack_class)
        throw ValidationError("ambiguous metadata for frame " + std::to_string(i) + " (" +
                              f.timestamp().to_string() + "): '" + hit->attack_class + "' vs '" +
                              m.attack_class + "'");
      hit = &m;
    }
    out.frames.push_back({f, hit ? AttackClass{hit->attack_class} : AttackClass::normal()});
  }
  return out;
}

inline LabeledLog apply_metadata_labels(const LabeledLog& log, const std::vector<AttackMetadata>& metadata) {
  return apply_metadata_labels(strip_labels(log), metadata, log.label_space);
}

// JSON form:
//   {"attacks": [{"injection_interval": [s, e], "injection_id": "0D0" | "XXX",
//                 "injection_data_str": "XXXXFFXX...", "attack_class": "..."}]}
// A bare array of entries is accepted on input.

inline nlohmann::ordered_json metadata_to_json(const AttackMetadata& m) {
  char id[16] = "XXX";
  if (m.injection_id) std::snprintf(id, sizeof id, *m.injection_id < kStandardIdLimit ? "%03X" : "%08X", *m.injection_id);
  nlohmann::ordered_json j;
  j["injection_interval"] = {m.start.seconds(), m.end.seconds()};
  j["injection_id"] = id;
  j["injection_data_str"] = m.data_pattern.to_string();
  j["attack_class"] = m.attack_class;
  return j;
}

inline AttackMetadata metadata_from_json(const nlohmann::json& j) {
  try {
    AttackMetadata m;
    const auto& iv = j.at("injection_interval");
    if (!iv.is_array() || iv.size() != 2) throw ValidationError("injection_interval must be [start, end]");
    m.start = Timestamp::from_seconds(iv[0].get<double>());
    m.end = Timestamp::from_seconds(iv[1].get<double>());
    const auto& id = j.at("injection_id");
    if (id.is_number_unsigned()) {
      m.injection_id = id.get<std::uint32_t>();
    } else {
      const auto s = id.get<std::string>();
      if (s.find_first_not_of("Xx") != std::string::npos) {
        const auto v = parse_hex_u32(s);
        if (!v || *v >= kExtendedIdLimit) throw ValidationError("invalid injection_id '" + s + "'");
        m.injection_id = *v;
      }
    }
    m.data_pattern = NibblePattern(j.value("injection_data_str", std::string{}));
    m.attack_class = j.at("attack_class").get<std::string>();
    validate(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("metadata entry: ") + e.what());
  }
}

inline std::vector<AttackMetadata> read_metadata(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("metadata JSON: ") + e.what());
  }
  const auto& list = doc.is_array() ? doc : doc.at("attacks");
  std::vector<AttackMetadata> out;
  for (const auto& e : list) out.push_back(metadata_from_json(e));
  return out;
}

inline void write_metadata(const std::vector<AttackMetadata>& metadata, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["attacks"] = nlohmann::ordered_json::array();
  for (const auto& m : metadata) doc["attacks"].push_back(metadata_to_json(m));
  out << doc.dump(2) << '\n';
}

}  // namespace canids
