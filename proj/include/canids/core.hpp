#pragma once

// CAN domain types shared by every stage of the workbench.

#include <algorithm>
#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "canids/error.hpp"

namespace canids {

inline constexpr std::size_t kIdBits = 29;
inline constexpr std::size_t kMaxDlc = 8;
inline constexpr std::uint32_t kStandardIdLimit = 1u << 11;
inline constexpr std::uint32_t kExtendedIdLimit = 1u << 29;

/// Point in time with microsecond resolution. Stored as an integer so that
/// text round trips are exact.
struct Timestamp {
  std::int64_t micros = 0;

  static constexpr Timestamp from_micros(std::int64_t us) { return Timestamp{us}; }
  static Timestamp from_seconds(double s) {
    return Timestamp{static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))};
  }

  double seconds() const { return static_cast<double>(micros) / 1e6; }

  /// Renders as "<seconds>.<6 digits>".
  std::string to_string() const {
    char buf[32];
    const auto whole = micros / 1'000'000;
    const auto frac = micros % 1'000'000;
    std::snprintf(buf, sizeof buf, "%lld.%06lld", static_cast<long long>(whole),
                  static_cast<long long>(frac));
    return buf;
  }

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;
  friend constexpr Timestamp operator+(Timestamp t, std::int64_t us) { return Timestamp{t.micros + us}; }
  friend constexpr std::int64_t operator-(Timestamp a, Timestamp b) { return a.micros - b.micros; }
};

/// Parses a non-negative decimal seconds value. With `strict`, more than six
/// fractional digits is an error; otherwise extra digits are rounded half-up.
inline std::optional<Timestamp> parse_timestamp(std::string_view text, bool strict = true) {
  if (text.empty()) return std::nullopt;
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty()) return std::nullopt;
  std::int64_t w = 0;
  for (char c : whole) {
    if (c < '0' || c > '9') return std::nullopt;
    if (w > (INT64_MAX - 9) / 10 / 1'000'000) return std::nullopt;
    w = w * 10 + (c - '0');
  }
  for (char c : frac)
    if (c < '0' || c > '9') return std::nullopt;
  if (dot != std::string_view::npos && frac.empty()) return std::nullopt;
  std::int64_t f = 0;
  bool round_up = false;
  if (frac.size() > 6) {
    if (strict) return std::nullopt;
    round_up = frac[6] >= '5';
    frac = frac.substr(0, 6);
  }
  for (std::size_t i = 0; i < 6; ++i) f = f * 10 + (i < frac.size() ? frac[i] - '0' : 0);
  return Timestamp{w * 1'000'000 + f + (round_up ? 1 : 0)};
}

enum class IdFormat : std::uint8_t { standard, extended };

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::optional<std::uint32_t> parse_hex_u32(std::string_view text) {
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) text.remove_prefix(2);
  if (text.empty() || text.size() > 8) return std::nullopt;
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

inline int hex_digit_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

/// One classical CAN data frame.
class CanFrame {
 public:
  using Payload = std::array<std::uint8_t, kMaxDlc>;

  CanFrame() = default;

  /// Throws ValidationError when the identifier does not fit its format or
  /// the payload is longer than 8 bytes.
  CanFrame(Timestamp ts, std::string channel, std::uint32_t id, IdFormat format,
           std::span<const std::uint8_t> data)
      : ts_(ts), channel_(std::move(channel)), id_(id), format_(format) {
    if (ts.micros < 0) throw ValidationError("negative timestamp");
    const auto limit = format == IdFormat::standard ? kStandardIdLimit : kExtendedIdLimit;
    if (id >= limit)
      throw ValidationError(format == IdFormat::standard ? "id exceeds 11 bits" : "id exceeds 29 bits");
    if (data.size() > kMaxDlc) throw ValidationError("dlc exceeds 8");
    dlc_ = static_cast<std::uint8_t>(data.size());
    std::copy(data.begin(), data.end(), data_.begin());
  }

  /// Standard-format frame when the id fits 11 bits, extended otherwise.
  static CanFrame make(Timestamp ts, std::uint32_t id, std::span<const std::uint8_t> data,
                       std::string channel = "can0") {
    return CanFrame(ts, std::move(channel), id,
                    id < kStandardIdLimit ? IdFormat::standard : IdFormat::extended, data);
  }

  Timestamp timestamp() const { return ts_; }
  const std::string& channel() const { return channel_; }
  std::uint32_t id() const { return id_; }
  IdFormat id_format() const { return format_; }
  std::size_t dlc() const { return dlc_; }
  std::span<const std::uint8_t> data() const { return {data_.data(), dlc_}; }
  /// Payload zero-padded to 8 bytes.
  const Payload& padded_data() const { return data_; }

  CanFrame with_timestamp(Timestamp ts) const {
    CanFrame f = *this;
    f.ts_ = ts;
    return f;
  }
  CanFrame with_data(std::span<const std::uint8_t> data) const {
    return CanFrame(ts_, channel_, id_, format_, data);
  }

  friend bool operator==(const CanFrame&, const CanFrame&) = default;

 private:
  Timestamp ts_{};
  std::string channel_ = "can0";
  std::uint32_t id_ = 0;
  IdFormat format_ = IdFormat::standard;
  std::uint8_t dlc_ = 0;
  Payload data_{};
};

inline constexpr std::string_view kNormalLabel = "Normal";

/// A ground-truth class. The only non-attack class is "Normal".
struct AttackClass {
  std::string name{kNormalLabel};

  bool is_attack() const { return name != kNormalLabel; }
  static AttackClass normal() { return {}; }

  friend bool operator==(const AttackClass&, const AttackClass&) = default;
};

/// Ordered registry of class names. "Normal" is always present at index 0.
class LabelSpace {
 public:
  LabelSpace() : names_{std::string(kNormalLabel)} {}
  LabelSpace(std::string name, std::initializer_list<std::string_view> attacks) : LabelSpace() {
    name_ = std::move(name);
    for (auto a : attacks) add(a);
  }

  const std::string& name() const { return name_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  bool contains(std::string_view n) const { return index_of(n).has_value(); }
  std::optional<std::size_t> index_of(std::string_view n) const {
    auto it = std::find(names_.begin(), names_.end(), n);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
  }

  /// Registers `n` if missing; returns its index.
  std::size_t add(std::string_view n) {
    if (n.empty()) throw ValidationError("empty class name");
    if (auto i = index_of(n)) return *i;
    names_.emplace_back(n);
    return names_.size() - 1;
  }

  /// Eleven metadata-labeled classes of the ROAD captures.
  static LabelSpace road() {
    return {"road",
            {"Correlated Signal Fabrication Attack", "Correlated Signal Masquerade Attack",
             "Fuzzing Attack", "Max Engine Coolant Temp Fabrication Attack",
             "Max Engine Coolant Temp Masquerade Attack", "Max Speedometer Fabrication Attack",
             "Max Speedometer Masquerade Attack", "Reverse Light Off Fabrication Attack",
             "Reverse Light Off Masquerade Attack", "Reverse Light On Fabrication Attack",
             "Reverse Light On Masquerade Attack"}};
  }
  static LabelSpace hcrl() {
    return {"hcrl", {"DoS Attack", "Fuzzing Attack", "Gear Spoofing Attack", "RPM Spoofing Attack"}};
  }
  static LabelSpace ivn() { return {"ivn", {"Flooding", "Fuzzy", "Malfunction"}}; }
  /// Default class names produced by the attack synthesizer.
  static LabelSpace synth() {
    return {"synth",
            {"DoS Attack", "Fuzzy Attack", "Spoofing Attack", "Fuzzing Attack", "Fabrication Attack",
             "Masquerade Attack"}};
  }
  static std::optional<LabelSpace> builtin(std::string_view name) {
    if (name == "road") return road();
    if (name == "hcrl") return hcrl();
    if (name == "ivn") return ivn();
    if (name == "synth") return synth();
    return std::nullopt;
  }

 private:
  std::string name_ = "custom";
  std::vector<std::string> names_;
};

struct LabeledFrame {
  CanFrame frame;
  AttackClass label;

  bool is_attack() const { return label.is_attack(); }
  friend bool operator==(const LabeledFrame&, const LabeledFrame&) = default;
};

inline const CanFrame& frame_of(const CanFrame& f) { return f; }
inline const CanFrame& frame_of(const LabeledFrame& f) { return f.frame; }

/// Time-ordered sequence of frames plus the label space in force.
template <class Frame>
struct BasicTrafficLog {
  std::vector<Frame> frames;
  LabelSpace label_space;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }

  bool is_time_sorted() const {
    return std::is_sorted(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) {
      return frame_of(a).timestamp() < frame_of(b).timestamp();
    });
  }

  /// Stable sort by timestamp.
  void sort_by_time() {
    std::stable_sort(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) {
      return frame_of(a).timestamp() < frame_of(b).timestamp();
    });
  }
};

using TrafficLog = BasicTrafficLog<CanFrame>;
using LabeledLog = BasicTrafficLog<LabeledFrame>;

inline LabeledLog label_all_normal(const TrafficLog& log) {
  LabeledLog out;
  out.label_space = log.label_space;
  out.frames.reserve(log.size());
  for (const auto& f : log.frames) out.frames.push_back({f, AttackClass::normal()});
  return out;
}

inline TrafficLog strip_labels(const LabeledLog& log) {
  TrafficLog out;
  out.label_space = log.label_space;
  out.frames.reserve(log.size());
  for (const auto& f : log.frames) out.frames.push_back(f.frame);
  return out;
}

using IdBits = std::array<std::uint8_t, kIdBits>;

/// Identifier as 29 bits, most significant first. 11-bit ids occupy the low
/// positions with 18 leading zeros.
inline IdBits id_bits(const CanFrame& frame) {
  IdBits bits{};
  const auto id = frame.id();
  for (std::size_t i = 0; i < kIdBits; ++i) bits[i] = (id >> (kIdBits - 1 - i)) & 1u;
  return bits;
}

inline std::uint32_t id_from_bits(const IdBits& bits) {
  std::uint32_t id = 0;
  for (auto b : bits) id = (id << 1) | (b & 1u);
  return id;
}

/// Frame that wins bus arbitration: smallest id, earliest timestamp on ties.
inline const CanFrame& arbitration_winner(std::span<const CanFrame> frames) {
  if (frames.empty()) throw ValidationError("empty arbitration set");
  const CanFrame* best = &frames.front();
  for (const auto& f : frames.subspan(1)) {
    if (f.id() < best->id() || (f.id() == best->id() && f.timestamp() < best->timestamp())) best = &f;
  }
  return *best;
}

}  // namespace canids
