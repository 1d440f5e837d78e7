#pragma once

// Surrogate ambient traffic and the attack injectors: DoS, fuzzy, targeted
// spoofing, max-payload fuzzing, fabrication (flam delivery) and masquerade.
// Every injector returns a time-sorted labeled log whose labels are ground
// truth by construction.

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canids/core.hpp"
#include "canids/metadata.hpp"
#include "canids/rng.hpp"

namespace canids {

/// Delay between a legitimate frame and its forged follower.
inline constexpr std::int64_t kFlamDelayMicros = 1;

inline constexpr double kDosPeriod = 0.0003;
inline constexpr double kFuzzyPeriod = 0.0005;
inline constexpr double kSpoofPeriod = 0.001;

struct Interval {
  Timestamp start;
  Timestamp end;

  static Interval seconds(double s, double e) { return {Timestamp::from_seconds(s), Timestamp::from_seconds(e)}; }
  std::int64_t length_micros() const { return end - start; }
  bool contains(Timestamp t) const { return t >= start && t <= end; }
};

struct PayloadModel {
  std::vector<std::uint8_t> base;  // dlc = base.size()
  std::vector<int> walk_bytes;     // positions doing a bounded random walk
  int walk_step = 0;
  std::vector<int> counter_bytes;  // positions incremented every frame
};

struct AmbientStream {
  std::uint32_t id = 0;
  IdFormat format = IdFormat::standard;
  double period = 0.01;
  double jitter_std = 0.0;
  std::optional<double> phase;  // drawn uniformly in [0, period) when absent
  PayloadModel payload;
};

struct AmbientModel {
  std::vector<AmbientStream> streams;
  double start = 0.0;
  double duration = 1.0;
  std::uint64_t seed = 0;
  std::string channel = "can0";

  void validate() const {
    if (!(duration > 0)) throw ValidationError("ambient duration must be positive");
    if (start < 0) throw ValidationError("ambient start must be non-negative");
    if (streams.empty()) throw ValidationError("ambient model needs at least one stream");
    for (const auto& s : streams) {
      if (!(s.period > 0)) throw ValidationError("stream period must be positive");
      if (s.jitter_std < 0) throw ValidationError("stream jitter_std must be non-negative");
      if (s.payload.base.size() > kMaxDlc) throw ValidationError("stream payload longer than 8 bytes");
      for (int b : s.payload.walk_bytes)
        if (b < 0 || static_cast<std::size_t>(b) >= s.payload.base.size()) throw ValidationError("walk byte out of range");
      for (int b : s.payload.counter_bytes)
        if (b < 0 || static_cast<std::size_t>(b) >= s.payload.base.size()) throw ValidationError("counter byte out of range");
    }
  }

  /// A plausible bus: `n_ids` distinct 11-bit ids above 0x03F, periods drawn
  /// from {10, 20, 50, 100} ms with 1% jitter, 8-byte payloads mixing
  /// constant, random-walk and counter bytes.
  static AmbientModel typical(std::size_t n_ids, double duration, std::uint64_t seed) {
    if (n_ids == 0 || n_ids > kStandardIdLimit - 0x40) throw ValidationError("typical ambient: bad id count");
    AmbientModel m;
    m.duration = duration;
    m.seed = seed;
    Rng rng(derive_seed(seed, "typical-ambient"));
    std::set<std::uint32_t> ids;
    while (ids.size() < n_ids) ids.insert(static_cast<std::uint32_t>(rng.between(0x040, 0x7FF)));
    static constexpr double periods[] = {0.01, 0.02, 0.05, 0.1};
    for (auto id : ids) {
      AmbientStream s;
      s.id = id;
      s.period = periods[rng.below(4)];
      s.jitter_std = 0.01 * s.period;
      s.payload.base.resize(8);
      for (auto& b : s.payload.base) b = static_cast<std::uint8_t>(rng.below(0xF0));
      s.payload.walk_bytes = {static_cast<int>(rng.below(4))};
      s.payload.walk_step = 2;
      s.payload.counter_bytes = {7};
      m.streams.push_back(std::move(s));
    }
    return m;
  }
};

/// Periodic ambient traffic: each stream emits at phase + k*period (+ jitter),
/// merged and stably sorted by time. Deterministic in the seed.
inline TrafficLog generate_ambient(const AmbientModel& model) {
  model.validate();
  const auto start_us = Timestamp::from_seconds(model.start).micros;
  const auto dur_us = Timestamp::from_seconds(model.duration).micros;
  TrafficLog log;
  for (std::size_t si = 0; si < model.streams.size(); ++si) {
    const auto& s = model.streams[si];
    Rng rng(derive_seed(model.seed, si));
    const auto period_us = std::max<std::int64_t>(1, std::llround(s.period * 1e6));
    const auto phase_us = s.phase ? std::llround(*s.phase * 1e6) : static_cast<std::int64_t>(rng.below(period_us));
    std::vector<std::uint8_t> payload = s.payload.base;
    for (std::int64_t k = 0;; ++k) {
      const auto nominal = phase_us + k * period_us;
      if (nominal >= dur_us) break;
      auto t = nominal;
      if (s.jitter_std > 0) t += std::llround(rng.normal() * s.jitter_std * 1e6);
      t = std::clamp<std::int64_t>(t, 0, dur_us - 1);
      if (k > 0) {
        for (int b : s.payload.walk_bytes) {
          const auto step = rng.between(-s.payload.walk_step, s.payload.walk_step);
          payload[b] = static_cast<std::uint8_t>(std::clamp<std::int64_t>(payload[b] + step, 0, 255));
        }
      }
      for (int b : s.payload.counter_bytes) payload[b] = static_cast<std::uint8_t>((s.payload.base[b] + k) & 0xFF);
      log.frames.emplace_back(Timestamp{start_us + t}, model.channel, s.id, s.format, payload);
    }
  }
  log.sort_by_time();
  return log;
}

enum class AttackKind { dos, fuzzy, targeted_spoof, fuzzing_max_payload, fabrication, masquerade };

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::dos: return "dos";
    case AttackKind::fuzzy: return "fuzzy";
    case AttackKind::targeted_spoof: return "targeted_spoof";
    case AttackKind::fuzzing_max_payload: return "fuzzing_max_payload";
    case AttackKind::fabrication: return "fabrication";
    case AttackKind::masquerade: return "masquerade";
  }
  return "?";
}

inline std::string default_attack_class(AttackKind k) {
  switch (k) {
    case AttackKind::dos: return "DoS Attack";
    case AttackKind::fuzzy: return "Fuzzy Attack";
    case AttackKind::targeted_spoof: return "Spoofing Attack";
    case AttackKind::fuzzing_max_payload: return "Fuzzing Attack";
    case AttackKind::fabrication: return "Fabrication Attack";
    case AttackKind::masquerade: return "Masquerade Attack";
  }
  return "Attack";
}

namespace detail {

inline LabeledLog merge_injected(const LabeledLog& base, std::vector<LabeledFrame> injected, std::string_view cls) {
  LabeledLog out = base;
  out.label_space.add(cls);
  out.frames.insert(out.frames.end(), std::make_move_iterator(injected.begin()),
                    std::make_move_iterator(injected.end()));
  out.sort_by_time();
  return out;
}

inline std::string channel_of(const LabeledLog& log) {
  return log.empty() ? std::string("can0") : log.frames.front().frame.channel();
}

inline std::int64_t period_micros(double period) {
  const auto us = std::llround(period * 1e6);
  if (!(period > 0) || us < 1) throw ValidationError("injection period must be at least 1 microsecond");
  return us;
}

/// Schedule start + k*period over the half-open interval [start, end).
template <class MakeFrame>
std::vector<LabeledFrame> periodic(const Interval& iv, double period, std::string_view cls, MakeFrame&& make) {
  std::vector<LabeledFrame> out;
  const auto p = period_micros(period);
  std::size_t k = 0;
  for (auto t = iv.start; t < iv.end; t = t + p, ++k) out.push_back({make(t, k), AttackClass{std::string(cls)}});
  return out;
}

}  // namespace detail

/// Frames with id 0x000 and an all-zero 8-byte payload every `period`.
inline LabeledLog inject_dos(const LabeledLog& ambient, const Interval& iv, double period = kDosPeriod,
                             std::string_view cls = "DoS Attack") {
  static constexpr std::array<std::uint8_t, 8> zeros{};
  const auto ch = detail::channel_of(ambient);
  return detail::merge_injected(
      ambient, detail::periodic(iv, period, cls, [&](Timestamp t, std::size_t) {
        return CanFrame(t, ch, 0x000, IdFormat::standard, zeros);
      }),
      cls);
}

struct FuzzyOptions {
  bool extended_ids = false;
  /// Draw ids that ambient traffic already uses. Off by default so injected
  /// frames remain identifiable from capture metadata.
  bool allow_ambient_ids = false;
};

/// Uniformly random ids and 8 random payload bytes every `period`.
inline LabeledLog inject_fuzzy(const LabeledLog& ambient, const Interval& iv, std::uint64_t seed,
                               double period = kFuzzyPeriod, std::string_view cls = "Fuzzy Attack",
                               FuzzyOptions opts = {}) {
  Rng rng(derive_seed(seed, "fuzzy"));
  std::set<std::uint32_t> used;
  if (!opts.allow_ambient_ids)
    for (const auto& f : ambient.frames) used.insert(f.frame.id());
  const std::uint32_t space = opts.extended_ids ? kExtendedIdLimit : kStandardIdLimit;
  if (used.size() >= space) throw ValidationError("fuzzy attack: no free identifiers");
  const auto ch = detail::channel_of(ambient);
  return detail::merge_injected(
      ambient, detail::periodic(iv, period, cls, [&](Timestamp t, std::size_t) {
        std::uint32_t id;
        do {
          id = static_cast<std::uint32_t>(rng.below(space));
        } while (used.contains(id));
        std::array<std::uint8_t, 8> data;
        for (auto& b : data) b = static_cast<std::uint8_t>(rng.below(256));
        return CanFrame(t, ch, id, opts.extended_ids ? IdFormat::extended : IdFormat::standard, data);
      }),
      cls);
}

/// Constant target id and payload every `period` (RPM/Gear style spoofing).
inline LabeledLog inject_targeted_spoof(const LabeledLog& ambient, std::uint32_t target_id,
                                        std::span<const std::uint8_t> payload, const Interval& iv,
                                        double period = kSpoofPeriod, std::string_view cls = "Spoofing Attack") {
  const auto ch = detail::channel_of(ambient);
  const std::vector<std::uint8_t> data(payload.begin(), payload.end());
  return detail::merge_injected(
      ambient, detail::periodic(iv, period, cls, [&](Timestamp t, std::size_t) {
        return CanFrame::make(t, target_id, data, ch);
      }),
      cls);
}

/// Cycles through `id_cycle` in order with an 8-byte 0xFF payload.
inline LabeledLog inject_fuzzing_max_payload(const LabeledLog& ambient, const Interval& iv,
                                             std::span<const std::uint32_t> id_cycle, double period,
                                             std::string_view cls = "Fuzzing Attack") {
  if (id_cycle.empty()) throw ValidationError("fuzzing attack needs a non-empty id cycle");
  static constexpr std::array<std::uint8_t, 8> ff{0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF};
  const auto ch = detail::channel_of(ambient);
  return detail::merge_injected(
      ambient, detail::periodic(iv, period, cls, [&](Timestamp t, std::size_t k) {
        return CanFrame::make(t, id_cycle[k % id_cycle.size()], ff, ch);
      }),
      cls);
}

/// One forged frame kFlamDelayMicros after every legitimate `target_id` frame
/// inside the closed interval. Fixed nibbles of `payload_spec` override the
/// legitimate payload; wildcard nibbles are copied from it.
inline LabeledLog inject_fabrication(const LabeledLog& ambient, std::uint32_t target_id,
                                     const NibblePattern& payload_spec, const Interval& iv,
                                     std::string_view cls = "Fabrication Attack") {
  std::vector<LabeledFrame> injected;
  for (const auto& f : ambient.frames) {
    if (f.frame.id() != target_id || f.is_attack() || !iv.contains(f.frame.timestamp())) continue;
    const auto data = payload_spec.apply(f.frame.data());
    if (data.size() > kMaxDlc) throw ValidationError("fabrication payload longer than 8 bytes");
    injected.push_back({f.frame.with_data(data).with_timestamp(f.frame.timestamp() + kFlamDelayMicros),
                        AttackClass{std::string(cls)}});
  }
  return detail::merge_injected(ambient, std::move(injected), cls);
}

/// Deletes the legitimate `target_id` frame preceding each injected one, so
/// only the forged frames remain inside the interval. Injected frames may be
/// relabeled with `cls` when given.
inline LabeledLog to_masquerade(const LabeledLog& fabricated, std::uint32_t target_id, const Interval& iv,
                                std::optional<std::string> cls = std::nullopt) {
  std::vector<bool> drop(fabricated.size(), false);
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < fabricated.size(); ++i) {
    const auto& f = fabricated.frames[i];
    if (f.frame.id() != target_id) continue;
    const auto t = f.frame.timestamp();
    if (f.is_attack() && t >= iv.start && t <= iv.end + kFlamDelayMicros && prev &&
        !fabricated.frames[*prev].is_attack())
      drop[*prev] = true;
    prev = i;
  }
  LabeledLog out;
  out.label_space = fabricated.label_space;
  if (cls) out.label_space.add(*cls);
  for (std::size_t i = 0; i < fabricated.size(); ++i) {
    if (drop[i]) continue;
    auto f = fabricated.frames[i];
    if (cls && f.is_attack() && f.frame.id() == target_id && f.frame.timestamp() >= iv.start &&
        f.frame.timestamp() <= iv.end + kFlamDelayMicros)
      f.label = AttackClass{*cls};
    out.frames.push_back(std::move(f));
  }
  return out;
}

/// Declarative injection campaign.
struct AttackScenario {
  AttackKind kind = AttackKind::dos;
  Interval interval;
  std::optional<std::uint32_t> target_id;
  NibblePattern payload_spec;
  std::optional<double> period;  // kind default when absent
  std::vector<std::uint32_t> id_cycle;
  std::optional<std::uint64_t> seed;
  std::string attack_class;  // kind default when empty
  FuzzyOptions fuzzy;

  std::string class_name() const { return attack_class.empty() ? default_attack_class(kind) : attack_class; }

  double effective_period() const {
    if (period) return *period;
    switch (kind) {
      case AttackKind::dos: return kDosPeriod;
      case AttackKind::fuzzy: return kFuzzyPeriod;
      case AttackKind::targeted_spoof: return kSpoofPeriod;
      case AttackKind::fuzzing_max_payload: return kSpoofPeriod;
      default: return 0.0;
    }
  }

  void validate() const {
    if (interval.start > interval.end) throw ValidationError("scenario interval start after end");
    const bool needs_target = kind == AttackKind::targeted_spoof || kind == AttackKind::fabrication ||
                              kind == AttackKind::masquerade;
    if (needs_target && !target_id) throw ValidationError(std::string(to_string(kind)) + " scenario needs target_id");
    if (kind == AttackKind::fuzzing_max_payload && id_cycle.empty())
      throw ValidationError("fuzzing_max_payload scenario needs id_cycle");
    if (period && !(*period > 0)) throw ValidationError("scenario period must be positive");
  }
};

inline AttackKind attack_kind_from_string(std::string_view s) {
  for (auto k : {AttackKind::dos, AttackKind::fuzzy, AttackKind::targeted_spoof, AttackKind::fuzzing_max_payload,
                 AttackKind::fabrication, AttackKind::masquerade})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown attack kind '" + std::string(s) + "'");
}

struct SynthResult {
  LabeledLog log;
  std::vector<AttackMetadata> metadata;
};

namespace detail {

inline std::vector<const LabeledFrame*> frames_labeled(const LabeledLog& log, std::string_view cls,
                                                       const std::vector<bool>& before) {
  std::vector<const LabeledFrame*> out;
  for (std::size_t i = 0; i < log.size(); ++i)
    if (log.frames[i].label.name == cls && !before[i]) out.push_back(&log.frames[i]);
  return out;
}

}  // namespace detail

/// Metadata entries describing the frames a scenario injected, in the form
/// consumed by apply_metadata_labels. `injected` are the frames it added.
inline std::vector<AttackMetadata> describe_injection(const AttackScenario& sc,
                                                      const std::vector<const LabeledFrame*>& injected) {
  if (injected.empty()) return {};
  Timestamp first = injected.front()->frame.timestamp(), last = first;
  for (auto* f : injected) {
    first = std::min(first, f->frame.timestamp());
    last = std::max(last, f->frame.timestamp());
  }
  const auto cls = sc.class_name();
  auto entry = [&](std::optional<std::uint32_t> id, NibblePattern p) {
    return AttackMetadata{first, last, id, std::move(p), cls};
  };
  switch (sc.kind) {
    case AttackKind::dos:
      return {entry(0x000, NibblePattern("0000000000000000"))};
    case AttackKind::fuzzy: {
      std::set<std::uint32_t> ids;
      for (auto* f : injected) ids.insert(f->frame.id());
      std::vector<AttackMetadata> out;
      for (auto id : ids) out.push_back(entry(id, NibblePattern{}));
      return out;
    }
    case AttackKind::targeted_spoof:
      return {entry(*sc.target_id, NibblePattern::exact(injected.front()->frame.data()))};
    case AttackKind::fuzzing_max_payload:
      return {entry(std::nullopt, NibblePattern("FFFFFFFFFFFFFFFF"))};
    case AttackKind::fabrication:
    case AttackKind::masquerade:
      return {entry(*sc.target_id, sc.payload_spec)};
  }
  return {};
}

/// Applies one scenario to an already labeled log.
inline LabeledLog apply_scenario(const LabeledLog& log, const AttackScenario& sc, std::uint64_t fallback_seed = 0) {
  sc.validate();
  const auto cls = sc.class_name();
  switch (sc.kind) {
    case AttackKind::dos:
      return inject_dos(log, sc.interval, sc.effective_period(), cls);
    case AttackKind::fuzzy:
      return inject_fuzzy(log, sc.interval, sc.seed.value_or(fallback_seed), sc.effective_period(), cls, sc.fuzzy);
    case AttackKind::targeted_spoof:
      return inject_targeted_spoof(log, *sc.target_id, sc.payload_spec.apply({}), sc.interval, sc.effective_period(),
                                   cls);
    case AttackKind::fuzzing_max_payload:
      return inject_fuzzing_max_payload(log, sc.interval, sc.id_cycle, sc.effective_period(), cls);
    case AttackKind::fabrication:
      return inject_fabrication(log, *sc.target_id, sc.payload_spec, sc.interval, cls);
    case AttackKind::masquerade:
      return to_masquerade(inject_fabrication(log, *sc.target_id, sc.payload_spec, sc.interval, cls), *sc.target_id,
                           sc.interval);
  }
  return log;
}

/// Runs scenarios in order over ambient traffic and produces the sidecar
/// metadata. Throws ValidationError when the metadata cannot reproduce the
/// construction labels (an ambient frame is indistinguishable from an
/// injected one).
inline SynthResult synthesize(const TrafficLog& ambient, const std::vector<AttackScenario>& scenarios,
                              std::uint64_t seed = 0) {
  SynthResult r;
  r.log = label_all_normal(ambient);
  r.log.label_space = LabelSpace::synth();
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& sc = scenarios[i];
    // Mark frames that already carry this class so only new ones are described.
    std::set<std::pair<std::int64_t, std::uint32_t>> seen;
    for (const auto& f : r.log.frames)
      if (f.label.name == sc.class_name()) seen.insert({f.frame.timestamp().micros, f.frame.id()});
    r.log = apply_scenario(r.log, sc, derive_seed(seed, i));
    std::vector<bool> before(r.log.size());
    for (std::size_t k = 0; k < r.log.size(); ++k)
      before[k] = seen.contains({r.log.frames[k].frame.timestamp().micros, r.log.frames[k].frame.id()});
    auto md = describe_injection(sc, detail::frames_labeled(r.log, sc.class_name(), before));
    r.metadata.insert(r.metadata.end(), md.begin(), md.end());
  }
  const auto relabeled = apply_metadata_labels(strip_labels(r.log), r.metadata, r.log.label_space);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < r.log.size(); ++i)
    if (relabeled.frames[i].label != r.log.frames[i].label) ++mismatches;
  if (mismatches > 0)
    throw ValidationError("sidecar metadata cannot reproduce " + std::to_string(mismatches) +
                          " construction labels; ambient frames collide with an injected id/payload pattern");
  return r;
}

// ---- JSON ------------------------------------------------------------------

namespace detail {

inline std::uint32_t id_from_json(const nlohmann::json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint32_t>();
  const auto s = j.get<std::string>();
  const auto v = parse_hex_u32(s);
  if (!v || *v >= kExtendedIdLimit) throw ValidationError("invalid CAN id '" + s + "'");
  return *v;
}

inline std::vector<std::uint8_t> bytes_from_hex(const std::string& s) {
  if (s.size() % 2 != 0 || s.size() > 16) throw ValidationError("payload hex must be an even number of digits, at most 16");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < s.size(); i += 2) {
    const int hi = hex_digit_value(s[i]), lo = hex_digit_value(s[i + 1]);
    if (hi < 0 || lo < 0) throw ValidationError("non-hex payload '" + s + "'");
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

inline Interval interval_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("interval must be [start, end]");
  return Interval::seconds(j[0].get<double>(), j[1].get<double>());
}

}  // namespace detail

inline AmbientModel ambient_from_json(const nlohmann::json& j, std::uint64_t default_seed = 0) {
  try {
    AmbientModel m;
    const double duration = j.value("duration", 60.0);
    const auto seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : default_seed;
    if (j.contains("typical")) {
      m = AmbientModel::typical(j.at("typical").value("n_ids", std::size_t{20}), duration, seed);
    } else {
      for (const auto& sj : j.at("streams")) {
        AmbientStream s;
        s.id = detail::id_from_json(sj.at("id"));
        s.format = sj.value("extended", false) || s.id >= kStandardIdLimit ? IdFormat::extended : IdFormat::standard;
        s.period = sj.at("period").get<double>();
        s.jitter_std = sj.value("jitter_std", 0.0);
        if (sj.contains("phase")) s.phase = sj.at("phase").get<double>();
        if (sj.contains("payload")) {
          const auto& pj = sj.at("payload");
          s.payload.base = detail::bytes_from_hex(pj.value("base", std::string("0000000000000000")));
          s.payload.walk_bytes = pj.value("walk_bytes", std::vector<int>{});
          s.payload.walk_step = pj.value("walk_step", 0);
          s.payload.counter_bytes = pj.value("counter_bytes", std::vector<int>{});
        } else {
          s.payload.base.assign(8, 0);
        }
        m.streams.push_back(std::move(s));
      }
    }
    m.duration = duration;
    m.seed = seed;
    m.start = j.value("start", 0.0);
    m.channel = j.value("channel", std::string("can0"));
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("ambient JSON: ") + e.what());
  }
}

inline AttackScenario scenario_from_json(const nlohmann::json& j) {
  try {
    AttackScenario sc;
    sc.kind = attack_kind_from_string(j.at("kind").get<std::string>());
    sc.interval = detail::interval_from_json(j.at("interval"));
    if (j.contains("target_id")) sc.target_id = detail::id_from_json(j.at("target_id"));
    if (j.contains("payload")) sc.payload_spec = NibblePattern(j.at("payload").get<std::string>());
    if (j.contains("period")) sc.period = j.at("period").get<double>();
    if (j.contains("id_cycle"))
      for (const auto& id : j.at("id_cycle")) sc.id_cycle.push_back(detail::id_from_json(id));
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
    sc.attack_class = j.value("attack_class", std::string{});
    sc.fuzzy.extended_ids = j.value("extended_ids", false);
    sc.fuzzy.allow_ambient_ids = j.value("allow_ambient_ids", false);
    sc.validate();
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scenario JSON: ") + e.what());
  }
}

/// Accepts a single scenario object, an array, or {"scenarios": [...]}.
inline std::vector<AttackScenario> scenarios_from_json(const nlohmann::json& j) {
  std::vector<AttackScenario> out;
  if (j.is_object() && !j.contains("scenarios")) {
    out.push_back(scenario_from_json(j));
    return out;
  }
  const auto& list = j.is_array() ? j : j.at("scenarios");
  for (const auto& s : list) out.push_back(scenario_from_json(s));
  return out;
}

}  // namespace canids
