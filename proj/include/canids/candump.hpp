#pragma once

// candump text logs: "(TIMESTAMP) CHANNEL ID#DATAHEX", one frame per line.

#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "canids/core.hpp"

namespace canids {

enum class ParseMode { strict, lenient };

/// Decodes one candump record. Three hex digits or fewer select the standard
/// format, longer identifiers the extended one.
inline CanFrame parse_candump_line(std::string_view line, std::size_t line_no = 0) {
  line = detail::trim(line);
  if (line.empty() || line.front() != '(') throw ParseError(line_no, "expected '(' before timestamp");
  const auto close = line.find(')');
  if (close == std::string_view::npos) throw ParseError(line_no, "unterminated timestamp parenthesis");
  const auto ts = parse_timestamp(line.substr(1, close - 1));
  if (!ts) throw ParseError(line_no, "malformed timestamp '" + std::string(line.substr(1, close - 1)) + "'");

  auto rest = detail::trim(line.substr(close + 1));
  const auto sp = rest.find_first_of(" \t");
  if (sp == std::string_view::npos) throw ParseError(line_no, "missing channel or frame field");
  const auto channel = rest.substr(0, sp);
  const auto body = detail::trim(rest.substr(sp));
  if (body.find_first_of(" \t") != std::string_view::npos)
    throw ParseError(line_no, "unexpected trailing field");

  const auto hash = body.find('#');
  if (hash == std::string_view::npos) throw ParseError(line_no, "missing '#' separator");
  const auto id_text = body.substr(0, hash);
  const auto data_text = body.substr(hash + 1);
  if (!data_text.empty() && (data_text.front() == '#' || data_text.front() == 'R' || data_text.front() == 'r'))
    throw ParseError(line_no, "CAN FD and remote frames are not supported");

  const auto id = parse_hex_u32(id_text);
  if (!id || id_text.starts_with("0x") || id_text.starts_with("0X"))
    throw ParseError(line_no, "malformed identifier '" + std::string(id_text) + "'");
  const auto format = id_text.size() <= 3 ? IdFormat::standard : IdFormat::extended;
  if (format == IdFormat::extended && *id >= kExtendedIdLimit) throw ParseError(line_no, "id exceeds 29 bits");
  if (format == IdFormat::standard && *id >= kStandardIdLimit) throw ParseError(line_no, "id exceeds 11 bits");

  if (data_text.size() % 2 != 0) throw ParseError(line_no, "odd-length data hex");
  if (data_text.size() / 2 > kMaxDlc) throw ParseError(line_no, "dlc exceeds 8");
  std::array<std::uint8_t, kMaxDlc> bytes{};
  for (std::size_t i = 0; i < data_text.size() / 2; ++i) {
    const int hi = hex_digit_value(data_text[2 * i]);
    const int lo = hex_digit_value(data_text[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ParseError(line_no, "non-hex character in data field");
    bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return CanFrame(*ts, std::string(channel), *id, format,
                  std::span<const std::uint8_t>(bytes.data(), data_text.size() / 2));
}

inline std::string format_candump_line(const CanFrame& f) {
  char id[16];
  std::snprintf(id, sizeof id, f.id_format() == IdFormat::standard ? "%03X" : "%08X", f.id());
  return "(" + f.timestamp().to_string() + ") " + f.channel() + " " + id + "#" + to_hex(f.data());
}

struct CandumpParseResult {
  TrafficLog log;
  std::size_t skipped = 0;  // lenient mode only
};

/// Streams a candump log line by line. Blank lines are ignored. Strict mode
/// rethrows the first ParseError (with its line number); lenient mode skips
/// bad lines and counts them.
inline CandumpParseResult parse_candump_log(std::istream& in, ParseMode mode = ParseMode::strict) {
  CandumpParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      result.log.frames.push_back(parse_candump_line(line, line_no));
    } catch (const ParseError&) {
      if (mode == ParseMode::strict) throw;
      ++result.skipped;
    }
  }
  if (result.skipped > 0) warn("skipped " + std::to_string(result.skipped) + " malformed candump lines");
  return result;
}

template <class Frame>
void serialize_candump(const BasicTrafficLog<Frame>& log, std::ostream& out) {
  for (const auto& f : log.frames) out << format_candump_line(frame_of(f)) << '\n';
}

}  // namespace canids
