#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace span2records::kieker {

inline constexpr std::string_view kOperationExecutionRecordType =
    "kieker.common.record.controlflow.OperationExecutionRecord";
inline constexpr std::string_view kNoSessionId = "<no-session-id>";

struct OperationExecutionRecord {
  std::int64_t logging_timestamp = 0;
  std::string operation_signature;
  std::string session_id{kNoSessionId};
  std::int64_t trace_id = 0;
  std::int64_t tin = 0;
  std::int64_t tout = 0;
  std::string hostname;
  std::int32_t eoi = 0;
  std::int32_t ess = 0;

  friend bool operator==(const OperationExecutionRecord&,
                         const OperationExecutionRecord&) = default;
};

// Text fields escape `\`, `;` and newline so every line keeps exactly ten
// `;`-separated fields.
inline std::string escape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case ';': out += "\\;"; break;
      case '\n': out += "\\n"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Splits a record line on unescaped `;` and unescapes each field. An
// unknown escape sequence keeps its character; a trailing lone backslash is
// kept verbatim.
inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields(1);
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '\\' && i + 1 < line.size()) {
      char next = line[++i];
      fields.back().push_back(next == 'n' ? '\n' : next);
    } else if (c == ';') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  return fields;
}

// One line of the text monitoring log, without the trailing newline.
inline std::string format_record_line(std::string_view key, const OperationExecutionRecord& r) {
  std::string line;
  line.reserve(96 + r.operation_signature.size() + r.hostname.size());
  line.append(key);
  auto field = [&line](std::string_view v) {
    line.push_back(';');
    line.append(v);
  };
  field(std::to_string(r.logging_timestamp));
  field(escape_field(r.operation_signature));
  field(escape_field(r.session_id));
  field(std::to_string(r.trace_id));
  field(std::to_string(r.tin));
  field(std::to_string(r.tout));
  field(escape_field(r.hostname));
  field(std::to_string(r.eoi));
  field(std::to_string(r.ess));
  return line;
}

}  // namespace span2records::kieker
