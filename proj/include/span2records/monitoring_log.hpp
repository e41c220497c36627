#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <system_error>
#include <vector>

#include "span2records/error.hpp"
#include "span2records/kieker_record.hpp"

namespace span2records::kieker {

inline constexpr std::string_view kMapFileName = "kieker.map";
inline constexpr std::string_view kRecordKey = "$1";

// Contents of a monitoring-log directory.
struct MonitoringLog {
  std::filesystem::path directory;
  std::map<std::string, std::string> map_entries;  // "$1" -> record type
  std::vector<OperationExecutionRecord> records;
  std::size_t skipped_records = 0;  // lines of other record types
};

// `kieker-<yyyyMMdd-HHmmss>-UTC-001.dat` for the given instant.
inline std::string data_file_name(std::chrono::system_clock::time_point created) {
  std::time_t t = std::chrono::system_clock::to_time_t(created);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return std::string("kieker-") + buf + "-UTC-001.dat";
}

// Writes one monitoring log: `kieker.map` on construction, then record lines
// appended to a single data file. The directory must be absent or empty.
class MonitoringLogWriter {
 public:
  explicit MonitoringLogWriter(std::filesystem::path directory,
                               std::chrono::system_clock::time_point created =
                                   std::chrono::system_clock::now())
      : directory_(std::move(directory)) {
    std::error_code ec;
    std::filesystem::create_directories(directory_, ec);
    if (ec) throw IoError(directory_.string(), "cannot create directory: " + ec.message());
    if (!std::filesystem::is_empty(directory_, ec) || ec) {
      throw IoError(directory_.string(), "output directory is not empty");
    }
    const auto map_path = directory_ / kMapFileName;
    {
      std::ofstream map(map_path, std::ios::binary);
      map << kRecordKey << '=' << kOperationExecutionRecordType << '\n';
      if (!map) throw IoError(map_path.string(), "cannot write map file");
    }
    data_path_ = directory_ / data_file_name(created);
    data_.open(data_path_, std::ios::binary);
    if (!data_) throw IoError(data_path_.string(), "cannot open data file");
  }

  void append(const OperationExecutionRecord& record) {
    data_ << format_record_line(kRecordKey, record) << '\n';
    if (!data_) throw IoError(data_path_.string(), "write failed");
  }

  void append(std::span<const OperationExecutionRecord> records) {
    for (const auto& r : records) append(r);
  }

  void flush() {
    data_.flush();
    if (!data_) throw IoError(data_path_.string(), "flush failed");
  }

  const std::filesystem::path& directory() const noexcept { return directory_; }
  const std::filesystem::path& data_file() const noexcept { return data_path_; }

 private:
  std::filesystem::path directory_;
  std::filesystem::path data_path_;
  std::ofstream data_;
};

inline MonitoringLog write_monitoring_log(std::span<const OperationExecutionRecord> records,
                                          const std::filesystem::path& directory,
                                          std::chrono::system_clock::time_point created =
                                              std::chrono::system_clock::now()) {
  MonitoringLogWriter writer(directory, created);
  writer.append(records);
  writer.flush();
  MonitoringLog log;
  log.directory = directory;
  log.map_entries.emplace(kRecordKey, kOperationExecutionRecordType);
  log.records.assign(records.begin(), records.end());
  return log;
}

namespace detail {

template <typename Int>
Int parse_number(const std::string& text, std::size_t line, const char* field) {
  Int out{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw NumberParseError(line, field);
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError(path.string(), "read failed");
  return lines;
}

}  // namespace detail

// Reads `kieker.map` and every `*.dat` file in lexicographic name order.
// Lines whose key maps to another record type are counted and skipped.
inline MonitoringLog read_monitoring_log(const std::filesystem::path& directory) {
  MonitoringLog log;
  log.directory = directory;
  for (const auto& line : detail::read_lines(directory / kMapFileName)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError((directory / kMapFileName).string() + ": malformed map line '" + line + "'");
    }
    log.map_entries.insert_or_assign(line.substr(0, eq), line.substr(eq + 1));
  }

  std::vector<std::filesystem::path> data_files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(directory, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".dat") {
      data_files.push_back(entry.path());
    }
  }
  if (ec) throw IoError(directory.string(), "cannot list directory: " + ec.message());
  std::sort(data_files.begin(), data_files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });

  for (const auto& file : data_files) {
    std::size_t line_no = 0;
    for (const auto& line : detail::read_lines(file)) {
      ++line_no;
      if (line.empty()) continue;
      auto fields = split_fields(line);
      auto type = log.map_entries.find(fields[0]);
      if (type == log.map_entries.end()) throw UnknownRecordKey(fields[0], line_no);
      if (type->second != kOperationExecutionRecordType) {
        ++log.skipped_records;
        continue;
      }
      if (fields.size() != 10) throw FieldCountMismatch(line_no, 10, fields.size());
      OperationExecutionRecord r;
      r.logging_timestamp = detail::parse_number<std::int64_t>(fields[1], line_no, "loggingTimestamp");
      r.operation_signature = std::move(fields[2]);
      r.session_id = std::move(fields[3]);
      r.trace_id = detail::parse_number<std::int64_t>(fields[4], line_no, "traceId");
      r.tin = detail::parse_number<std::int64_t>(fields[5], line_no, "tin");
      r.tout = detail::parse_number<std::int64_t>(fields[6], line_no, "tout");
      r.hostname = std::move(fields[7]);
      r.eoi = detail::parse_number<std::int32_t>(fields[8], line_no, "eoi");
      r.ess = detail::parse_number<std::int32_t>(fields[9], line_no, "ess");
      log.records.push_back(std::move(r));
    }
  }
  return log;
}

}  // namespace span2records::kieker
