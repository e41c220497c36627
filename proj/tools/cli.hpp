#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stop_token>
#include <string>
#include <vector>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "span2records/span2records.hpp"

namespace span2records::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kIoError = 3,
};

inline constexpr std::string_view kAsyncFlag = "--asynchronousTrace";

struct ConvertConfig {
  std::filesystem::path input;
  std::filesystem::path output;
};

struct ReceiveConfig {
  std::string listen = "127.0.0.1:4318";
  std::filesystem::path output;
  double completion_timeout_seconds = 10.0;
};

struct AnalyzeConfig {
  std::filesystem::path input;
  bool asynchronous = false;
  std::optional<std::filesystem::path> calltree;
  std::optional<std::filesystem::path> deps;
};

struct GenerateConfig {
  std::string pattern;
  std::uint64_t seed = 1;
  std::size_t size = 3;
  double overlap = 0.3;
  std::uint64_t base_epoch_nanos = 0;
  std::filesystem::path output;
};

// Diagnostics go to `err`; verbosity comes from SPAN2RECORDS_LOG
// (debug|info|warn, default warn).
inline std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto logger = std::make_shared<spdlog::logger>("span2records", std::move(sink));
  logger->set_pattern("[%l] %v");
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("SPAN2RECORDS_LOG")) {
    std::string_view v(env);
    if (v == "debug") level = spdlog::level::debug;
    else if (v == "info") level = spdlog::level::info;
  }
  logger->set_level(level);
  return logger;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path.string(), "read failed");
  return data;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw IoError(path.string(), "write failed");
}

// `.json` selects the JSON mapping, `.binpb`/`.pb` the binary encoding;
// otherwise the first non-blank byte decides. Blank input is an empty request.
inline ParseResult parse_otlp_file(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  const auto first = data.find_first_not_of(" \t\r\n");
  const auto ext = path.extension();
  if (ext == ".binpb" || ext == ".pb") return parse_otlp_protobuf(std::string_view(data));
  if (first == std::string::npos) return {};
  if (ext == ".json" || data[first] == '{') return parse_otlp_json(data);
  return parse_otlp_protobuf(std::string_view(data));
}

inline void log_parse_warnings(spdlog::logger& log, const ParseResult& parsed) {
  if (parsed.skipped_spans > 0) log.warn("skipped {} invalid span(s)", parsed.skipped_spans);
  if (parsed.dropped_attributes > 0) {
    log.info("dropped {} attribute(s) with unsupported value types", parsed.dropped_attributes);
  }
}

inline int run_convert(const ConvertConfig& cfg, std::ostream& out, spdlog::logger& log) {
  auto parsed = parse_otlp_file(cfg.input);
  log_parse_warnings(log, parsed);
  log.debug("parsed {} span(s) from {}", parsed.spans.size(), cfg.input.string());
  kieker::MonitoringLogWriter writer(cfg.output);
  for (const auto& conversion : convert_spans(std::move(parsed.spans))) {
    writer.append(conversion.records);
    if (conversion.report.orphan_count > 0) {
      log.warn("trace {}: {} orphan span(s) promoted to roots", conversion.report.trace_id,
               conversion.report.orphan_count);
    }
    out << format_report(conversion.report) << '\n';
  }
  writer.flush();
  log.info("wrote {}", writer.data_file().string());
  return kSuccess;
}

inline std::pair<std::string, int> split_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--listen", "expected host:port");
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--listen", "invalid port in '" + listen + "'");
  }
  if (port < 0 || port > 65535) throw CLI::ValidationError("--listen", "port out of range");
  return {listen.substr(0, colon), port};
}

// Receives until `stop` is requested; each completed trace is converted and
// appended to the monitoring log in `cfg.output`.
inline int run_receive(const ReceiveConfig& cfg, std::stop_token stop, std::ostream& out,
                       spdlog::logger& log, const std::function<void(int)>& on_ready = nullptr) {
  auto [host, port] = split_listen(cfg.listen);
  ReceiverOptions options;
  options.host = host;
  options.port = port;
  options.completion_timeout = std::chrono::duration_cast<TraceBuffer::Clock::duration>(
      std::chrono::duration<double>(cfg.completion_timeout_seconds));
  kieker::MonitoringLogWriter writer(cfg.output);
  auto sink = [&](CompletedTrace trace) {
    for (const auto& conversion : convert_spans(std::move(trace.spans))) {
      writer.append(conversion.records);
      writer.flush();
      out << format_report(conversion.report) << '\n' << std::flush;
    }
  };
  serve_receiver(std::move(options), sink, stop, [&](int bound) {
    log.info("listening on {}:{}{}", host, bound, kTracesPath);
    if (on_ready) on_ready(bound);
  });
  return kSuccess;
}

inline int run_analyze(const AnalyzeConfig& cfg, std::ostream& out, spdlog::logger& log) {
  const auto monitoring_log = kieker::read_monitoring_log(cfg.input);
  if (monitoring_log.skipped_records > 0) {
    log.info("skipped {} record(s) of other types", monitoring_log.skipped_records);
  }
  const auto mode = cfg.asynchronous ? ReconstructionMode::kAsynchronous
                                     : ReconstructionMode::kSynchronous;
  const auto traces = reconstruct_traces(monitoring_log.records, mode);
  if (cfg.calltree) write_file(*cfg.calltree, emit_dot(build_call_tree(traces)));
  if (cfg.deps) write_file(*cfg.deps, emit_dot(build_dependency_graph(traces)));
  out << traces.size() << " trace(s), " << monitoring_log.records.size() << " execution(s)\n";
  return kSuccess;
}

inline int run_generate(const GenerateConfig& cfg, spdlog::logger& log) {
  auto pattern = synthetic::parse_pattern(cfg.pattern);
  if (!pattern) throw CLI::ValidationError("--pattern", "unknown pattern '" + cfg.pattern + "'");
  synthetic::GeneratorSpec spec;
  spec.pattern = *pattern;
  spec.seed = cfg.seed;
  spec.size = cfg.size;
  spec.depth = cfg.size;
  spec.overlap_probability = cfg.overlap;
  spec.base_epoch_nanos = cfg.base_epoch_nanos;
  write_file(cfg.output, synthetic::generate_otlp_json(spec) + "\n");
  log.info("wrote {}", cfg.output.string());
  return kSuccess;
}

// Entry point shared by the executable and the tests. `stop` ends `receive`.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err,
               std::stop_token stop = {}) {
  auto log = make_logger(err);
  CLI::App app{"Convert OpenTelemetry traces to Kieker monitoring logs and analyze them",
               "span2records"};
  app.require_subcommand(1, 1);

  ConvertConfig convert;
  auto* convert_cmd = app.add_subcommand("convert", "Convert an OTLP file to a monitoring log");
  convert_cmd->add_option("--input", convert.input, "OTLP file (.json or .binpb)")->required();
  convert_cmd->add_option("--output", convert.output, "Monitoring log directory")->required();

  ReceiveConfig receive;
  auto* receive_cmd = app.add_subcommand("receive", "Receive OTLP/HTTP traces and convert them");
  receive_cmd->add_option("--listen", receive.listen, "host:port")->required();
  receive_cmd->add_option("--output", receive.output, "Monitoring log directory")->required();
  receive_cmd->add_option("--completion-timeout", receive.completion_timeout_seconds,
                          "Seconds of inactivity after which a trace is complete")
      ->check(CLI::PositiveNumber);

  AnalyzeConfig analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Reconstruct traces and emit DOT graphs");
  analyze_cmd->add_option("--input", analyze.input, "Monitoring log directory")->required();
  analyze_cmd->add_flag(std::string(kAsyncFlag), analyze.asynchronous,
                        "Infer parents for traces with concurrent executions");
  analyze_cmd->add_option("--calltree", analyze.calltree, "Aggregated call tree DOT file");
  analyze_cmd->add_option("--deps", analyze.deps, "Dependency graph DOT file");

  GenerateConfig generate;
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic OTLP JSON trace");
  generate_cmd->add_option("--pattern", generate.pattern,
                           "sequential|nested|fanout|fig3|random")
      ->required();
  generate_cmd->add_option("--seed", generate.seed);
  generate_cmd->add_option("--size", generate.size)->check(CLI::PositiveNumber);
  generate_cmd->add_option("--overlap", generate.overlap, "random: sibling overlap probability")
      ->check(CLI::Range(0.0, 1.0));
  generate_cmd->add_option("--base-epoch-nanos", generate.base_epoch_nanos);
  generate_cmd->add_option("--output", generate.output, "Output JSON file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream usage;
    const int code = app.exit(e, out, usage);
    err << usage.str();
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (*convert_cmd) return run_convert(convert, out, *log);
    if (*receive_cmd) return run_receive(receive, stop, out, *log);
    if (*analyze_cmd) return run_analyze(analyze, out, *log);
    return run_generate(generate, *log);
  } catch (const CLI::ValidationError& e) {
    log->error("{}", e.what());
    return kUsageError;
  } catch (const InvalidSynchronousTrace& e) {
    log->error("{}", e.what());
    log->error("the trace contains concurrent executions; rerun with {}", kAsyncFlag);
    return kDataError;
  } catch (const DataError& e) {
    log->error("{}", e.what());
    return kDataError;
  } catch (const IoError& e) {
    log->error("{}", e.what());
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    log->error("{}", e.what());
    return kIoError;
  }
}

}  // namespace span2records::cli
