#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "span2records/converter.hpp"
#include "span2records/monitoring_log.hpp"
#include "span2records/otlp_json.hpp"
#include "span2records/otlp_protobuf.hpp"
#include "span2records/synthetic.hpp"
#include "span2records/trace_analysis.hpp"

namespace span2records::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(SPAN2RECORDS_TEST_DATA) / name;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("span2records-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline OtelSpan make_span(std::uint64_t span_id, std::optional<std::uint64_t> parent,
                          std::string name, std::uint64_t start, std::uint64_t end,
                          TraceId trace = TraceId(0, 1)) {
  OtelSpan s;
  s.trace_id = trace;
  s.span_id = SpanId(span_id);
  if (parent) s.parent_span_id = SpanId(*parent);
  s.name = std::move(name);
  s.start_epoch_nanos = start;
  s.end_epoch_nanos = end;
  return s;
}

inline kieker::OperationExecutionRecord make_record(std::string sig, std::int64_t tin,
                                                    std::int64_t tout, std::int32_t eoi,
                                                    std::int32_t ess, std::string host = "h",
                                                    std::int64_t trace = 1) {
  kieker::OperationExecutionRecord r;
  r.operation_signature = std::move(sig);
  r.hostname = std::move(host);
  r.trace_id = trace;
  r.tin = tin;
  r.tout = tout;
  r.logging_timestamp = tout;
  r.eoi = eoi;
  r.ess = ess;
  return r;
}

inline synthetic::GeneratorSpec random_spec(std::uint64_t seed, std::size_t size,
                                            double overlap) {
  synthetic::GeneratorSpec spec;
  spec.pattern = synthetic::Pattern::kRandom;
  spec.seed = seed;
  spec.size = size;
  spec.overlap_probability = overlap;
  spec.base_epoch_nanos = 1'700'000'000'000'000'000ULL;
  return spec;
}

// Compares a reconstructed trace with the forest its records came from.
// Record k stems from forest node execution_order(forest)[k]; the parent
// relation, signature and timestamps must all match. On mismatch `why`
// describes the first difference.
inline bool same_structure(const SpanForest& forest, const ExecutionTrace& trace,
                           std::string* why = nullptr) {
  auto fail = [&](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  const auto order = execution_order(forest);
  if (trace.executions.size() != order.size()) return fail("size differs");
  std::vector<std::size_t> rank(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = k;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& node = forest.nodes[order[k]];
    const auto& rec = trace.executions[k].record;
    const std::string expected_sig =
        node.span.name.empty() ? std::string(kUnnamedSignature) : node.span.name;
    if (rec.operation_signature != expected_sig) return fail("signature at eoi " + std::to_string(k));
    if (rec.tin != static_cast<std::int64_t>(node.span.start_epoch_nanos) ||
        rec.tout != static_cast<std::int64_t>(node.span.end_epoch_nanos)) {
      return fail("timestamps at eoi " + std::to_string(k));
    }
    std::optional<std::size_t> expected_parent;
    if (node.parent) expected_parent = rank[*node.parent];
    if (trace.executions[k].parent != expected_parent) {
      return fail("parent of eoi " + std::to_string(k) + ": expected " +
                  (expected_parent ? std::to_string(*expected_parent) : "none") + ", got " +
                  (trace.executions[k].parent ? std::to_string(*trace.executions[k].parent)
                                              : "none"));
    }
  }
  return true;
}

// A forest is ambiguous when some node v (depth k >= 1) is fully contained
// in another node u at depth k-1 besides its parent. Moving v under u gives
// a different valid forest with identical records, so no reconstruction can
// recover both.
inline bool has_ambiguous_parent(const SpanForest& forest) {
  for (const auto& v : forest.nodes) {
    if (!v.parent) continue;
    for (std::size_t u = 0; u < forest.nodes.size(); ++u) {
      const auto& cand = forest.nodes[u];
      if (u == *v.parent || cand.depth + 1 != v.depth) continue;
      if (cand.span.start_epoch_nanos <= v.span.start_epoch_nanos &&
          v.span.end_epoch_nanos <= cand.span.end_epoch_nanos) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace span2records::testing
