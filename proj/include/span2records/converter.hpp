#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "span2records/kieker_record.hpp"
#include "span2records/span_model.hpp"

namespace span2records {

inline constexpr std::string_view kUnknownHost = "unknown-host";
inline constexpr std::string_view kUnnamedSignature = "<unnamed>";

struct ConversionReport {
  std::string trace_id;  // 32-char hex
  std::int64_t kieker_trace_id = 0;
  std::size_t span_count = 0;
  bool synchronous = true;
  std::size_t orphan_count = 0;

  friend bool operator==(const ConversionReport&, const ConversionReport&) = default;
};

struct TraceConversion {
  std::vector<kieker::OperationExecutionRecord> records;  // in eoi order
  ConversionReport report;
};

// Low 64 bits of the trace id, reinterpreted as two's complement.
constexpr std::int64_t derive_kieker_trace_id(const TraceId& trace_id) noexcept {
  return std::bit_cast<std::int64_t>(trace_id.low());
}

// First present of: span `net.peer.name`, span `net.sock.peer.addr`,
// resource `service.name`, then "unknown-host". Empty strings count as absent.
inline std::string derive_hostname(const Attributes& attributes,
                                   const Attributes& resource_attributes) {
  for (auto [attrs, key] : {std::pair{&attributes, "net.peer.name"},
                            std::pair{&attributes, "net.sock.peer.addr"},
                            std::pair{&resource_attributes, "service.name"}}) {
    if (auto v = string_attribute(*attrs, key); v && !v->empty()) return std::string(*v);
  }
  return std::string(kUnknownHost);
}

// Record fields that come straight from one span; eoi/ess and the trace id
// are left for assign_eoi_ess.
inline kieker::OperationExecutionRecord map_span_fields(const OtelSpan& span) {
  kieker::OperationExecutionRecord r;
  r.operation_signature = span.name.empty() ? std::string(kUnnamedSignature) : span.name;
  r.hostname = derive_hostname(span.attributes, span.resource_attributes);
  r.tin = static_cast<std::int64_t>(span.start_epoch_nanos);
  r.tout = static_cast<std::int64_t>(span.end_epoch_nanos);
  r.logging_timestamp = r.tout;
  return r;
}

// A forest can be written as a synchronous trace iff it has a single root,
// every child's closed interval lies within its parent's, and the closed
// intervals of siblings are pairwise disjoint.
inline bool is_synchronous(const SpanForest& forest) {
  if (forest.roots.size() != 1) return false;
  for (const auto& node : forest.nodes) {
    const auto& parent = node.span;
    std::uint64_t latest_end = 0;
    bool first = true;
    for (std::size_t c : node.children) {  // ascending start
      const auto& child = forest.nodes[c].span;
      if (child.start_epoch_nanos < parent.start_epoch_nanos ||
          child.end_epoch_nanos > parent.end_epoch_nanos) {
        return false;
      }
      if (!first && child.start_epoch_nanos <= latest_end) return false;
      latest_end = first ? child.end_epoch_nanos : std::max(latest_end, child.end_epoch_nanos);
      first = false;
    }
  }
  return true;
}

// Indices of forest nodes in execution order: ascending start time, then
// depth (an ancestor starting at the same instant comes first), then span id.
inline std::vector<std::size_t> execution_order(const SpanForest& forest) {
  std::vector<std::size_t> order(forest.nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& na = forest.nodes[a];
    const auto& nb = forest.nodes[b];
    return std::tie(na.span.start_epoch_nanos, na.depth, na.span.span_id) <
           std::tie(nb.span.start_epoch_nanos, nb.depth, nb.span.span_id);
  });
  return order;
}

// Encodes the forest's control flow positionally: eoi is the rank in
// execution order, ess the depth in the forest. Asynchronous forests are
// converted the same way and flagged in the report.
inline TraceConversion assign_eoi_ess(const SpanForest& forest) {
  TraceConversion out;
  const std::int64_t kieker_id = derive_kieker_trace_id(forest.trace_id);
  const auto order = execution_order(forest);
  out.records.reserve(order.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& node = forest.nodes[order[rank]];
    auto r = map_span_fields(node.span);
    r.trace_id = kieker_id;
    r.eoi = static_cast<std::int32_t>(rank);
    r.ess = static_cast<std::int32_t>(node.depth);
    out.records.push_back(std::move(r));
  }
  out.report.trace_id = forest.trace_id.to_hex();
  out.report.kieker_trace_id = kieker_id;
  out.report.span_count = out.records.size();
  out.report.synchronous = is_synchronous(forest);
  out.report.orphan_count = forest.orphan_count;
  return out;
}

// Forests in ascending trace-id order, each converted independently.
inline std::vector<TraceConversion> convert_spans(std::vector<OtelSpan> spans) {
  std::vector<TraceConversion> out;
  for (const auto& forest : build_span_forest(std::move(spans))) {
    out.push_back(assign_eoi_ess(forest));
  }
  return out;
}

// `<hex trace id> <kieker id> <spans> <sync|async>`
inline std::string format_report(const ConversionReport& report) {
  return report.trace_id + ' ' + std::to_string(report.kieker_trace_id) + ' ' +
         std::to_string(report.span_count) + ' ' + (report.synchronous ? "sync" : "async");
}

}  // namespace span2records
