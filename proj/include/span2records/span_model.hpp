#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <variant>
#include <vector>

#include "span2records/error.hpp"
#include "span2records/ids.hpp"

namespace span2records {

using AttributeValue = std::variant<std::string, std::int64_t, double, bool>;
using Attributes = std::map<std::string, AttributeValue, std::less<>>;

// Returns the attribute as text if it is present and holds a string.
inline std::optional<std::string_view> string_attribute(const Attributes& attrs,
                                                        std::string_view key) {
  auto it = attrs.find(key);
  if (it == attrs.end()) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  return std::nullopt;
}

enum class SpanKind { kInternal, kServer, kClient, kProducer, kConsumer };

inline std::string_view to_string(SpanKind kind) {
  switch (kind) {
    case SpanKind::kInternal: return "INTERNAL";
    case SpanKind::kServer: return "SERVER";
    case SpanKind::kClient: return "CLIENT";
    case SpanKind::kProducer: return "PRODUCER";
    case SpanKind::kConsumer: return "CONSUMER";
  }
  return "INTERNAL";
}

// OTLP enum numbering. UNSPECIFIED (0) and unknown values are read as INTERNAL.
inline SpanKind span_kind_from_otlp(std::int64_t value) {
  switch (value) {
    case 2: return SpanKind::kServer;
    case 3: return SpanKind::kClient;
    case 4: return SpanKind::kProducer;
    case 5: return SpanKind::kConsumer;
    default: return SpanKind::kInternal;
  }
}

inline int span_kind_to_otlp(SpanKind kind) { return static_cast<int>(kind) + 1; }

struct SpanEvent {
  std::uint64_t epoch_nanos = 0;
  std::string name;
  Attributes attributes;

  friend bool operator==(const SpanEvent&, const SpanEvent&) = default;
};

struct OtelSpan {
  TraceId trace_id;
  SpanId span_id;
  std::optional<SpanId> parent_span_id;
  std::string name;
  SpanKind kind = SpanKind::kInternal;
  std::uint64_t start_epoch_nanos = 0;
  std::uint64_t end_epoch_nanos = 0;
  Attributes attributes;
  Attributes resource_attributes;
  std::vector<SpanEvent> events;

  friend bool operator==(const OtelSpan&, const OtelSpan&) = default;
};

// Checks the span invariants and returns the span unchanged, or throws
// InvalidSpan. Timestamps must also fit the signed 64-bit record fields.
inline const OtelSpan& validate_span(const OtelSpan& span) {
  if (span.trace_id.is_zero()) throw InvalidSpan("zero trace id");
  if (span.span_id.is_zero()) throw InvalidSpan("zero span id");
  if (span.parent_span_id && *span.parent_span_id == span.span_id) {
    throw InvalidSpan("self parent");
  }
  if (span.end_epoch_nanos < span.start_epoch_nanos) {
    throw InvalidSpan("end before start");
  }
  constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  if (span.end_epoch_nanos > kMax) throw InvalidSpan("timestamp out of range");
  return span;
}

// Total order used for siblings and roots: start time, then span id.
inline bool start_order_less(const OtelSpan& a, const OtelSpan& b) {
  return std::tie(a.start_epoch_nanos, a.span_id) <
         std::tie(b.start_epoch_nanos, b.span_id);
}

struct SpanNode {
  OtelSpan span;
  std::optional<std::size_t> parent;  // index into SpanForest::nodes
  std::vector<std::size_t> children;  // sorted by start_order_less
  std::size_t depth = 0;
  bool orphan = false;  // parent_span_id set but not resolvable
};

// Spans of one trace linked into trees. `nodes` is indexed by position;
// `roots` and every `children` list are sorted by (start, span_id).
struct SpanForest {
  TraceId trace_id;
  std::vector<SpanNode> nodes;
  std::vector<std::size_t> roots;
  std::size_t orphan_count = 0;
  std::size_t duplicate_count = 0;  // spans replaced by a later copy

  std::size_t size() const noexcept { return nodes.size(); }

  // Nodes in depth-first preorder, roots and children in start order.
  std::vector<std::size_t> preorder() const {
    std::vector<std::size_t> out;
    out.reserve(nodes.size());
    std::vector<std::size_t> stack(roots.rbegin(), roots.rend());
    while (!stack.empty()) {
      std::size_t i = stack.back();
      stack.pop_back();
      out.push_back(i);
      const auto& ch = nodes[i].children;
      stack.insert(stack.end(), ch.rbegin(), ch.rend());
    }
    return out;
  }
};

namespace detail {

inline SpanForest build_one_forest(TraceId trace_id, std::vector<OtelSpan> spans,
                                   std::size_t duplicates) {
  SpanForest forest;
  forest.trace_id = trace_id;
  forest.duplicate_count = duplicates;
  std::sort(spans.begin(), spans.end(), start_order_less);
  forest.nodes.reserve(spans.size());
  std::unordered_map<SpanId, std::size_t> index;
  for (auto& s : spans) {
    index.emplace(s.span_id, forest.nodes.size());
    forest.nodes.push_back(SpanNode{std::move(s), std::nullopt, {}, 0, false});
  }

  auto& nodes = forest.nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& parent_id = nodes[i].span.parent_span_id;
    if (!parent_id) continue;
    auto it = index.find(*parent_id);
    if (it == index.end()) {
      nodes[i].orphan = true;
    } else {
      nodes[i].parent = it->second;
    }
  }

  // Break cycles: every node must reach a parentless node. Walking nodes in
  // start order keeps the choice of promoted node deterministic.
  enum class Mark : std::uint8_t { kUnknown, kVisiting, kRooted };
  std::vector<Mark> mark(nodes.size(), Mark::kUnknown);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::vector<std::size_t> path;
    std::size_t cur = i;
    while (mark[cur] == Mark::kUnknown) {
      mark[cur] = Mark::kVisiting;
      path.push_back(cur);
      if (!nodes[cur].parent) break;
      cur = *nodes[cur].parent;
    }
    if (mark[cur] == Mark::kVisiting && nodes[cur].parent) {
      // `cur` closes a cycle; reject the edge with the earliest-starting
      // member as its source.
      auto cycle_begin = std::find(path.begin(), path.end(), cur);
      std::size_t victim = *std::min_element(cycle_begin, path.end());
      nodes[victim].parent.reset();
      nodes[victim].orphan = true;
    }
    for (std::size_t p : path) mark[p] = Mark::kRooted;
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].orphan) ++forest.orphan_count;
    if (nodes[i].parent) {
      nodes[*nodes[i].parent].children.push_back(i);
    } else {
      forest.roots.push_back(i);
    }
  }
  // Indices already follow start order, so children lists are sorted.
  for (std::size_t i : forest.preorder()) {
    if (nodes[i].parent) nodes[i].depth = nodes[*nodes[i].parent].depth + 1;
  }
  return forest;
}

}  // namespace detail

// Groups spans by trace id (ascending) and links them by parent reference.
// A later span with an already-seen (trace_id, span_id) replaces the earlier
// one. Unresolvable parents and cycle back-edges turn into orphan roots.
inline std::vector<SpanForest> build_span_forest(std::vector<OtelSpan> spans) {
  std::map<TraceId, std::vector<OtelSpan>> by_trace;
  std::map<TraceId, std::size_t> duplicates;
  std::map<TraceId, std::unordered_map<SpanId, std::size_t>> seen;
  for (auto& s : spans) {
    const TraceId trace_id = s.trace_id;
    auto& bucket = by_trace[trace_id];
    auto [it, inserted] = seen[trace_id].emplace(s.span_id, bucket.size());
    if (inserted) {
      bucket.push_back(std::move(s));
    } else {
      bucket[it->second] = std::move(s);
      ++duplicates[trace_id];
    }
  }
  std::vector<SpanForest> out;
  out.reserve(by_trace.size());
  for (auto& [trace_id, bucket] : by_trace) {
    out.push_back(detail::build_one_forest(trace_id, std::move(bucket), duplicates[trace_id]));
  }
  return out;
}

}  // namespace span2records
