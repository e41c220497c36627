#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "span2records/error.hpp"
#include "span2records/kieker_record.hpp"

namespace span2records {

inline constexpr std::string_view kEntryLabel = "'Entry'";

struct Execution {
  kieker::OperationExecutionRecord record;
  std::optional<std::size_t> parent;  // index into ExecutionTrace::executions
};

// Executions of one Kieker trace in eoi order, linked into a forest.
struct ExecutionTrace {
  std::int64_t trace_id = 0;
  std::vector<Execution> executions;

  std::vector<std::vector<std::size_t>> children() const {
    std::vector<std::vector<std::size_t>> out(executions.size());
    for (std::size_t i = 0; i < executions.size(); ++i) {
      if (executions[i].parent) out[*executions[i].parent].push_back(i);
    }
    return out;
  }

  std::size_t root_count() const {
    return static_cast<std::size_t>(std::count_if(
        executions.begin(), executions.end(), [](const auto& e) { return !e.parent; }));
  }
};

enum class ReconstructionMode { kSynchronous, kAsynchronous };

namespace detail {

inline void check_trace_records(std::vector<kieker::OperationExecutionRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.eoi < b.eoi; });
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.trace_id != records.front().trace_id) {
      throw InvalidTraceRecords("records of traces " + std::to_string(records.front().trace_id) +
                                " and " + std::to_string(r.trace_id) + " mixed");
    }
    if (r.eoi != static_cast<std::int32_t>(i)) {
      throw InvalidTraceRecords("trace " + std::to_string(r.trace_id) +
                                ": eoi values are not 0..n-1 (found " + std::to_string(r.eoi) +
                                " at position " + std::to_string(i) + ")");
    }
    if (r.ess < 0) {
      throw InvalidTraceRecords("trace " + std::to_string(r.trace_id) + ": negative ess at eoi " +
                                std::to_string(r.eoi));
    }
  }
}

// Stack discipline: an execution with ess k sits directly on the k-th stack
// entry, every execution popped from the stack must have returned before the
// new one starts, and children lie within their parent's time span.
inline void link_synchronous(std::vector<Execution>& execs) {
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < execs.size(); ++i) {
    const auto& r = execs[i].record;
    const auto depth = static_cast<std::size_t>(r.ess);
    if (depth > stack.size()) {
      throw InvalidSynchronousTrace(r.eoi, "ess gap: ess " + std::to_string(r.ess) +
                                               " follows stack depth " +
                                               std::to_string(stack.size()));
    }
    while (stack.size() > depth) {
      const auto& done = execs[stack.back()].record;
      if (done.tout >= r.tin) {
        throw InvalidSynchronousTrace(
            r.eoi, "'" + r.operation_signature + "' starts before '" + done.operation_signature +
                       "' (eoi " + std::to_string(done.eoi) + ") has returned");
      }
      stack.pop_back();
    }
    if (!stack.empty()) {
      const auto& parent = execs[stack.back()].record;
      if (r.tin < parent.tin || r.tout > parent.tout) {
        throw InvalidSynchronousTrace(
            r.eoi, "'" + r.operation_signature + "' is not nested in the time span of '" +
                       parent.operation_signature + "' (eoi " + std::to_string(parent.eoi) + ")");
      }
      execs[i].parent = stack.back();
    }
    stack.push_back(i);
  }
}

// Parent of an execution with ess k is the latest-starting earlier execution
// with ess k-1 that is running at its start. Candidates spanning the whole
// execution win over those that only contain its start. None found makes it
// a root.
inline void link_asynchronous(std::vector<Execution>& execs) {
  std::vector<std::vector<std::size_t>> by_depth;
  for (std::size_t i = 0; i < execs.size(); ++i) {
    const auto& r = execs[i].record;
    const auto depth = static_cast<std::size_t>(r.ess);
    if (depth > 0 && depth - 1 < by_depth.size()) {
      std::optional<std::size_t> best;
      bool best_spans = false;
      for (std::size_t c : by_depth[depth - 1]) {
        const auto& cand = execs[c].record;
        if (cand.tin > r.tin || r.tin > cand.tout) continue;
        const bool spans = r.tout <= cand.tout;
        if (!best || spans > best_spans ||
            (spans == best_spans && cand.tin >= execs[*best].record.tin)) {
          best = c;
          best_spans = spans;
        }
      }
      execs[i].parent = best;
    }
    if (by_depth.size() <= depth) by_depth.resize(depth + 1);
    by_depth[depth].push_back(i);
  }
}

}  // namespace detail

// Rebuilds the execution tree of one trace from its records. Records may
// arrive in any order but must carry eoi 0..n-1 and one trace id.
inline ExecutionTrace reconstruct_trace(std::vector<kieker::OperationExecutionRecord> records,
                                        ReconstructionMode mode) {
  detail::check_trace_records(records);
  ExecutionTrace trace;
  if (!records.empty()) trace.trace_id = records.front().trace_id;
  trace.executions.reserve(records.size());
  for (auto& r : records) trace.executions.push_back(Execution{std::move(r), std::nullopt});
  if (mode == ReconstructionMode::kSynchronous) {
    detail::link_synchronous(trace.executions);
  } else {
    detail::link_asynchronous(trace.executions);
  }
  return trace;
}

// Groups records by Kieker trace id (ascending) and reconstructs each trace.
inline std::vector<ExecutionTrace> reconstruct_traces(
    const std::vector<kieker::OperationExecutionRecord>& records, ReconstructionMode mode) {
  std::map<std::int64_t, std::vector<kieker::OperationExecutionRecord>> by_trace;
  for (const auto& r : records) by_trace[r.trace_id].push_back(r);
  std::vector<ExecutionTrace> out;
  out.reserve(by_trace.size());
  for (auto& [id, group] : by_trace) out.push_back(reconstruct_trace(std::move(group), mode));
  return out;
}

inline std::string execution_label(const kieker::OperationExecutionRecord& r) {
  return r.hostname + "::" + r.operation_signature;
}

// Executions merged across traces by their full label path from 'Entry'.
// Node 0 is 'Entry'; `weight` counts merged executions (calls into the node).
struct AggregatedCallTree {
  struct Node {
    std::string label;
    std::size_t weight = 0;
    std::optional<std::size_t> parent;
    std::map<std::string, std::size_t> children;  // label -> node index
  };

  std::vector<Node> nodes{Node{std::string(kEntryLabel), 0, std::nullopt, {}}};

  std::size_t child(std::size_t parent, const std::string& label) {
    auto it = nodes[parent].children.find(label);
    if (it != nodes[parent].children.end()) return it->second;
    nodes.push_back(Node{label, 0, parent, {}});
    nodes[parent].children.emplace(label, nodes.size() - 1);
    return nodes.size() - 1;
  }

  std::optional<std::size_t> find_path(const std::vector<std::string>& labels) const {
    std::size_t cur = 0;
    for (const auto& l : labels) {
      auto it = nodes[cur].children.find(l);
      if (it == nodes[cur].children.end()) return std::nullopt;
      cur = it->second;
    }
    return cur;
  }
};

inline void add_to_call_tree(AggregatedCallTree& tree, const ExecutionTrace& trace) {
  std::vector<std::size_t> node_of(trace.executions.size());
  for (std::size_t i = 0; i < trace.executions.size(); ++i) {
    const auto& e = trace.executions[i];
    // Parents precede children in eoi order for both reconstruction modes.
    std::size_t parent = e.parent ? node_of[*e.parent] : 0;
    node_of[i] = tree.child(parent, execution_label(e.record));
    ++tree.nodes[node_of[i]].weight;
  }
  ++tree.nodes[0].weight;
}

inline AggregatedCallTree build_call_tree(const std::vector<ExecutionTrace>& traces) {
  AggregatedCallTree tree;
  for (const auto& t : traces) add_to_call_tree(tree, t);
  return tree;
}

// Hostname-level call graph. Roots are called from 'Entry'.
struct DependencyGraph {
  std::map<std::string, std::size_t> nodes{{std::string(kEntryLabel), 0}};  // host -> executions
  std::map<std::pair<std::string, std::string>, std::size_t> edges;

  std::size_t edge_weight(const std::string& from, const std::string& to) const {
    auto it = edges.find({from, to});
    return it == edges.end() ? 0 : it->second;
  }

  std::size_t total_edge_weight() const {
    std::size_t sum = 0;
    for (const auto& [_, w] : edges) sum += w;
    return sum;
  }
};

inline DependencyGraph build_dependency_graph(const std::vector<ExecutionTrace>& traces) {
  DependencyGraph graph;
  for (const auto& t : traces) {
    for (const auto& e : t.executions) {
      const std::string& callee = e.record.hostname;
      const std::string caller =
          e.parent ? t.executions[*e.parent].record.hostname : std::string(kEntryLabel);
      ++graph.nodes[callee];
      ++graph.edges[{caller, callee}];
    }
  }
  return graph;
}

namespace detail {

inline std::string dot_quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

struct DotGraph {
  std::vector<std::pair<std::string, std::string>> nodes;  // id, label
  std::vector<std::tuple<std::string, std::string, std::size_t>> edges;

  std::string render() {
    std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) {
      return std::tie(a.second, a.first) < std::tie(b.second, b.first);
    });
    std::sort(edges.begin(), edges.end());
    std::string out = "digraph G {\n  node [shape=box];\n";
    for (const auto& [id, label] : nodes) {
      out += "  " + dot_quote(id) + " [label=" + dot_quote(label) + "];\n";
    }
    for (const auto& [from, to, weight] : edges) {
      out += "  " + dot_quote(from) + " -> " + dot_quote(to) + " [label=\"" +
             std::to_string(weight) + "\"];\n";
    }
    out += "}\n";
    return out;
  }
};

// Path ids join labels below 'Entry' with '/', escaping '/' and '\' inside
// labels so distinct paths never share an id.
inline std::string path_component(std::string_view label) {
  std::string out;
  for (char c : label) {
    if (c == '/' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

// DOT digraph with one node per call path; edge labels are call counts.
inline std::string emit_dot(const AggregatedCallTree& tree) {
  detail::DotGraph g;
  std::vector<std::string> ids(tree.nodes.size());
  ids[0] = std::string(kEntryLabel);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.parent) {
      const auto component = detail::path_component(n.label);
      ids[i] = *n.parent == 0 ? component : ids[*n.parent] + "/" + component;
    }
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    g.nodes.emplace_back(ids[i], n.label);
    if (n.parent) g.edges.emplace_back(ids[*n.parent], ids[i], n.weight);
  }
  return g.render();
}

inline std::string emit_dot(const DependencyGraph& graph) {
  detail::DotGraph g;
  for (const auto& [host, _] : graph.nodes) g.nodes.emplace_back(host, host);
  for (const auto& [edge, weight] : graph.edges) g.edges.emplace_back(edge.first, edge.second, weight);
  return g.render();
}

}  // namespace span2records
