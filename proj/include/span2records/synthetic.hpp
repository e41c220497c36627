#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "span2records/otlp_json.hpp"
#include "span2records/span_model.hpp"

namespace span2records::synthetic {

enum class Pattern { kSequential, kNested, kFanout, kFig3, kRandom };

inline std::optional<Pattern> parse_pattern(std::string_view name) {
  if (name == "sequential") return Pattern::kSequential;
  if (name == "nested") return Pattern::kNested;
  if (name == "fanout") return Pattern::kFanout;
  if (name == "fig3") return Pattern::kFig3;
  if (name == "random") return Pattern::kRandom;
  return std::nullopt;
}

struct GeneratorSpec {
  Pattern pattern = Pattern::kSequential;
  std::size_t size = 3;   // children (sequential, fanout) or span count (random)
  std::size_t depth = 3;  // chain length (nested)
  std::uint64_t seed = 1;
  std::uint64_t base_epoch_nanos = 0;
  double overlap_probability = 0.3;  // random: chance a child overlaps its predecessor
};

namespace detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Inclusive range. Plain modulo keeps sequences identical across standard
  // libraries, unlike std::uniform_int_distribution.
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = hi - lo + 1;
    return span == 0 ? engine_() : lo + engine_() % span;
  }

  bool chance(double p) {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p;
  }

 private:
  std::mt19937_64 engine_;
};

class Builder {
 public:
  Builder(std::uint64_t seed, std::uint64_t base)
      : rng_(seed ^ 0x5DEECE66DULL), base_(base) {
    std::uint64_t high = rng_.next();
    std::uint64_t low = rng_.next();
    if (high == 0 && low == 0) low = 1;
    trace_id_ = TraceId(high, low);
  }

  Rng& rng() { return rng_; }

  OtelSpan& add(std::string name, std::optional<std::size_t> parent, std::uint64_t start,
                std::uint64_t end, std::string_view service, std::string_view peer) {
    OtelSpan s;
    s.trace_id = trace_id_;
    std::uint64_t id;
    do {
      id = rng_.next();
    } while (id == 0 || !used_.insert(id).second);
    s.span_id = SpanId(id);
    if (parent) s.parent_span_id = spans_[*parent].span_id;
    s.name = std::move(name);
    s.kind = parent ? SpanKind::kInternal : SpanKind::kServer;
    s.start_epoch_nanos = base_ + start;
    s.end_epoch_nanos = base_ + end;
    s.resource_attributes.emplace("service.name", std::string(service));
    s.attributes.emplace("net.peer.name", std::string(peer));
    spans_.push_back(std::move(s));
    return spans_.back();
  }

  std::vector<OtelSpan> take() { return std::move(spans_); }

 private:
  Rng rng_;
  std::uint64_t base_;
  TraceId trace_id_;
  std::unordered_set<std::uint64_t> used_;
  std::vector<OtelSpan> spans_;
};

inline constexpr std::array<std::string_view, 4> kServices = {
    "frontend", "product-service", "recommendation-service", "cart-service"};

inline void random_children(Builder& b, const GeneratorSpec& spec, std::size_t node,
                            const std::vector<std::vector<std::size_t>>& children,
                            std::vector<std::pair<std::uint64_t, std::uint64_t>>& when,
                            std::vector<std::size_t>& order) {
  const auto& kids = children[node];
  if (kids.empty()) return;
  auto& rng = b.rng();
  const auto [s, e] = when[node];
  const std::uint64_t slot = (e - s) / kids.size();
  for (std::size_t i = 0; i < kids.size(); ++i) {
    std::uint64_t start;
    std::uint64_t end;
    if (slot < 4) {
      start = rng.between(s, e);
      end = rng.between(start, e);
    } else if (i > 0 && rng.chance(spec.overlap_probability)) {
      const auto [ps, pe] = when[kids[i - 1]];
      start = rng.between(ps, pe);
      end = rng.between(start + (e - start) / 4, e);
    } else {
      // Strictly inside the slot so sequential siblings never touch.
      const std::uint64_t lo = s + i * slot + 1;
      const std::uint64_t hi = s + (i + 1) * slot - 1;
      start = rng.between(lo, lo + (hi - lo) / 4);
      end = rng.between(hi - (hi - lo) / 4, hi);
    }
    when[kids[i]] = {start, end};
    order.push_back(kids[i]);
  }
  for (std::size_t k : kids) random_children(b, spec, k, children, when, order);
}

}  // namespace detail

// Deterministic span set for one trace. Every span carries the resource
// attribute `service.name` and the span attribute `net.peer.name`.
inline std::vector<OtelSpan> generate(const GeneratorSpec& spec) {
  if (spec.size < 1 || spec.depth < 1) throw std::invalid_argument("size and depth must be >= 1");
  detail::Builder b(spec.seed, spec.base_epoch_nanos);
  switch (spec.pattern) {
    case Pattern::kSequential: {
      const std::uint64_t n = spec.size;
      b.add("root", std::nullopt, 0, 100 * n + 10, "frontend", "frontend");
      for (std::uint64_t i = 0; i < n; ++i) {
        b.add("child" + std::to_string(i + 1), 0, 100 * i + 10, 100 * i + 90, "frontend",
              "backend");
      }
      break;
    }
    case Pattern::kNested: {
      const std::uint64_t d = spec.depth;
      for (std::uint64_t k = 0; k < d; ++k) {
        b.add("level" + std::to_string(k), k == 0 ? std::nullopt : std::optional<std::size_t>(k - 1),
              10 * k, 20 * d - 10 * k, "frontend", "level-host-" + std::to_string(k));
      }
      break;
    }
    case Pattern::kFanout: {
      const std::uint64_t n = spec.size;
      b.add("root", std::nullopt, 0, 200 + 10 * n, "frontend", "frontend");
      for (std::uint64_t i = 0; i < n; ++i) {
        b.add("worker" + std::to_string(i + 1), 0, 10 + i, 100 + 10 * n, "frontend",
              "worker-host");
      }
      break;
    }
    case Pattern::kFig3: {
      // Lanes of the figure become peers: call1/call3 run on S1, call2 on S2,
      // call4 on S4.
      b.add("root", std::nullopt, 0, 1000, "fig3", "root");
      b.add("call1", 0, 100, 400, "fig3", "S1");
      b.add("call2", 0, 200, 900, "fig3", "S2");
      b.add("call4", 2, 300, 620, "fig3", "S4");
      b.add("call3", 0, 500, 800, "fig3", "S1");
      break;
    }
    case Pattern::kRandom: {
      auto& rng = b.rng();
      const std::size_t n = spec.size;
      std::vector<std::vector<std::size_t>> children(n);
      std::vector<std::size_t> parent(n, 0);
      for (std::size_t i = 1; i < n; ++i) {
        parent[i] = static_cast<std::size_t>(rng.between(0, i - 1));
        children[parent[i]].push_back(i);
      }
      std::vector<std::pair<std::uint64_t, std::uint64_t>> when(n);
      when[0] = {0, std::uint64_t{1} << 40};
      std::vector<std::size_t> order{0};
      detail::random_children(b, spec, 0, children, when, order);
      // Emit parents before children so parent span ids exist.
      std::vector<std::size_t> emitted(n);
      for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t v = order[k];
        const auto service = detail::kServices[rng.between(0, detail::kServices.size() - 1)];
        const auto peer = detail::kServices[rng.between(0, detail::kServices.size() - 1)];
        b.add("op" + std::to_string(rng.between(1, 6)),
              v == 0 ? std::nullopt : std::optional<std::size_t>(emitted[parent[v]]),
              when[v].first, when[v].second, service, peer);
        emitted[v] = k;
      }
      break;
    }
  }
  return b.take();
}

inline std::string generate_otlp_json(const GeneratorSpec& spec, int indent = 2) {
  return to_otlp_json(generate(spec), indent);
}

}  // namespace span2records::synthetic
