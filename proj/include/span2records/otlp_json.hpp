#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <iterator>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "span2records/otlp_common.hpp"

namespace span2records {

namespace detail {

using Json = nlohmann::json;

class JsonReader {
 public:
  explicit JsonReader(ParseResult& result) : result_(result) {}

  void request(const Json& root) {
    expect_object(root, "");
    const Json* resource_spans = member(root, "resourceSpans", "");
    if (resource_spans == nullptr) return;
    expect_array(*resource_spans, "/resourceSpans");
    for (std::size_t i = 0; i < resource_spans->size(); ++i) {
      this->resource_spans((*resource_spans)[i], "/resourceSpans/" + std::to_string(i));
    }
  }

 private:
  [[noreturn]] static void fail(const std::string& path, const std::string& reason) {
    throw MalformedPayload(path.empty() ? "/" : path, reason);
  }

  static void expect_object(const Json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected object");
  }

  static void expect_array(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected array");
  }

  // Absent and null members are treated alike, as proto3 defaults.
  static const Json* member(const Json& obj, const char* key, const std::string&) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
  }

  static std::string text(const Json& obj, const char* key, const std::string& path) {
    const Json* v = member(obj, key, path);
    if (v == nullptr) return {};
    if (!v->is_string()) fail(path + "/" + key, "expected string");
    return v->get<std::string>();
  }

  template <typename Int>
  static Int integer(const Json& obj, const char* key, const std::string& path) {
    const Json* v = member(obj, key, path);
    if (v == nullptr) return 0;
    return integer_value<Int>(*v, path + "/" + key);
  }

  // The JSON mapping renders 64-bit integers as strings; plain numbers are
  // accepted too.
  template <typename Int>
  static Int integer_value(const Json& v, const std::string& path) {
    if (v.is_number_integer()) {
      if constexpr (std::is_unsigned_v<Int>) {
        if (v.is_number_unsigned()) return v.get<Int>();
        fail(path, "expected non-negative integer");
      } else {
        if (v.is_number_unsigned() &&
            v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
          fail(path, "integer out of range");
        }
        return v.get<Int>();
      }
    }
    if (v.is_string()) {
      const auto& s = v.get_ref<const std::string&>();
      Int out{};
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        fail(path, "cannot parse integer '" + s + "'");
      }
      return out;
    }
    fail(path, "expected integer");
  }

  static double double_value(const Json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto& s = v.get_ref<const std::string&>();
      if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
      if (s == "Infinity") return std::numeric_limits<double>::infinity();
      if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
    }
    fail(path, "expected double");
  }

  void attributes(const Json& obj, const std::string& path, Attributes& out) {
    const Json* list = member(obj, "attributes", path);
    if (list == nullptr) return;
    const std::string list_path = path + "/attributes";
    expect_array(*list, list_path);
    for (std::size_t i = 0; i < list->size(); ++i) {
      const Json& kv = (*list)[i];
      const std::string kv_path = list_path + "/" + std::to_string(i);
      expect_object(kv, kv_path);
      std::string key = text(kv, "key", kv_path);
      const Json* value = member(kv, "value", kv_path);
      if (value == nullptr) {
        ++result_.dropped_attributes;
        continue;
      }
      const std::string value_path = kv_path + "/value";
      expect_object(*value, value_path);
      if (auto it = value->find("stringValue"); it != value->end()) {
        if (!it->is_string()) fail(value_path + "/stringValue", "expected string");
        out.insert_or_assign(std::move(key), it->get<std::string>());
      } else if (auto it = value->find("boolValue"); it != value->end()) {
        if (!it->is_boolean()) fail(value_path + "/boolValue", "expected boolean");
        out.insert_or_assign(std::move(key), it->get<bool>());
      } else if (auto it = value->find("intValue"); it != value->end()) {
        out.insert_or_assign(std::move(key),
                             integer_value<std::int64_t>(*it, value_path + "/intValue"));
      } else if (auto it = value->find("doubleValue"); it != value->end()) {
        out.insert_or_assign(std::move(key), double_value(*it, value_path + "/doubleValue"));
      } else {
        ++result_.dropped_attributes;
      }
    }
  }

  void resource_spans(const Json& rs, const std::string& path) {
    expect_object(rs, path);
    Attributes resource;
    if (const Json* r = member(rs, "resource", path)) {
      expect_object(*r, path + "/resource");
      attributes(*r, path + "/resource", resource);
    }
    const Json* scopes = member(rs, "scopeSpans", path);
    if (scopes == nullptr) return;
    expect_array(*scopes, path + "/scopeSpans");
    for (std::size_t i = 0; i < scopes->size(); ++i) {
      const Json& scope = (*scopes)[i];
      const std::string scope_path = path + "/scopeSpans/" + std::to_string(i);
      expect_object(scope, scope_path);
      const Json* spans = member(scope, "spans", scope_path);
      if (spans == nullptr) continue;
      expect_array(*spans, scope_path + "/spans");
      for (std::size_t k = 0; k < spans->size(); ++k) {
        span((*spans)[k], scope_path + "/spans/" + std::to_string(k), resource);
      }
    }
  }

  void span(const Json& js, const std::string& path, const Attributes& resource) {
    expect_object(js, path);
    OtelSpan span;
    bool ids_ok = true;
    if (auto id = TraceId::from_hex(text(js, "traceId", path))) {
      span.trace_id = *id;
    } else {
      ids_ok = false;
    }
    if (auto id = SpanId::from_hex(text(js, "spanId", path))) {
      span.span_id = *id;
    } else {
      ids_ok = false;
    }
    std::string parent = text(js, "parentSpanId", path);
    if (!parent.empty()) {
      if (auto id = SpanId::from_hex(parent)) {
        if (!id->is_zero()) span.parent_span_id = *id;
      } else {
        ids_ok = false;
      }
    }
    span.name = text(js, "name", path);
    if (const Json* kind = member(js, "kind", path)) {
      if (kind->is_string() && kind->get_ref<const std::string&>().starts_with("SPAN_KIND_")) {
        static constexpr std::pair<std::string_view, int> kNames[] = {
            {"SPAN_KIND_INTERNAL", 1}, {"SPAN_KIND_SERVER", 2},   {"SPAN_KIND_CLIENT", 3},
            {"SPAN_KIND_PRODUCER", 4}, {"SPAN_KIND_CONSUMER", 5}};
        int value = 0;
        for (auto [name, v] : kNames) {
          if (kind->get_ref<const std::string&>() == name) value = v;
        }
        span.kind = span_kind_from_otlp(value);
      } else {
        span.kind = span_kind_from_otlp(integer_value<std::int64_t>(*kind, path + "/kind"));
      }
    }
    span.start_epoch_nanos = integer<std::uint64_t>(js, "startTimeUnixNano", path);
    span.end_epoch_nanos = integer<std::uint64_t>(js, "endTimeUnixNano", path);
    attributes(js, path, span.attributes);
    if (const Json* events = member(js, "events", path)) {
      expect_array(*events, path + "/events");
      for (std::size_t i = 0; i < events->size(); ++i) {
        const Json& je = (*events)[i];
        const std::string event_path = path + "/events/" + std::to_string(i);
        expect_object(je, event_path);
        SpanEvent event;
        event.epoch_nanos = integer<std::uint64_t>(je, "timeUnixNano", event_path);
        event.name = text(je, "name", event_path);
        attributes(je, event_path, event.attributes);
        span.events.push_back(std::move(event));
      }
    }
    span.resource_attributes = resource;
    accept_span(result_, std::move(span), ids_ok);
  }

  ParseResult& result_;
};

inline Json attributes_to_json(const Attributes& attrs) {
  Json list = Json::array();
  for (const auto& [key, value] : attrs) {
    Json any = std::visit(
        [](const auto& v) -> Json {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::string>) return {{"stringValue", v}};
          if constexpr (std::is_same_v<T, bool>) return {{"boolValue", v}};
          if constexpr (std::is_same_v<T, std::int64_t>) {
            return {{"intValue", std::to_string(v)}};
          }
          if constexpr (std::is_same_v<T, double>) return {{"doubleValue", v}};
        },
        value);
    list.push_back({{"key", key}, {"value", std::move(any)}});
  }
  return list;
}

}  // namespace detail

// Decodes an ExportTraceServiceRequest in the OTLP JSON mapping (hex ids,
// decimal-string timestamps, lowerCamelCase field names). Resource
// attributes are copied onto each span of that resource.
inline ParseResult parse_otlp_json(std::string_view payload) {
  detail::Json root;
  try {
    root = detail::Json::parse(payload);
  } catch (const detail::Json::parse_error& e) {
    throw MalformedPayload("byte " + std::to_string(e.byte), "invalid JSON");
  }
  ParseResult result;
  detail::JsonReader(result).request(root);
  return result;
}

// Encodes spans as one OTLP JSON request. Spans sharing identical resource
// attributes are grouped under one resourceSpans entry, in order of first
// appearance; span order is preserved within each group.
inline std::string to_otlp_json(const std::vector<OtelSpan>& spans, int indent = -1) {
  using detail::Json;
  std::vector<std::pair<const Attributes*, Json>> groups;
  for (const auto& s : spans) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return *g.first == s.resource_attributes; });
    if (it == groups.end()) {
      groups.emplace_back(&s.resource_attributes, Json::array());
      it = std::prev(groups.end());
    }
    Json js = {
        {"traceId", s.trace_id.to_hex()},
        {"spanId", s.span_id.to_hex()},
        {"name", s.name},
        {"kind", span_kind_to_otlp(s.kind)},
        {"startTimeUnixNano", std::to_string(s.start_epoch_nanos)},
        {"endTimeUnixNano", std::to_string(s.end_epoch_nanos)},
    };
    if (s.parent_span_id) js["parentSpanId"] = s.parent_span_id->to_hex();
    if (!s.attributes.empty()) js["attributes"] = detail::attributes_to_json(s.attributes);
    if (!s.events.empty()) {
      Json events = Json::array();
      for (const auto& e : s.events) {
        Json je = {{"timeUnixNano", std::to_string(e.epoch_nanos)}, {"name", e.name}};
        if (!e.attributes.empty()) je["attributes"] = detail::attributes_to_json(e.attributes);
        events.push_back(std::move(je));
      }
      js["events"] = std::move(events);
    }
    it->second.push_back(std::move(js));
  }
  Json resource_spans = Json::array();
  for (auto& [resource, group] : groups) {
    resource_spans.push_back({
        {"resource", {{"attributes", detail::attributes_to_json(*resource)}}},
        {"scopeSpans", Json::array({{{"scope", {{"name", "span2records"}}},
                                     {"spans", std::move(group)}}})},
    });
  }
  return Json{{"resourceSpans", std::move(resource_spans)}}.dump(indent);
}

}  // namespace span2records
