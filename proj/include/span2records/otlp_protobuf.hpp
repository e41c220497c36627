#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "span2records/otlp_common.hpp"
#include "span2records/protobuf_wire.hpp"

namespace span2records {

namespace detail {

// Field numbers from opentelemetry/proto/{collector/trace,trace,resource,common}/v1.
class ProtobufReader {
 public:
  explicit ProtobufReader(ParseResult& result) : result_(result) {}

  void request(wire::Reader r) {
    while (!r.done()) {
      auto tag = r.tag();
      if (tag.field == 1) {  // resource_spans
        r.expect(tag, wire::WireType::kLengthDelimited);
        resource_spans(r.message());
      } else {
        r.skip(tag.type);
      }
    }
  }

 private:
  using W = wire::WireType;

  void resource_spans(wire::Reader r) {
    Attributes resource;
    std::vector<wire::Reader> scopes;
    while (!r.done()) {
      auto tag = r.tag();
      switch (tag.field) {
        case 1: {  // resource
          r.expect(tag, W::kLengthDelimited);
          auto res = r.message();
          while (!res.done()) {
            auto t = res.tag();
            if (t.field == 1) {
              res.expect(t, W::kLengthDelimited);
              key_value(res.message(), resource);
            } else {
              res.skip(t.type);
            }
          }
          break;
        }
        case 2:  // scope_spans
          r.expect(tag, W::kLengthDelimited);
          scopes.push_back(r.message());
          break;
        default:
          r.skip(tag.type);
      }
    }
    // The resource may follow its scope spans on the wire.
    for (auto& scope : scopes) scope_spans(scope, resource);
  }

  void scope_spans(wire::Reader r, const Attributes& resource) {
    while (!r.done()) {
      auto tag = r.tag();
      if (tag.field == 2) {  // spans
        r.expect(tag, W::kLengthDelimited);
        span(r.message(), resource);
      } else {
        r.skip(tag.type);
      }
    }
  }

  void span(wire::Reader r, const Attributes& resource) {
    OtelSpan span;
    bool ids_ok = true;
    bool saw_trace = false;
    bool saw_span = false;
    while (!r.done()) {
      auto tag = r.tag();
      switch (tag.field) {
        case 1: {
          r.expect(tag, W::kLengthDelimited);
          auto id = TraceId::from_bytes(r.bytes());
          if (id) span.trace_id = *id;
          ids_ok = ids_ok && id.has_value();
          saw_trace = true;
          break;
        }
        case 2: {
          r.expect(tag, W::kLengthDelimited);
          auto id = SpanId::from_bytes(r.bytes());
          if (id) span.span_id = *id;
          ids_ok = ids_ok && id.has_value();
          saw_span = true;
          break;
        }
        case 4: {
          r.expect(tag, W::kLengthDelimited);
          auto bytes = r.bytes();
          span.parent_span_id.reset();
          if (bytes.empty()) break;
          auto id = SpanId::from_bytes(bytes);
          if (!id) {
            ids_ok = false;
          } else if (!id->is_zero()) {
            span.parent_span_id = *id;
          }
          break;
        }
        case 5:
          r.expect(tag, W::kLengthDelimited);
          span.name = r.string();
          break;
        case 6:
          r.expect(tag, W::kVarint);
          span.kind = span_kind_from_otlp(static_cast<std::int32_t>(r.varint()));
          break;
        case 7:
          r.expect(tag, W::kFixed64);
          span.start_epoch_nanos = r.fixed64();
          break;
        case 8:
          r.expect(tag, W::kFixed64);
          span.end_epoch_nanos = r.fixed64();
          break;
        case 9:
          r.expect(tag, W::kLengthDelimited);
          key_value(r.message(), span.attributes);
          break;
        case 11:
          r.expect(tag, W::kLengthDelimited);
          span.events.push_back(event(r.message()));
          break;
        default:
          r.skip(tag.type);
      }
    }
    // Empty bytes are the proto3 default and mean "unset", same as JSON.
    if (!saw_trace || !saw_span) ids_ok = false;
    span.resource_attributes = resource;
    accept_span(result_, std::move(span), ids_ok);
  }

  SpanEvent event(wire::Reader r) {
    SpanEvent event;
    while (!r.done()) {
      auto tag = r.tag();
      switch (tag.field) {
        case 1:
          r.expect(tag, W::kFixed64);
          event.epoch_nanos = r.fixed64();
          break;
        case 2:
          r.expect(tag, W::kLengthDelimited);
          event.name = r.string();
          break;
        case 3:
          r.expect(tag, W::kLengthDelimited);
          key_value(r.message(), event.attributes);
          break;
        default:
          r.skip(tag.type);
      }
    }
    return event;
  }

  void key_value(wire::Reader r, Attributes& out) {
    std::string key;
    std::optional<AttributeValue> value;
    while (!r.done()) {
      auto tag = r.tag();
      if (tag.field == 1) {
        r.expect(tag, W::kLengthDelimited);
        key = r.string();
      } else if (tag.field == 2) {
        r.expect(tag, W::kLengthDelimited);
        value = any_value(r.message());
      } else {
        r.skip(tag.type);
      }
    }
    if (!value) {
      ++result_.dropped_attributes;
      return;
    }
    out.insert_or_assign(std::move(key), std::move(*value));
  }

  // Last member of the oneof wins, as in the reference implementation.
  static std::optional<AttributeValue> any_value(wire::Reader r) {
    std::optional<AttributeValue> value;
    while (!r.done()) {
      auto tag = r.tag();
      switch (tag.field) {
        case 1:
          r.expect(tag, W::kLengthDelimited);
          value = r.string();
          break;
        case 2:
          r.expect(tag, W::kVarint);
          value = r.varint() != 0;
          break;
        case 3:
          r.expect(tag, W::kVarint);
          value = static_cast<std::int64_t>(r.varint());
          break;
        case 4:
          r.expect(tag, W::kFixed64);
          value = r.float64();
          break;
        case 5:
        case 6:
        case 7:  // array, kvlist and bytes values are outside the model
          r.skip(tag.type);
          value.reset();
          break;
        default:
          r.skip(tag.type);
      }
    }
    return value;
  }

  ParseResult& result_;
};

}  // namespace detail

// Decodes a binary ExportTraceServiceRequest. Produces the same spans as
// parse_otlp_json on the equivalent JSON payload.
inline ParseResult parse_otlp_protobuf(std::span<const std::uint8_t> payload) {
  ParseResult result;
  detail::ProtobufReader(result).request(wire::Reader(payload));
  return result;
}

inline ParseResult parse_otlp_protobuf(std::string_view payload) {
  return parse_otlp_protobuf(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
}

}  // namespace span2records
