#pragma once

#include <cstddef>
#include <vector>

#include "span2records/span_model.hpp"

namespace span2records {

// Spans decoded from one ExportTraceServiceRequest. Invalid spans and
// attribute values outside the supported value model (arrays, key/value
// lists, bytes) are counted rather than failing the whole payload.
struct ParseResult {
  std::vector<OtelSpan> spans;
  std::size_t skipped_spans = 0;
  std::size_t dropped_attributes = 0;
};

namespace detail {

inline void accept_span(ParseResult& result, OtelSpan span, bool ids_ok) {
  if (!ids_ok) {
    ++result.skipped_spans;
    return;
  }
  try {
    validate_span(span);
  } catch (const InvalidSpan&) {
    ++result.skipped_spans;
    return;
  }
  result.spans.push_back(std::move(span));
}

}  // namespace detail

}  // namespace span2records
