#pragma once

// Umbrella header.

#include "span2records/converter.hpp"
#include "span2records/error.hpp"
#include "span2records/ids.hpp"
#include "span2records/kieker_record.hpp"
#include "span2records/monitoring_log.hpp"
#include "span2records/otlp_json.hpp"
#include "span2records/otlp_protobuf.hpp"
#include "span2records/receiver.hpp"
#include "span2records/span_model.hpp"
#include "span2records/synthetic.hpp"
#include "span2records/trace_analysis.hpp"
#include "span2records/trace_buffer.hpp"
