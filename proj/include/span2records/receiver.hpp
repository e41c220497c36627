#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <stop_token>
#include <string>
#include <thread>

#include "httplib.h"
#include "span2records/otlp_json.hpp"
#include "span2records/otlp_protobuf.hpp"
#include "span2records/trace_buffer.hpp"

namespace span2records {

inline constexpr std::string_view kTracesPath = "/v1/traces";
inline constexpr std::string_view kProtobufContentType = "application/x-protobuf";
inline constexpr std::string_view kJsonContentType = "application/json";

struct ReceiverOptions {
  std::string host = "127.0.0.1";
  int port = 4318;  // 0 picks a free port
  TraceBuffer::Clock::duration completion_timeout = std::chrono::seconds(10);
  // Period of the background flush; zero disables it (flush via sweep()).
  TraceBuffer::Clock::duration sweep_interval = std::chrono::milliseconds(100);
  std::function<TraceBuffer::Clock::time_point()> clock = [] {
    return TraceBuffer::Clock::now();
  };
};

struct ReceiverStats {
  std::size_t requests = 0;
  std::size_t rejected_requests = 0;
  std::size_t accepted_spans = 0;
  std::size_t skipped_spans = 0;
  std::size_t replaced_spans = 0;
  std::size_t dropped_attributes = 0;
  std::size_t flushed_traces = 0;
};

// OTLP/HTTP trace receiver. Spans from POST /v1/traces are buffered per
// trace and handed to the sink once a trace has been idle for the completion
// timeout, and for all remaining traces on stop(). The sink is never called
// concurrently with itself.
class OtlpHttpReceiver {
 public:
  using Sink = std::function<void(CompletedTrace)>;

  OtlpHttpReceiver(ReceiverOptions options, Sink sink)
      : options_(std::move(options)),
        sink_(std::move(sink)),
        buffer_(options_.completion_timeout) {
    // httplib's default adds SO_REUSEPORT, which lets a second receiver
    // share a busy port instead of failing to bind.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    server_.Post(std::string(kTracesPath),
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(req, res);
                 });
  }

  OtlpHttpReceiver(const OtlpHttpReceiver&) = delete;
  OtlpHttpReceiver& operator=(const OtlpHttpReceiver&) = delete;

  ~OtlpHttpReceiver() { stop(); }

  // Binds and starts serving; returns the bound port. Throws IoError if the
  // address cannot be bound.
  int start() {
    int port = options_.port;
    if (port == 0) {
      port = server_.bind_to_any_port(options_.host);
    } else if (!server_.bind_to_port(options_.host, port)) {
      port = -1;
    }
    if (port < 0) {
      throw IoError(options_.host + ":" + std::to_string(options_.port), "cannot bind");
    }
    port_ = port;
    listener_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    if (options_.sweep_interval.count() > 0) {
      sweeper_ = std::jthread([this](std::stop_token stop) {
        std::mutex m;
        std::condition_variable_any cv;
        std::unique_lock lock(m);
        while (!cv.wait_for(lock, stop, options_.sweep_interval,
                            [&stop] { return stop.stop_requested(); })) {
          sweep();
        }
      });
    }
    return port_;
  }

  // Flushes every trace that has reached the completion timeout.
  void sweep() {
    std::lock_guard sink_lock(sink_mutex_);
    std::vector<CompletedTrace> due;
    {
      std::lock_guard lock(buffer_mutex_);
      due = buffer_.take_expired(options_.clock());
    }
    deliver(std::move(due));
  }

  // Stops serving and flushes all pending traces. Idempotent.
  void stop() {
    if (stopped_.exchange(true)) return;
    if (sweeper_.joinable()) {
      sweeper_.request_stop();
      sweeper_.join();
    }
    if (listener_.joinable()) {
      server_.stop();
      listener_.join();
    }
    std::lock_guard sink_lock(sink_mutex_);
    std::vector<CompletedTrace> rest;
    {
      std::lock_guard lock(buffer_mutex_);
      rest = buffer_.take_all();
    }
    deliver(std::move(rest));
  }

  int port() const noexcept { return port_; }

  ReceiverStats stats() const {
    std::lock_guard lock(buffer_mutex_);
    return stats_;
  }

  std::size_t pending_traces() const {
    std::lock_guard lock(buffer_mutex_);
    return buffer_.pending_traces();
  }

 private:
  static std::string media_type(const std::string& header) {
    std::string out = header.substr(0, header.find(';'));
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    out.erase(out.begin(), std::find_if(out.begin(), out.end(), not_space));
    out.erase(std::find_if(out.rbegin(), out.rend(), not_space).base(), out.end());
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  }

  void handle(const httplib::Request& req, httplib::Response& res) {
    const std::string media = media_type(req.get_header_value("Content-Type"));
    const bool is_json = media == kJsonContentType;
    if (!is_json && media != kProtobufContentType) {
      reject(res, 415, "unsupported content type '" + media + "'");
      return;
    }
    ParseResult parsed;
    try {
      parsed = is_json ? parse_otlp_json(req.body) : parse_otlp_protobuf(req.body);
    } catch (const MalformedPayload& e) {
      reject(res, 400, e.what());
      return;
    }
    {
      std::lock_guard lock(buffer_mutex_);
      ++stats_.requests;
      stats_.accepted_spans += parsed.spans.size();
      stats_.skipped_spans += parsed.skipped_spans;
      stats_.dropped_attributes += parsed.dropped_attributes;
      stats_.replaced_spans += buffer_.add(std::move(parsed.spans), options_.clock());
    }
    // Empty ExportTraceServiceResponse in the request's encoding.
    if (is_json) {
      res.set_content("{}", std::string(kJsonContentType));
    } else {
      res.set_content("", std::string(kProtobufContentType));
    }
    res.status = 200;
  }

  void reject(httplib::Response& res, int status, const std::string& message) {
    {
      std::lock_guard lock(buffer_mutex_);
      ++stats_.requests;
      ++stats_.rejected_requests;
    }
    res.status = status;
    res.set_content(message, "text/plain");
  }

  // Caller holds sink_mutex_.
  void deliver(std::vector<CompletedTrace> traces) {
    for (auto& t : traces) {
      {
        std::lock_guard lock(buffer_mutex_);
        ++stats_.flushed_traces;
      }
      sink_(std::move(t));
    }
  }

  ReceiverOptions options_;
  Sink sink_;
  httplib::Server server_;
  TraceBuffer buffer_;
  ReceiverStats stats_;
  mutable std::mutex buffer_mutex_;
  std::mutex sink_mutex_;
  std::thread listener_;
  std::jthread sweeper_;
  std::atomic<bool> stopped_{false};
  int port_ = -1;
};

// Runs a receiver until `stop` is requested, then flushes and returns.
// `on_ready` receives the bound port.
inline void serve_receiver(ReceiverOptions options, OtlpHttpReceiver::Sink sink,
                           std::stop_token stop,
                           const std::function<void(int)>& on_ready = nullptr) {
  OtlpHttpReceiver receiver(std::move(options), std::move(sink));
  const int port = receiver.start();
  if (on_ready) on_ready(port);
  std::mutex m;
  std::condition_variable_any cv;
  std::unique_lock lock(m);
  cv.wait(lock, stop, [] { return false; });
  receiver.stop();
}

}  // namespace span2records
