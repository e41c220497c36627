#pragma once

#include <array>
#include <compare>
#include <functional>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace span2records {

namespace detail {

inline int hex_digit(char c) noexcept {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline void append_hex(std::string& out, std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  for (int shift = 60; shift >= 0; shift -= 4) {
    out.push_back(kDigits[(v >> shift) & 0xF]);
  }
}

// Parses exactly 16 hex characters.
inline std::optional<std::uint64_t> parse_hex64(std::string_view text) {
  if (text.size() != 16) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : text) {
    int d = hex_digit(c);
    if (d < 0) return std::nullopt;
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

// Big-endian decode of exactly 8 bytes.
inline std::uint64_t load_be64(std::span<const std::uint8_t> bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | bytes[i];
  return v;
}

}  // namespace detail

// 128-bit W3C trace id. Text form is 32 lowercase hex characters.
class TraceId {
 public:
  constexpr TraceId() = default;
  constexpr TraceId(std::uint64_t high, std::uint64_t low) : high_(high), low_(low) {}

  static std::optional<TraceId> from_hex(std::string_view text) {
    if (text.size() != 32) return std::nullopt;
    auto high = detail::parse_hex64(text.substr(0, 16));
    auto low = detail::parse_hex64(text.substr(16));
    if (!high || !low) return std::nullopt;
    return TraceId(*high, *low);
  }

  static std::optional<TraceId> from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 16) return std::nullopt;
    return TraceId(detail::load_be64(bytes.first(8)), detail::load_be64(bytes.subspan(8)));
  }

  std::string to_hex() const {
    std::string out;
    out.reserve(32);
    detail::append_hex(out, high_);
    detail::append_hex(out, low_);
    return out;
  }

  constexpr std::uint64_t high() const noexcept { return high_; }
  constexpr std::uint64_t low() const noexcept { return low_; }
  constexpr bool is_zero() const noexcept { return high_ == 0 && low_ == 0; }

  friend constexpr auto operator<=>(const TraceId&, const TraceId&) = default;

 private:
  std::uint64_t high_ = 0;
  std::uint64_t low_ = 0;
};

// 64-bit span id. Text form is 16 lowercase hex characters.
class SpanId {
 public:
  constexpr SpanId() = default;
  constexpr explicit SpanId(std::uint64_t value) : value_(value) {}

  static std::optional<SpanId> from_hex(std::string_view text) {
    auto v = detail::parse_hex64(text);
    if (!v) return std::nullopt;
    return SpanId(*v);
  }

  static std::optional<SpanId> from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 8) return std::nullopt;
    return SpanId(detail::load_be64(bytes));
  }

  std::string to_hex() const {
    std::string out;
    out.reserve(16);
    detail::append_hex(out, value_);
    return out;
  }

  constexpr std::uint64_t value() const noexcept { return value_; }
  constexpr bool is_zero() const noexcept { return value_ == 0; }

  friend constexpr auto operator<=>(const SpanId&, const SpanId&) = default;

 private:
  std::uint64_t value_ = 0;
};

}  // namespace span2records

template <>
struct std::hash<span2records::TraceId> {
  std::size_t operator()(const span2records::TraceId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.high() * 0x9E3779B97F4A7C15ULL ^ id.low());
  }
};

template <>
struct std::hash<span2records::SpanId> {
  std::size_t operator()(const span2records::SpanId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value());
  }
};
