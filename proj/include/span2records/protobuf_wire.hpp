#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "span2records/error.hpp"

namespace span2records::wire {

enum class WireType : std::uint8_t {
  kVarint = 0,
  kFixed64 = 1,
  kLengthDelimited = 2,
  kFixed32 = 5,
};

struct Tag {
  std::uint32_t field = 0;
  WireType type = WireType::kVarint;
};

// Cursor over one protobuf message. Errors report absolute byte offsets in
// the outermost buffer.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data, std::size_t base_offset = 0)
      : data_(data), base_(base_offset) {}

  bool done() const noexcept { return pos_ >= data_.size(); }
  std::size_t offset() const noexcept { return base_ + pos_; }

  Tag tag() {
    const std::size_t at = offset();
    std::uint64_t key = varint();
    auto type = static_cast<std::uint8_t>(key & 7U);
    std::uint64_t field = key >> 3;
    if (field == 0 || field > 0x1FFFFFFF) fail(at, "invalid field number");
    if (type != 0 && type != 1 && type != 2 && type != 5) {
      fail(at, "unsupported wire type " + std::to_string(type));
    }
    return Tag{static_cast<std::uint32_t>(field), static_cast<WireType>(type)};
  }

  std::uint64_t varint() {
    const std::size_t at = offset();
    std::uint64_t value = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      if (done()) fail(at, "truncated varint");
      std::uint8_t b = data_[pos_++];
      value |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if ((b & 0x80) == 0) return value;
    }
    fail(at, "varint too long");
  }

  std::uint64_t fixed64() {
    auto bytes = take(8, "truncated fixed64");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
    return v;
  }

  std::uint32_t fixed32() {
    auto bytes = take(4, "truncated fixed32");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
    return v;
  }

  double float64() { return std::bit_cast<double>(fixed64()); }

  std::span<const std::uint8_t> bytes() {
    const std::size_t at = offset();
    std::uint64_t len = varint();
    if (len > data_.size() - pos_) fail(at, "length exceeds remaining bytes");
    return take(static_cast<std::size_t>(len), "truncated field");
  }

  std::string string() {
    auto b = bytes();
    return std::string(reinterpret_cast<const char*>(b.data()), b.size());
  }

  // Reader over an embedded message; offsets stay absolute.
  Reader message() {
    auto b = bytes();
    return Reader(b, offset() - b.size());
  }

  void skip(WireType type) {
    switch (type) {
      case WireType::kVarint: varint(); break;
      case WireType::kFixed64: take(8, "truncated fixed64"); break;
      case WireType::kLengthDelimited: bytes(); break;
      case WireType::kFixed32: take(4, "truncated fixed32"); break;
    }
  }

  void expect(const Tag& tag, WireType type) const {
    if (tag.type != type) {
      fail(offset(), "field " + std::to_string(tag.field) + " has wrong wire type");
    }
  }

 private:
  [[noreturn]] static void fail(std::size_t at, const std::string& reason) {
    throw MalformedPayload("byte " + std::to_string(at), reason);
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* reason) {
    if (n > data_.size() - pos_) fail(offset(), reason);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::span<const std::uint8_t> data_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

}  // namespace span2records::wire
