#include "nbsim/bytes.hpp"

#include <limits>

namespace nbsim {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

std::optional<Bytes> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

void ByteWriter::blob16(std::span<const std::uint8_t> data) {
  if (data.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw CodecError("blob longer than 65535 bytes");
  }
  u16(static_cast<std::uint16_t>(data.size()));
  raw(data);
}

void ByteWriter::str8(std::string_view s) {
  if (s.size() > 255) throw CodecError("string longer than 255 bytes");
  u8(static_cast<std::uint8_t>(s.size()));
  raw(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    throw CodecError("truncated input: need " + std::to_string(n) + " byte(s), have " +
                     std::to_string(remaining()));
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint16_t ByteReader::u16() {
  need(2);
  auto v = static_cast<std::uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  std::uint32_t hi = u16();
  return hi << 16 | u16();
}

std::uint64_t ByteReader::u64() {
  std::uint64_t hi = u32();
  return hi << 32 | u32();
}

Bytes ByteReader::raw(std::size_t n) {
  need(n);
  Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
            data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}

Bytes ByteReader::blob16() { return raw(u16()); }

std::string ByteReader::str8() {
  auto b = raw(u8());
  return std::string(b.begin(), b.end());
}

void ByteReader::expect_end(const char* what) const {
  if (!empty()) {
    throw CodecError(std::string(what) + ": " + std::to_string(remaining()) + " trailing byte(s)");
  }
}

}  // namespace nbsim
