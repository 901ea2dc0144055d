#pragma once

// Binary wire format for the shared secret (the block structure). This file
// is the payload of the secure side channel, so its size is what the scheme
// actually costs in secret bits.
//
// Layout (little-endian):
//   magic   "BVBS"   4 bytes
//   version u16      currently 1
//   n       u32
//   r       u32
//   payload n fields of ceil(log2 r) bits each, packed LSB-first;
//           each field stores (block id - 1), ids running 1..r.
// Trailing pad bits of the last byte must be zero. Full description in
// docs/formats.md.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockveil/model.hpp"

namespace blockveil {

enum class DecodeErrorKind {
  bad_magic,
  bad_version,
  header_mismatch,
  invalid_dimensions,
  truncated,
  trailing_data,
  block_id_out_of_range,
  unequal_block_sizes,
  io_failure,
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  DecodeErrorKind kind() const { return kind_; }

 private:
  DecodeErrorKind kind_;
};

namespace detail {

constexpr char kMagic[4] = {'B', 'V', 'B', 'S'};
constexpr std::uint16_t kFormatVersion = 1;
constexpr std::size_t kHeaderBytes = 14;

inline int id_bit_width(int r) {
  int w = 0;
  while ((1 << w) < r) ++w;  // ceil(log2 r); 0 when r == 1
  return w;
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return v;
}

}  // namespace detail

// Secret size of the packed assignment, excluding the fixed header.
inline std::size_t payload_bits(int n, int r) {
  return static_cast<std::size_t>(n) * detail::id_bit_width(r);
}

inline std::vector<std::uint8_t> serialize_structure(const BlockStructure& bs) {
  const int n = bs.size(), r = bs.block_count();
  const int w = detail::id_bit_width(r);
  std::vector<std::uint8_t> out;
  out.reserve(detail::kHeaderBytes + (payload_bits(n, r) + 7) / 8);
  out.insert(out.end(), detail::kMagic, detail::kMagic + 4);
  out.push_back(static_cast<std::uint8_t>(detail::kFormatVersion & 0xff));
  out.push_back(static_cast<std::uint8_t>(detail::kFormatVersion >> 8));
  detail::put_u32(out, static_cast<std::uint32_t>(n));
  detail::put_u32(out, static_cast<std::uint32_t>(r));

  std::size_t bitpos = 0;
  out.resize(detail::kHeaderBytes + (payload_bits(n, r) + 7) / 8, 0);
  for (int i = 0; i < n; ++i) {
    const std::uint32_t value = static_cast<std::uint32_t>(bs.block_of(i));  // id-1, 0-based
    for (int b = 0; b < w; ++b, ++bitpos) {
      if ((value >> b) & 1u)
        out[detail::kHeaderBytes + bitpos / 8] |= static_cast<std::uint8_t>(1u << (bitpos % 8));
    }
  }
  return out;
}

// Decodes and validates a structure whose dimensions are already known.
inline BlockStructure deserialize_structure(const std::vector<std::uint8_t>& bytes,
                                            int expected_n, int expected_r) {
  using detail::kHeaderBytes;
  if (bytes.size() < kHeaderBytes)
    throw DecodeError(DecodeErrorKind::truncated, "structure data shorter than header");
  if (!std::equal(detail::kMagic, detail::kMagic + 4, bytes.begin()))
    throw DecodeError(DecodeErrorKind::bad_magic, "bad magic, not a BVBS file");
  const std::uint16_t version =
      static_cast<std::uint16_t>(bytes[4] | (static_cast<std::uint16_t>(bytes[5]) << 8));
  if (version != detail::kFormatVersion)
    throw DecodeError(DecodeErrorKind::bad_version,
                      "unsupported format version " + std::to_string(version));
  const std::uint32_t n = detail::get_u32(bytes.data() + 6);
  const std::uint32_t r = detail::get_u32(bytes.data() + 10);
  if (n == 0 || r == 0 || n % r != 0)
    throw DecodeError(DecodeErrorKind::invalid_dimensions, "header dimensions are inconsistent");
  if (static_cast<int>(n) != expected_n || static_cast<int>(r) != expected_r)
    throw DecodeError(DecodeErrorKind::header_mismatch, "header does not match expected (n, r)");

  const int w = detail::id_bit_width(static_cast<int>(r));
  const std::size_t nbits = payload_bits(static_cast<int>(n), static_cast<int>(r));
  const std::size_t nbytes = (nbits + 7) / 8;
  if (bytes.size() < kHeaderBytes + nbytes)
    throw DecodeError(DecodeErrorKind::truncated, "payload truncated");
  if (bytes.size() > kHeaderBytes + nbytes)
    throw DecodeError(DecodeErrorKind::trailing_data, "trailing bytes after payload");
  if (nbits % 8 != 0) {
    const std::uint8_t last = bytes[kHeaderBytes + nbytes - 1];
    if (last >> (nbits % 8))
      throw DecodeError(DecodeErrorKind::trailing_data, "nonzero padding bits");
  }

  std::vector<int> assignment(n, 0);
  std::size_t bitpos = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t value = 0;
    for (int b = 0; b < w; ++b, ++bitpos) {
      if ((bytes[kHeaderBytes + bitpos / 8] >> (bitpos % 8)) & 1u) value |= (1u << b);
    }
    if (value >= r)
      throw DecodeError(DecodeErrorKind::block_id_out_of_range,
                        "block id " + std::to_string(value + 1) + " exceeds r");
    assignment[i] = static_cast<int>(value);
  }

  std::vector<int> counts(r, 0);
  for (int b : assignment) ++counts[b];
  const int d = static_cast<int>(n / r);
  for (int c : counts)
    if (c != d)
      throw DecodeError(DecodeErrorKind::unequal_block_sizes, "blocks do not have equal size");
  return BlockStructure(static_cast<int>(n), std::move(assignment));
}

// Self-describing variant: dimensions are taken from the header.
inline BlockStructure deserialize_structure(const std::vector<std::uint8_t>& bytes) {
  using detail::kHeaderBytes;
  if (bytes.size() < kHeaderBytes)
    throw DecodeError(DecodeErrorKind::truncated, "structure data shorter than header");
  const std::uint32_t n = detail::get_u32(bytes.data() + 6);
  const std::uint32_t r = detail::get_u32(bytes.data() + 10);
  if (n == 0 || r == 0)
    throw DecodeError(DecodeErrorKind::invalid_dimensions, "header dimensions are inconsistent");
  return deserialize_structure(bytes, static_cast<int>(n), static_cast<int>(r));
}

inline void write_structure_file(const std::string& path, const BlockStructure& bs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DecodeError(DecodeErrorKind::io_failure, "cannot open " + path + " for writing");
  const auto bytes = serialize_structure(bs);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DecodeError(DecodeErrorKind::io_failure, "failed writing " + path);
}

inline BlockStructure read_structure_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError(DecodeErrorKind::io_failure, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_structure(bytes);
}

}  // namespace blockveil
