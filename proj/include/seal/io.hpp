// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary formats.
//
// Tensor block ("SEALTEN1"):
//   8-byte magic, u8 rank, rank x u32 LE extents, float32 LE payload.
//
// Record container (models, stain/lock records, patches):
//   8-byte magic, u64 LE manifest length, UTF-8 JSON manifest, then the
//   tensor blocks listed in the manifest, concatenated in order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seal/error.hpp"
#include "seal/tensor.hpp"

namespace seal {

using Bytes = std::vector<std::uint8_t>;
using json = nlohmann::json;

inline constexpr std::string_view kTensorMagic = "SEALTEN1";
inline constexpr std::string_view kToolkitVersion = "seal 1.0.0";

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are unsupported");

namespace detail {

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace detail

/// Sequential reader over a byte buffer; every read is bounds-checked.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ == bytes_.size(); }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (n > remaining()) {
      throw FormatError(std::string("truncated input while reading ") + what);
    }
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint8_t u8(const char* what) { return take(1, what)[0]; }

  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | s[i];
    return v;
  }

  std::uint64_t u64(const char* what) {
    auto s = take(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | s[i];
    return v;
  }

  void expect_magic(std::string_view magic) {
    auto s = take(magic.size(), "magic");
    if (std::memcmp(s.data(), magic.data(), magic.size()) != 0) {
      throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline void write_tensor(Bytes& out, const Tensor& t) {
  if (t.rank() > 255) throw ShapeError("tensor rank exceeds 255");
  out.insert(out.end(), kTensorMagic.begin(), kTensorMagic.end());
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (auto e : t.shape()) {
    if (e > UINT32_MAX) throw ShapeError("tensor extent exceeds u32");
    detail::put_u32(out, static_cast<std::uint32_t>(e));
  }
  for (float f : t.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
}

inline Tensor read_tensor(ByteReader& in) {
  in.expect_magic(kTensorMagic);
  const auto rank = in.u8("tensor rank");
  if (rank == 0) throw FormatError("tensor block with rank 0");
  Shape shape(rank);
  std::size_t count = 1;
  for (auto& e : shape) {
    e = in.u32("tensor extent");
    if (e == 0) throw FormatError("tensor block with zero extent");
    count *= e;
    if (count > in.remaining()) {
      throw FormatError("tensor extents exceed remaining payload");
    }
  }
  if (count * 4 > in.remaining()) {
    throw FormatError("truncated tensor payload");
  }
  std::vector<float> data(count);
  for (auto& f : data) f = std::bit_cast<float>(in.u32("tensor payload"));
  return Tensor(std::move(shape), std::move(data));
}

inline Bytes encode_tensor(const Tensor& t) {
  Bytes out;
  write_tensor(out, t);
  return out;
}

inline Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  auto t = read_tensor(in);
  if (!in.done()) throw FormatError("trailing bytes after tensor block");
  return t;
}

/// A JSON manifest with its ordered tensor blocks.
struct Container {
  json manifest;
  std::vector<Tensor> tensors;
};

inline Bytes encode_container(std::string_view magic, const Container& c) {
  Bytes out(magic.begin(), magic.end());
  const std::string text = c.manifest.dump();
  detail::put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& t : c.tensors) write_tensor(out, t);
  return out;
}

/// Parses a container. `tensor_count` gives the number of blocks implied by the
/// manifest; the whole buffer must be consumed.
template <typename CountFn>
Container decode_container(std::string_view magic,
                           std::span<const std::uint8_t> bytes,
                           CountFn tensor_count) {
  ByteReader in(bytes);
  in.expect_magic(magic);
  const auto len = in.u64("manifest length");
  if (len > in.remaining()) throw FormatError("manifest length exceeds file size");
  auto text = in.take(static_cast<std::size_t>(len), "manifest");
  Container c;
  try {
    c.manifest = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  const std::size_t n = tensor_count(c.manifest);
  c.tensors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) c.tensors.push_back(read_tensor(in));
  if (!in.done()) throw FormatError("trailing bytes after last tensor block");
  return c;
}

inline Bytes read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open file: " + path);
  return Bytes(std::istreambuf_iterator<char>(f), {});
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write file: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

inline void write_text(const std::string& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write file: " + path);
  f << text;
}

/// Reads a JSON manifest field, converting type errors into FormatError.
template <typename V>
V field(const json& j, const char* key) {
  try {
    return j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest field '") + key + "': " + e.what());
  }
}

}  // namespace seal
