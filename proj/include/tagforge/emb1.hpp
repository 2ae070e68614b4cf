#pragma once

// EMB1 embedding container:
//   bytes 0..3   "EMB1"
//   bytes 4..11  n, little-endian u64
//   bytes 12..19 d, little-endian u64
//   then n*d IEEE-754 binary32 values, little-endian, row-major.

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <thread>

#include "tagforge/error.hpp"
#include "tagforge/tensor.hpp"

namespace tagforge {

inline constexpr std::string_view kEmb1Magic = "EMB1";
inline constexpr std::size_t kEmb1HeaderSize = 20;

namespace detail {

inline void put_u64_le(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline std::uint64_t get_u64_le(const unsigned char* p) noexcept {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) noexcept {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a uniquely named sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  static std::atomic<std::uint64_t> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

/// Serializes a matrix as EMB1. Values are narrowed to binary32.
template <std::floating_point T>
std::string encode_emb1(const Matrix<T>& m) {
  std::string out;
  out.reserve(kEmb1HeaderSize + 4 * m.size());
  out.append(kEmb1Magic);
  detail::put_u64_le(out, m.rows());
  detail::put_u64_le(out, m.cols());
  for (T v : m.values()) detail::put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

inline Matrix<float> decode_emb1(std::string_view bytes, std::string_view origin = "<memory>") {
  const std::string where(origin);
  if (bytes.size() < kEmb1HeaderSize) throw FormatError(where + ": truncated EMB1 header");
  if (bytes.substr(0, 4) != kEmb1Magic) throw FormatError(where + ": bad magic, expected EMB1");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t n = detail::get_u64_le(p + 4);
  const std::uint64_t d = detail::get_u64_le(p + 12);
  if (d != 0 && n > (bytes.size() / 4) / d) throw FormatError(where + ": truncated EMB1 payload");
  const std::uint64_t expected = kEmb1HeaderSize + 4 * n * d;
  if (bytes.size() < expected) throw FormatError(where + ": truncated EMB1 payload");
  if (bytes.size() > expected) throw FormatError(where + ": trailing bytes after EMB1 payload");
  Matrix<float> m(n, d);
  const unsigned char* q = p + kEmb1HeaderSize;
  for (std::size_t k = 0; k < m.size(); ++k, q += 4) {
    const float v = std::bit_cast<float>(detail::get_u32_le(q));
    if (!std::isfinite(v)) throw FormatError(where + ": non-finite value at index " + std::to_string(k));
    m.values()[k] = v;
  }
  return m;
}

template <std::floating_point T>
void save_embedding_file(const std::filesystem::path& path, const Matrix<T>& m) {
  detail::write_file_atomic(path, encode_emb1(m));
}

inline Matrix<float> load_embedding_file(const std::filesystem::path& path) {
  return decode_emb1(detail::read_file_bytes(path), path.string());
}

}  // namespace tagforge
