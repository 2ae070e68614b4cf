#pragma once

// TAGM model checkpoint, all integers and floats little-endian:
//   "TAGM"  u32 version (=1)
//   spec:   u32 arch, u64 layers, u64 hidden, u64 heads, f64 dropout,
//           u64 in_dim, u64 num_classes
//   u64 parameter count, then per parameter:
//           u64 name length, name bytes (UTF-8), u64 rows, u64 cols,
//           rows*cols f64 values, row-major

#include <bit>
#include <filesystem>
#include <string>
#include <string_view>

#include "tagforge/emb1.hpp"
#include "tagforge/error.hpp"
#include "tagforge/model.hpp"

namespace tagforge {

inline constexpr std::string_view kCheckpointMagic = "TAGM";
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <std::floating_point T>
std::string encode_checkpoint(Model<T>& model) {
  std::string out(kCheckpointMagic);
  detail::put_u32_le(out, kCheckpointVersion);
  const auto& s = model.spec();
  detail::put_u32_le(out, static_cast<std::uint32_t>(s.arch));
  detail::put_u64_le(out, s.layers);
  detail::put_u64_le(out, s.hidden);
  detail::put_u64_le(out, s.heads);
  detail::put_u64_le(out, std::bit_cast<std::uint64_t>(s.dropout));
  detail::put_u64_le(out, s.in_dim);
  detail::put_u64_le(out, s.num_classes);
  const auto params = model.named_parameters();
  detail::put_u64_le(out, params.size());
  for (const auto& [name, p] : params) {
    detail::put_u64_le(out, name.size());
    out += name;
    detail::put_u64_le(out, p->value.rows());
    detail::put_u64_le(out, p->value.cols());
    for (T v : p->value.values()) detail::put_u64_le(out, std::bit_cast<std::uint64_t>(static_cast<double>(v)));
  }
  return out;
}

template <std::floating_point T = double>
Model<T> decode_checkpoint(std::string_view bytes) {
  std::size_t pos = 0;
  const auto need = [&](std::size_t k) {
    if (bytes.size() - pos < k) throw FormatError("checkpoint truncated");
  };
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto u32 = [&] { need(4); auto v = detail::get_u32_le(p + pos); pos += 4; return v; };
  const auto u64 = [&] { need(8); auto v = detail::get_u64_le(p + pos); pos += 8; return v; };

  need(4);
  if (bytes.substr(0, 4) != kCheckpointMagic) throw FormatError("bad checkpoint magic, expected TAGM");
  pos = 4;
  if (const auto ver = u32(); ver != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(ver));
  ModelSpec s;
  const auto arch = u32();
  if (arch > 2) throw FormatError("checkpoint: unknown architecture id");
  s.arch = static_cast<Arch>(arch);
  s.layers = u64();
  s.hidden = u64();
  s.heads = u64();
  s.dropout = std::bit_cast<double>(u64());
  s.in_dim = u64();
  s.num_classes = u64();
  Model<T> model(s);

  auto params = model.named_parameters();
  if (u64() != params.size()) throw FormatError("checkpoint: parameter count does not match spec");
  for (auto& [name, param] : params) {
    const auto len = u64();
    need(len);
    if (bytes.substr(pos, len) != name) throw FormatError("checkpoint: expected parameter " + name);
    pos += len;
    const auto rows = u64();
    const auto cols = u64();
    if (rows != param->value.rows() || cols != param->value.cols())
      throw FormatError("checkpoint: shape mismatch for " + name);
    for (auto& v : param->value.values()) v = static_cast<T>(std::bit_cast<double>(u64()));
  }
  if (pos != bytes.size()) throw FormatError("checkpoint: trailing bytes");
  return model;
}

template <std::floating_point T>
void save_checkpoint(const std::filesystem::path& path, Model<T>& model) {
  detail::write_file_atomic(path, encode_checkpoint(model));
}

template <std::floating_point T = double>
Model<T> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint<T>(detail::read_file_bytes(path));
}

}  // namespace tagforge
