// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bit-exact container for trained models. Layout (all integers little-endian,
// fixed width):
//
//   magic "TNRV" | version u16 | flags u8 | bits u8
//   frames u32 | frame_h u32 | frame_w u32 | window u16
//   n_levels u8  { stride u16, channels u16 }*
//   n_blocks u8  { factor u8, channels u16 }*   kernel u8
//   n_boundaries u16 { boundary u32 }*          (present iff flag)
//   n_tensors u16
//   { name u16+bytes | ndim u8 { dim u32 }* | bits u8 | scale f32
//     payload_len u32 | payload }*
//   crc32 u32 over every preceding byte
//
// bits = 0 stores raw float32 values (the unquantized checkpoint variant);
// bits in 2..16 stores entropy-coded symmetric-quantized integers.

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "tenerv/model.hpp"
#include "tenerv/quant.hpp"
#include "tenerv/range_coder.hpp"

namespace tenerv {

namespace detail {

inline std::uint32_t crc32(std::span<const std::uint8_t> data) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::uint8_t b : data) crc = table[(crc ^ b) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

struct ByteWriter {
  std::vector<std::uint8_t> bytes;

  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v) {
    bytes.push_back(static_cast<std::uint8_t>(v));
    bytes.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void raw(std::span<const std::uint8_t> data) { bytes.insert(bytes.end(), data.begin(), data.end()); }
};

struct ByteReader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (pos + n > bytes.size())
      throw FormatError(std::string("bitstream truncated reading ") + what + " at offset " +
                        std::to_string(pos));
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes[pos++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) |
                      static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v = 0;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::span<const std::uint8_t> raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes.subspan(pos, n);
    pos += n;
    return s;
  }
};

constexpr std::uint16_t kBitstreamVersion = 1;
constexpr std::uint8_t kFlagGopGrids = 1;
constexpr std::uint8_t kFlagSharedDepthwise = 2;
constexpr std::uint8_t kFlagFrozenWindow = 4;
constexpr std::uint8_t kFlagPartition = 8;

}  // namespace detail

// Serializes every learnable tensor. bits = 0 keeps raw float32 values (the
// checkpoint variant); otherwise tensors are quantized and entropy-coded.
template <typename T>
std::vector<std::uint8_t> serialize(const TeNeRVModel<T>& model, int bits) {
  if (bits != 0) detail::check_bits(bits);
  detail::ByteWriter w;
  w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("TNRV"), 4));
  w.u16(detail::kBitstreamVersion);
  std::uint8_t flags = 0;
  if (model.uses_gop_grids()) flags |= detail::kFlagGopGrids;
  if (model.shared_depthwise()) flags |= detail::kFlagSharedDepthwise;
  if (model.window_frozen()) flags |= detail::kFlagFrozenWindow;
  if (model.partition()) flags |= detail::kFlagPartition;
  w.u8(flags);
  w.u8(static_cast<std::uint8_t>(bits));

  const auto& cfg = model.config();
  w.u32(static_cast<std::uint32_t>(model.frames()));
  w.u32(static_cast<std::uint32_t>(cfg.frame_h));
  w.u32(static_cast<std::uint32_t>(cfg.frame_w));
  w.u16(static_cast<std::uint16_t>(cfg.window));
  w.u8(static_cast<std::uint8_t>(cfg.grid_levels.size()));
  for (const auto& lv : cfg.grid_levels) {
    w.u16(static_cast<std::uint16_t>(lv.temporal_stride));
    w.u16(static_cast<std::uint16_t>(lv.channels));
  }
  w.u8(static_cast<std::uint8_t>(cfg.upsample.size()));
  for (std::size_t i = 0; i < cfg.upsample.size(); ++i) {
    w.u8(static_cast<std::uint8_t>(cfg.upsample[i]));
    w.u16(static_cast<std::uint16_t>(cfg.channels[i + 1]));
  }
  w.u8(static_cast<std::uint8_t>(cfg.kernel));
  if (model.partition()) {
    const auto& p = *model.partition();
    w.u16(static_cast<std::uint16_t>(p.boundaries.size()));
    for (int b : p.boundaries) w.u32(static_cast<std::uint32_t>(b));
  }

  const auto params = model.named_params();
  w.u16(static_cast<std::uint16_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(name.data()),
                                        name.size()));
    w.u8(static_cast<std::uint8_t>(tensor.ndim()));
    for (int d : tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
    w.u8(static_cast<std::uint8_t>(bits));
    std::vector<float> values(tensor.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      values[i] = static_cast<float>(tensor.data()[i]);
    if (bits == 0) {
      w.f32(1.0f);  // scale unused for raw payloads
      w.u32(static_cast<std::uint32_t>(values.size() * 4));
      for (float v : values) w.f32(v);
    } else {
      float scale = 1.0f;
      std::vector<std::int32_t> q;
      detail::quantize_span(values.data(), values.size(), bits, &scale, &q);
      const std::int32_t qmax = (1 << (bits - 1)) - 1;
      auto payload = entropy_encode(q, -qmax, qmax);
      w.f32(scale);
      w.u32(static_cast<std::uint32_t>(payload.size()));
      w.raw(payload);
    }
  }
  w.u32(detail::crc32(w.bytes));
  return w.bytes;
}

// Rebuilds a float model whose forward pass is bit-identical to the
// encoder-side quantized forward. Uses only the bitstream contents.
inline TeNeRVModel<float> deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("bitstream too short (" +
                                          std::to_string(bytes.size()) + " bytes)");
  const std::uint32_t stored_crc = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                                   static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8 |
                                   static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16 |
                                   static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24;
  const std::uint32_t actual_crc = detail::crc32(bytes.subspan(0, bytes.size() - 4));
  if (stored_crc != actual_crc)
    throw FormatError("bitstream checksum mismatch at offset " +
                      std::to_string(bytes.size() - 4));

  detail::ByteReader r{bytes.subspan(0, bytes.size() - 4)};
  const auto magic = r.raw(4, "magic");
  if (std::memcmp(magic.data(), "TNRV", 4) != 0)
    throw FormatError("bad magic at offset 0, not a TNRV bitstream");
  const std::uint16_t version = r.u16("version");
  if (version != detail::kBitstreamVersion)
    throw FormatError("unsupported bitstream version " + std::to_string(version) +
                      " (expected " + std::to_string(detail::kBitstreamVersion) + ")");
  const std::uint8_t flags = r.u8("flags");
  const int container_bits = r.u8("bits");
  if (container_bits != 0) detail::check_bits(container_bits);

  ModelConfig cfg;
  const int frames = static_cast<int>(r.u32("frame count"));
  cfg.frame_h = static_cast<int>(r.u32("frame height"));
  cfg.frame_w = static_cast<int>(r.u32("frame width"));
  cfg.window = r.u16("window");
  const int n_levels = r.u8("grid level count");
  cfg.grid_levels.clear();
  int c_total = 0;
  for (int i = 0; i < n_levels; ++i) {
    GridLevelSpec lv;
    lv.temporal_stride = r.u16("grid stride");
    lv.channels = r.u16("grid channels");
    c_total += lv.channels;
    cfg.grid_levels.push_back(lv);
  }
  const int n_blocks = r.u8("block count");
  cfg.upsample.clear();
  cfg.channels.assign(1, c_total);
  for (int i = 0; i < n_blocks; ++i) {
    cfg.upsample.push_back(r.u8("block factor"));
    cfg.channels.push_back(r.u16("block channels"));
  }
  cfg.kernel = r.u8("kernel");

  auto model = TeNeRVModel<float>::create(cfg, frames, 0, flags & detail::kFlagGopGrids,
                                          flags & detail::kFlagSharedDepthwise);
  if (flags & detail::kFlagFrozenWindow) model.freeze_window();
  if (flags & detail::kFlagPartition) {
    GopPartition p;
    p.total_frames = frames;
    const int n_boundaries = r.u16("boundary count");
    for (int i = 0; i < n_boundaries; ++i)
      p.boundaries.push_back(static_cast<int>(r.u32("boundary")));
    model.activate_gam(p);
  }

  auto params = model.named_params();
  const int n_tensors = r.u16("tensor count");
  if (n_tensors != static_cast<int>(params.size()))
    throw FormatError("bitstream lists " + std::to_string(n_tensors) + " tensors, architecture has " +
                      std::to_string(params.size()));
  for (int ti = 0; ti < n_tensors; ++ti) {
    const std::size_t name_len = r.u16("tensor name length");
    const auto name_bytes = r.raw(name_len, "tensor name");
    const std::string name(reinterpret_cast<const char*>(name_bytes.data()), name_len);
    if (name != params[static_cast<std::size_t>(ti)].first)
      throw FormatError("tensor " + std::to_string(ti) + " named '" + name +
                        "', architecture expects '" + params[static_cast<std::size_t>(ti)].first +
                        "'");
    auto& tensor = params[static_cast<std::size_t>(ti)].second;
    const int ndim = r.u8("tensor rank");
    Shape shape;
    for (int d = 0; d < ndim; ++d) shape.push_back(static_cast<int>(r.u32("tensor dim")));
    if (shape != tensor.shape())
      throw FormatError("tensor '" + name + "' has shape " + shape_str(shape) +
                        ", architecture expects " + shape_str(tensor.shape()));
    const int bits = r.u8("tensor bits");
    const float scale = r.f32("tensor scale");
    const std::size_t payload_len = r.u32("payload length");
    const auto payload = r.raw(payload_len, "payload");
    if (bits == 0) {
      if (payload_len != tensor.size() * 4)
        throw FormatError("tensor '" + name + "' raw payload of " + std::to_string(payload_len) +
                          " bytes does not match " + std::to_string(tensor.size()) + " values");
      for (std::size_t i = 0; i < tensor.size(); ++i) {
        std::uint32_t word = 0;
        for (int b = 0; b < 4; ++b)
          word |= static_cast<std::uint32_t>(payload[i * 4 + static_cast<std::size_t>(b)])
                  << (8 * b);
        std::memcpy(&tensor.data()[i], &word, 4);
      }
    } else {
      detail::check_bits(bits);
      const std::int32_t qmax = (1 << (bits - 1)) - 1;
      const auto q = entropy_decode(payload, tensor.size(), -qmax, qmax);
      for (std::size_t i = 0; i < tensor.size(); ++i)
        tensor.data()[i] = detail::dequant_value<float>(scale, q[i]);
    }
  }
  if (r.pos != r.bytes.size())
    throw FormatError("bitstream has " + std::to_string(r.bytes.size() - r.pos) +
                      " unread bytes at offset " + std::to_string(r.pos));
  return model;
}

}  // namespace tenerv
