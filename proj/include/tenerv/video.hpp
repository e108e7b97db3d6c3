// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Video ingestion and generation. Y4M support covers the 8-bit 4:2:0 family
// ("C420*"), with nearest-neighbor chroma upsampling and BT.601 full-range
// conversion; every malformed input maps to a ParseError carrying the byte
// offset, never a crash or silent truncation. The synthetic generators are
// the desk-scale stand-ins for real content: a textured block translating
// over a static background, a hard scene switch at T/2, and a panning
// band-limited noise field.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "tenerv/error.hpp"
#include "tenerv/rng.hpp"

namespace tenerv {

struct VideoBuffer {
  int frames = 0;
  int h = 0, w = 0;
  int fps_num = 25, fps_den = 1;
  std::vector<float> data;  // [T,3,H,W] in [0,1]

  std::size_t frame_size() const { return static_cast<std::size_t>(3) * h * w; }
  std::span<const float> frame(int t) const {
    return {data.data() + static_cast<std::size_t>(t) * frame_size(), frame_size()};
  }
  std::span<float> frame(int t) {
    return {data.data() + static_cast<std::size_t>(t) * frame_size(), frame_size()};
  }
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write to '" + path + "' failed");
}

inline std::uint8_t to_byte01(float v) {
  const float x = std::clamp(v, 0.0f, 1.0f) * 255.0f;
  return static_cast<std::uint8_t>(std::lround(x));
}

// BT.601 full-range YUV -> RGB in [0,1].
inline void yuv_to_rgb(std::uint8_t y, std::uint8_t u, std::uint8_t v, float* r, float* g,
                       float* b) {
  const float yf = static_cast<float>(y);
  const float cb = static_cast<float>(u) - 128.0f;
  const float cr = static_cast<float>(v) - 128.0f;
  *r = std::clamp((yf + 1.402f * cr) / 255.0f, 0.0f, 1.0f);
  *g = std::clamp((yf - 0.344136f * cb - 0.714136f * cr) / 255.0f, 0.0f, 1.0f);
  *b = std::clamp((yf + 1.772f * cb) / 255.0f, 0.0f, 1.0f);
}

}  // namespace detail

// Parses a YUV4MPEG2 stream from memory. max_frames < 0 loads everything;
// cropping (when nonzero) takes the centered window after RGB conversion.
inline VideoBuffer parse_y4m(std::span<const std::uint8_t> bytes, int max_frames = -1,
                             int crop_w = 0, int crop_h = 0) {
  std::size_t pos = 0;
  const auto starts_with = [&](const char* s) {
    const std::size_t n = std::strlen(s);
    return pos + n <= bytes.size() && std::memcmp(bytes.data() + pos, s, n) == 0;
  };
  if (!starts_with("YUV4MPEG2"))
    throw ParseError("not a YUV4MPEG2 stream (bad magic at offset 0)");
  pos += 9;

  int w = 0, h = 0, fps_num = 25, fps_den = 1;
  std::string colorspace = "420";
  while (pos < bytes.size() && bytes[pos] != '\n') {
    if (bytes[pos] != ' ')
      throw ParseError("malformed stream header at offset " + std::to_string(pos));
    ++pos;
    const std::size_t tag_start = pos;
    while (pos < bytes.size() && bytes[pos] != ' ' && bytes[pos] != '\n') ++pos;
    const std::string tag(reinterpret_cast<const char*>(bytes.data() + tag_start),
                          pos - tag_start);
    if (tag.empty()) throw ParseError("empty header tag at offset " + std::to_string(tag_start));
    const char key = tag[0];
    const std::string val = tag.substr(1);
    try {
      switch (key) {
        case 'W': w = std::stoi(val); break;
        case 'H': h = std::stoi(val); break;
        case 'F': {
          const auto colon = val.find(':');
          if (colon == std::string::npos) throw std::invalid_argument("F");
          fps_num = std::stoi(val.substr(0, colon));
          fps_den = std::stoi(val.substr(colon + 1));
          break;
        }
        case 'C': colorspace = val; break;
        case 'I': case 'A': case 'X': break;  // interlacing/aspect/comments ignored
        default:
          throw ParseError("unknown header tag '" + tag + "' at offset " +
                           std::to_string(tag_start));
      }
    } catch (const std::invalid_argument&) {
      throw ParseError("unparseable header tag '" + tag + "' at offset " +
                       std::to_string(tag_start));
    } catch (const std::out_of_range&) {
      throw ParseError("out-of-range header tag '" + tag + "' at offset " +
                       std::to_string(tag_start));
    }
  }
  if (pos >= bytes.size()) throw ParseError("stream header missing newline at offset " +
                                            std::to_string(pos));
  ++pos;  // newline

  if (colorspace.rfind("420", 0) != 0)
    throw ParseError("unsupported colorspace 'C" + colorspace + "' (only the C420 family)");
  if (w <= 0 || h <= 0)
    throw ParseError("missing or invalid W/H in stream header");
  if (w % 2 != 0 || h % 2 != 0)
    throw ParseError("4:2:0 requires even dimensions, got " + std::to_string(w) + "x" +
                     std::to_string(h));
  if (fps_num <= 0 || fps_den <= 0) throw ParseError("invalid frame rate");

  const std::size_t y_size = static_cast<std::size_t>(w) * h;
  const std::size_t c_size = y_size / 4;
  const int cw = w / 2;

  VideoBuffer video;
  video.w = w;
  video.h = h;
  video.fps_num = fps_num;
  video.fps_den = fps_den;

  while (pos < bytes.size() && (max_frames < 0 || video.frames < max_frames)) {
    if (!starts_with("FRAME"))
      throw ParseError("expected FRAME marker at offset " + std::to_string(pos));
    pos += 5;
    while (pos < bytes.size() && bytes[pos] != '\n') ++pos;  // frame params ignored
    if (pos >= bytes.size())
      throw ParseError("frame header missing newline at offset " + std::to_string(pos));
    ++pos;
    if (pos + y_size + 2 * c_size > bytes.size())
      throw ParseError("truncated frame " + std::to_string(video.frames) + " at offset " +
                       std::to_string(pos) + " (need " +
                       std::to_string(y_size + 2 * c_size) + " bytes)");
    const std::uint8_t* yp = bytes.data() + pos;
    const std::uint8_t* up = yp + y_size;
    const std::uint8_t* vp = up + c_size;
    pos += y_size + 2 * c_size;

    video.data.resize(video.data.size() + video.frame_size());
    auto frame = video.frame(video.frames);
    float* rp = frame.data();
    float* gp = rp + static_cast<std::size_t>(h) * w;
    float* bp = gp + static_cast<std::size_t>(h) * w;
    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) {
        const std::size_t ci = static_cast<std::size_t>(yy / 2) * cw + xx / 2;
        const std::size_t i = static_cast<std::size_t>(yy) * w + xx;
        detail::yuv_to_rgb(yp[i], up[ci], vp[ci], &rp[i], &gp[i], &bp[i]);
      }
    }
    ++video.frames;
  }
  if (max_frames < 0 && pos != bytes.size())
    throw ParseError("trailing bytes after last frame at offset " + std::to_string(pos));

  if (video.frames < 2)
    throw DataError("video must have at least 2 frames, got " + std::to_string(video.frames));

  if (crop_w > 0 || crop_h > 0) {
    if (crop_w <= 0 || crop_h <= 0 || crop_w > w || crop_h > h)
      throw ConfigError("crop " + std::to_string(crop_w) + "x" + std::to_string(crop_h) +
                        " does not fit inside " + std::to_string(w) + "x" + std::to_string(h));
    const int ox = (w - crop_w) / 2, oy = (h - crop_h) / 2;
    VideoBuffer cropped;
    cropped.frames = video.frames;
    cropped.w = crop_w;
    cropped.h = crop_h;
    cropped.fps_num = fps_num;
    cropped.fps_den = fps_den;
    cropped.data.resize(static_cast<std::size_t>(video.frames) * cropped.frame_size());
    for (int t = 0; t < video.frames; ++t) {
      auto src = video.frame(t);
      auto dst = cropped.frame(t);
      for (int c = 0; c < 3; ++c)
        for (int yy = 0; yy < crop_h; ++yy)
          for (int xx = 0; xx < crop_w; ++xx)
            dst[(static_cast<std::size_t>(c) * crop_h + yy) * crop_w + xx] =
                src[(static_cast<std::size_t>(c) * h + (yy + oy)) * w + (xx + ox)];
    }
    return cropped;
  }
  return video;
}

inline VideoBuffer load_y4m(const std::string& path, int max_frames = -1, int crop_w = 0,
                            int crop_h = 0) {
  const auto bytes = detail::read_file(path);
  return parse_y4m(bytes, max_frames, crop_w, crop_h);
}

// BT.601 full-range RGB -> Y4M (C420jpeg), chroma subsampled by 2x2 averaging.
inline std::vector<std::uint8_t> encode_y4m(const VideoBuffer& video) {
  std::string header = "YUV4MPEG2 W" + std::to_string(video.w) + " H" + std::to_string(video.h) +
                       " F" + std::to_string(video.fps_num) + ":" +
                       std::to_string(video.fps_den) + " Ip A1:1 C420jpeg\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const int w = video.w, h = video.h;
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  std::vector<float> cb(plane), cr(plane);
  for (int t = 0; t < video.frames; ++t) {
    const char* marker = "FRAME\n";
    out.insert(out.end(), marker, marker + 6);
    auto frame = video.frame(t);
    const float* rp = frame.data();
    const float* gp = rp + plane;
    const float* bp = gp + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const float y01 = 0.299f * rp[i] + 0.587f * gp[i] + 0.114f * bp[i];
      out.push_back(detail::to_byte01(y01));
      cb[i] = 255.0f * (bp[i] - y01) / 1.772f + 128.0f;
      cr[i] = 255.0f * (rp[i] - y01) / 1.402f + 128.0f;
    }
    for (const auto* chroma : {&cb, &cr}) {
      for (int yy = 0; yy < h; yy += 2) {
        for (int xx = 0; xx < w; xx += 2) {
          const float avg = 0.25f * ((*chroma)[static_cast<std::size_t>(yy) * w + xx] +
                                     (*chroma)[static_cast<std::size_t>(yy) * w + xx + 1] +
                                     (*chroma)[static_cast<std::size_t>(yy + 1) * w + xx] +
                                     (*chroma)[static_cast<std::size_t>(yy + 1) * w + xx + 1]);
          out.push_back(static_cast<std::uint8_t>(
              std::lround(std::clamp(avg, 0.0f, 255.0f))));
        }
      }
    }
  }
  return out;
}

inline void save_y4m(const VideoBuffer& video, const std::string& path) {
  const auto bytes = encode_y4m(video);
  detail::write_file(path, bytes);
}

// Interleaved 8-bit RGB (one frame), dimensions carried externally.
inline std::vector<std::uint8_t> frame_to_rgb8(std::span<const float> frame, int h, int w) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<std::uint8_t> out(plane * 3);
  for (std::size_t i = 0; i < plane; ++i) {
    out[i * 3 + 0] = detail::to_byte01(frame[i]);
    out[i * 3 + 1] = detail::to_byte01(frame[plane + i]);
    out[i * 3 + 2] = detail::to_byte01(frame[2 * plane + i]);
  }
  return out;
}

inline VideoBuffer load_raw_frames(const std::vector<std::string>& paths, int w, int h) {
  if (w <= 0 || h <= 0) throw ConfigError("raw frames need explicit positive dimensions");
  VideoBuffer video;
  video.w = w;
  video.h = h;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (const auto& path : paths) {
    const auto bytes = detail::read_file(path);
    if (bytes.size() != plane * 3)
      throw DataError("raw frame '" + path + "' has " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(plane * 3));
    video.data.resize(video.data.size() + video.frame_size());
    auto frame = video.frame(video.frames);
    for (std::size_t i = 0; i < plane; ++i) {
      frame[i] = static_cast<float>(bytes[i * 3 + 0]) / 255.0f;
      frame[plane + i] = static_cast<float>(bytes[i * 3 + 1]) / 255.0f;
      frame[2 * plane + i] = static_cast<float>(bytes[i * 3 + 2]) / 255.0f;
    }
    ++video.frames;
  }
  if (video.frames < 2)
    throw DataError("video must have at least 2 frames, got " + std::to_string(video.frames));
  return video;
}

namespace detail {

inline void gen_moving_square(VideoBuffer* video, Rng& rng) {
  const int h = video->h, w = video->w, t_total = video->frames;
  struct Wave {
    float base, amp, fx, fy, phase;
  };
  Wave bg[3];
  for (auto& wv : bg)
    wv = {static_cast<float>(rng.uniform(0.3, 0.6)), static_cast<float>(rng.uniform(0.1, 0.2)),
          static_cast<float>(rng.uniform(0.5, 1.5)), static_cast<float>(rng.uniform(0.5, 1.5)),
          static_cast<float>(rng.uniform(0.0, 6.28318))};
  const int side = std::max(6, h / 4);
  const int vx = rng.uniform_int(1, 3), vy = rng.uniform_int(1, 3);
  const int x0 = rng.uniform_int(0, w - 1), y0 = rng.uniform_int(0, h - 1);
  float tex_freq[3][2], tex_phase[3][2];
  for (int c = 0; c < 3; ++c)
    for (int d = 0; d < 2; ++d) {
      tex_freq[c][d] = static_cast<float>(rng.uniform_int(1, 3));
      tex_phase[c][d] = static_cast<float>(rng.uniform(0.0, 6.28318));
    }
  constexpr float kTau = 6.2831853f;
  for (int t = 0; t < t_total; ++t) {
    auto frame = video->frame(t);
    for (int c = 0; c < 3; ++c) {
      float* p = frame.data() + static_cast<std::size_t>(c) * h * w;
      const Wave& wv = bg[c];
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          p[static_cast<std::size_t>(y) * w + x] =
              std::clamp(wv.base + wv.amp * std::sin(kTau * (wv.fx * x / w + wv.fy * y / h) +
                                                     wv.phase),
                         0.0f, 1.0f);
    }
    const int xs = (x0 + vx * t) % w, ys = (y0 + vy * t) % h;
    for (int c = 0; c < 3; ++c) {
      float* p = frame.data() + static_cast<std::size_t>(c) * h * w;
      for (int v = 0; v < side; ++v) {
        for (int u = 0; u < side; ++u) {
          const int px = (xs + u) % w, py = (ys + v) % h;
          const float val =
              0.5f + 0.4f * std::sin(kTau * tex_freq[c][0] * u / side + tex_phase[c][0]) *
                         std::sin(kTau * tex_freq[c][1] * v / side + tex_phase[c][1]);
          p[static_cast<std::size_t>(py) * w + px] = std::clamp(val, 0.0f, 1.0f);
        }
      }
    }
  }
}

inline void gen_two_scene(VideoBuffer* video, Rng& rng) {
  const int h = video->h, w = video->w, t_total = video->frames;
  constexpr float kTau = 6.2831853f;
  float base_a[3], base_b[3];
  for (auto& v : base_a) v = static_cast<float>(rng.uniform(0.15, 0.4));
  for (auto& v : base_b) v = static_cast<float>(rng.uniform(0.6, 0.85));
  const float lambda_a = static_cast<float>(rng.uniform(10.0, 20.0));
  const float lambda_b = static_cast<float>(rng.uniform(8.0, 16.0));
  const float cx = static_cast<float>(rng.uniform(0.3, 0.7)) * w;
  const float cy = static_cast<float>(rng.uniform(0.3, 0.7)) * h;
  const int switch_at = t_total / 2;
  for (int t = 0; t < t_total; ++t) {
    auto frame = video->frame(t);
    const bool second = t >= switch_at;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float wave;
        if (second) {
          const float r = std::hypot(x - cx, y - cy);
          wave = 0.5f + 0.5f * std::sin(kTau * (r / lambda_b - 0.03f * t));
        } else {
          wave = 0.5f + 0.5f * std::sin(kTau * ((x + y) / lambda_a + 0.02f * t));
        }
        const float* base = second ? base_b : base_a;
        for (int c = 0; c < 3; ++c)
          frame[(static_cast<std::size_t>(c) * h + y) * w + x] =
              std::clamp(base[c] + 0.18f * wave, 0.0f, 1.0f);
      }
    }
  }
}

inline void gen_noise_pan(VideoBuffer* video, Rng& rng) {
  const int h = video->h, w = video->w, t_total = video->frames;
  const int vx = 2, vy = 1;
  const int fw = w + vx * (t_total - 1), fh = h + vy * (t_total - 1);
  const int cw = fw / 4 + 2, ch = fh / 4 + 2;
  std::vector<float> coarse(static_cast<std::size_t>(3) * ch * cw);
  for (auto& v : coarse) v = static_cast<float>(rng.uniform(0.1, 0.9));
  const auto sample = [&](int c, float x, float y) {
    const float gx = x / 4.0f, gy = y / 4.0f;
    const int ix = std::min(static_cast<int>(gx), cw - 2);
    const int iy = std::min(static_cast<int>(gy), ch - 2);
    const float fx = gx - ix, fy = gy - iy;
    const float* p = coarse.data() + static_cast<std::size_t>(c) * ch * cw;
    const float a = p[static_cast<std::size_t>(iy) * cw + ix];
    const float b = p[static_cast<std::size_t>(iy) * cw + ix + 1];
    const float d = p[static_cast<std::size_t>(iy + 1) * cw + ix];
    const float e = p[static_cast<std::size_t>(iy + 1) * cw + ix + 1];
    return (a * (1 - fx) + b * fx) * (1 - fy) + (d * (1 - fx) + e * fx) * fy;
  };
  for (int t = 0; t < t_total; ++t) {
    auto frame = video->frame(t);
    const int ox = vx * t, oy = vy * t;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          frame[(static_cast<std::size_t>(c) * h + y) * w + x] =
              sample(c, static_cast<float>(x + ox), static_cast<float>(y + oy));
  }
}

}  // namespace detail

// Deterministic toy content: same {kind, dims, seed} always yields the same
// buffer.
inline VideoBuffer gen_synthetic(const std::string& kind, int t_total, int h, int w,
                                 std::uint32_t seed) {
  if (t_total < 2) throw ConfigError("synthetic video needs at least 2 frames");
  if (h < 8 || w < 8) throw ConfigError("synthetic video needs at least 8x8 frames");
  VideoBuffer video;
  video.frames = t_total;
  video.h = h;
  video.w = w;
  video.data.assign(static_cast<std::size_t>(t_total) * video.frame_size(), 0.0f);
  Rng rng(seed ^ 0x7e3e9df1u);
  if (kind == "moving-square")
    detail::gen_moving_square(&video, rng);
  else if (kind == "two-scene")
    detail::gen_two_scene(&video, rng);
  else if (kind == "noise-pan")
    detail::gen_noise_pan(&video, rng);
  else
    throw ConfigError("unknown synthetic kind '" + kind +
                      "' (expected moving-square, two-scene or noise-pan)");
  return video;
}

}  // namespace tenerv
