#include "svad/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace svad {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error("wav: " + path + ": " + why);
}

uint32_t rd_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t rd_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

void wr_u32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8 & 0xff));
  s.push_back(static_cast<char>(v >> 16 & 0xff));
  s.push_back(static_cast<char>(v >> 24 & 0xff));
}

void wr_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8 & 0xff));
}

}  // namespace

int16_t encode_sample(float x) {
  long k = std::lround(static_cast<double>(x) * 32768.0);
  if (k > 32767) k = 32767;
  if (k < -32768) k = -32768;
  return static_cast<int16_t>(k);
}

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open");
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const size_t n = buf.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0) fail(path, "missing RIFF header");
  if (std::memcmp(p + 8, "WAVE", 4) != 0) fail(path, "not a WAVE file");

  bool have_fmt = false;
  Waveform w;
  size_t off = 12;
  while (off + 8 <= n) {
    char id[5] = {0};
    std::memcpy(id, p + off, 4);
    const uint32_t sz = rd_u32(p + off + 4);
    const size_t body = off + 8;
    if (body + sz > n) fail(path, std::string("truncated chunk '") + id + "'");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (sz < 16) fail(path, "fmt chunk too short");
      const uint16_t format = rd_u16(p + body);
      const uint16_t channels = rd_u16(p + body + 2);
      const uint32_t rate = rd_u32(p + body + 4);
      const uint16_t bits = rd_u16(p + body + 14);
      if (format != 1) fail(path, "unsupported audio format " + std::to_string(format) + " (need PCM)");
      if (channels != 1) fail(path, "unsupported channel count " + std::to_string(channels) + " (need mono)");
      if (rate != static_cast<uint32_t>(kRequiredFs))
        fail(path, "unsupported sample rate " + std::to_string(rate) + " (need 16000)");
      if (bits != 16) fail(path, "unsupported bit depth " + std::to_string(bits) + " (need 16)");
      w.fs = static_cast<int>(rate);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) fail(path, "data chunk before fmt chunk");
      if (sz % 2 != 0) fail(path, "odd data chunk size");
      const size_t count = sz / 2;
      w.samples.resize(count);
      for (size_t i = 0; i < count; ++i) {
        const auto v = static_cast<int16_t>(rd_u16(p + body + 2 * i));
        w.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return w;
    }
    off = body + sz + (sz & 1);  // chunks are word aligned
  }
  fail(path, have_fmt ? "missing data chunk" : "missing fmt chunk");
}

void write_wav(const std::string& path, const std::vector<float>& samples, int fs) {
  if (fs != kRequiredFs)
    fail(path, "refusing to write sample rate " + std::to_string(fs));
  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  wr_u32(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  wr_u32(out, 16);
  wr_u16(out, 1);                                   // PCM
  wr_u16(out, 1);                                   // mono
  wr_u32(out, static_cast<uint32_t>(fs));
  wr_u32(out, static_cast<uint32_t>(fs) * 2);       // byte rate
  wr_u16(out, 2);                                   // block align
  wr_u16(out, 16);                                  // bits per sample
  out.append("data");
  wr_u32(out, data_bytes);
  for (const float x : samples) wr_u16(out, static_cast<uint16_t>(encode_sample(x)));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(tmp, "cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) fail(tmp, "write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) fail(path, "rename failed");
}

}  // namespace svad
