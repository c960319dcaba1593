// SPDX-License-Identifier: Apache-2.0
#include "hpsed/wav.hpp"

#include "hpsed/errors.hpp"
#include "hpsed/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace hpsed {
namespace {

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

void put32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
  os.write(b, 4);
}
void put16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {char(v), char(v >> 8)};
  os.write(b, 2);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) { return IoError(path.string() + ": " + why); };

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) || std::memcmp(bytes.data() + 8, "WAVE", 4))
    throw fail("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw fail("truncated chunk");
    if (!std::memcmp(chunk, "fmt ", 4)) {
      if (size < 16) throw fail("short fmt chunk");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      // WAVE_FORMAT_EXTENSIBLE carries the real format in the sub-format GUID.
      if (format == 0xFFFE && size >= 26) format = le16(chunk + 32);
    } else if (!std::memcmp(chunk, "data", 4)) {
      data = chunk + 8;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }
  if (!format || !data) throw fail("missing fmt or data chunk");
  if (channels != 1) throw fail("only mono audio is supported");
  if (rate != static_cast<std::uint32_t>(kSampleRate))
    throw fail("sample rate " + std::to_string(rate) + " Hz is not 44100 Hz");

  Waveform wav;
  wav.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    wav.samples.resize(data_size / 2);
    for (std::size_t i = 0; i < wav.samples.size(); ++i)
      wav.samples[i] = static_cast<std::int16_t>(le16(data + 2 * i)) / 32768.0f;
  } else if (format == 3 && bits == 32) {
    wav.samples.resize(data_size / 4);
    for (std::size_t i = 0; i < wav.samples.size(); ++i) {
      const std::uint32_t u = le32(data + 4 * i);
      std::memcpy(&wav.samples[i], &u, 4);
    }
  } else {
    throw fail("unsupported sample format (need 16-bit PCM or 32-bit float)");
  }
  return wav;
}

void write_wav(const std::filesystem::path& path, const Waveform& wav) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto n = static_cast<std::uint32_t>(wav.samples.size());
  out.write("RIFF", 4);
  put32(out, 36 + 2 * n);
  out.write("WAVEfmt ", 8);
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(wav.sample_rate));
  put32(out, static_cast<std::uint32_t>(wav.sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out.write("data", 4);
  put32(out, 2 * n);
  std::vector<char> pcm(2 * std::size_t(n));
  for (std::size_t i = 0; i < n; ++i) {
    const float s = std::clamp(wav.samples[i], -1.0f, 1.0f);
    const auto v = static_cast<std::int16_t>(std::lrint(s * 32767.0f));
    pcm[2 * i] = char(v & 0xff);
    pcm[2 * i + 1] = char((v >> 8) & 0xff);
  }
  out.write(pcm.data(), static_cast<std::streamsize>(pcm.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace hpsed
