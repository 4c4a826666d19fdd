#include "core/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace smmsep::wav {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t U32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t U16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}
void PutU16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace

TimeSignal Read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowIo("wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    ThrowIo("wav: " + path + " is not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  size_t data_size = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = U32(chunk + 4);
    const size_t body = pos + 8;
    const size_t avail = std::min<size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) ThrowIo("wav: truncated fmt chunk in " + path);
      format = U16(bytes.data() + body);
      channels = U16(bytes.data() + body + 2);
      rate = U32(bytes.data() + body + 4);
      bits = U16(bytes.data() + body + 14);
      if (format == kFormatExtensible && avail >= 26) format = U16(bytes.data() + body + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = avail;
    }
    pos = body + size + (size & 1);
  }
  if (channels == 0 || rate == 0) ThrowIo("wav: missing fmt chunk in " + path);
  if (data == nullptr) ThrowIo("wav: missing data chunk in " + path);
  const bool pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
  const bool flt = format == kFormatFloat && (bits == 32 || bits == 64);
  if (!pcm && !flt)
    ThrowIo("wav: unsupported sample format " + std::to_string(format) + "/" +
            std::to_string(bits) + " bit in " + path);

  const size_t bytes_per_sample = bits / 8;
  const size_t frames = data_size / (bytes_per_sample * channels);
  TimeSignal signal(static_cast<Index>(frames), channels, static_cast<int>(rate));
  for (size_t i = 0; i < frames; ++i) {
    for (size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * bytes_per_sample;
      double v = 0.0;
      if (flt && bits == 32) {
        float x;
        std::memcpy(&x, p, 4);
        v = x;
      } else if (flt) {
        std::memcpy(&v, p, 8);
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(U16(p)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t x = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
        if (x & 0x800000) x -= 0x1000000;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(U32(p)) / 2147483648.0;
      }
      signal.samples(static_cast<Index>(i), static_cast<Index>(c)) = v;
    }
  }
  return signal;
}

void Write(const std::string& path, const TimeSignal& signal, SampleFormat format) {
  if (signal.num_channels() < 1) ThrowInvalid("wav: cannot write a signal without channels");
  if (signal.sample_rate <= 0) ThrowInvalid("wav: sample_rate must be positive");
  const std::uint16_t channels = static_cast<std::uint16_t>(signal.num_channels());
  const std::uint16_t bits = format == SampleFormat::kPcm16 ? 16 : 32;
  const std::uint32_t block = channels * bits / 8;
  const std::uint32_t data_size = static_cast<std::uint32_t>(signal.num_samples()) * block;

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  PutU32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  PutU32(out, 16);
  PutU16(out, format == SampleFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  PutU16(out, channels);
  PutU32(out, static_cast<std::uint32_t>(signal.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(signal.sample_rate) * block);
  PutU16(out, static_cast<std::uint16_t>(block));
  PutU16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  PutU32(out, data_size);
  for (Index i = 0; i < signal.num_samples(); ++i) {
    for (Index c = 0; c < signal.num_channels(); ++c) {
      const double v = signal.samples(i, c);
      if (format == SampleFormat::kPcm16) {
        const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
      } else {
        const float x = static_cast<float>(v);
        std::uint32_t raw;
        std::memcpy(&raw, &x, 4);
        PutU32(out, raw);
      }
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) ThrowIo("wav: cannot create " + path);
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) ThrowIo("wav: write failed for " + path);
}

}  // namespace smmsep::wav
