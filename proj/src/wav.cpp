#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "framedn/signals.hpp"

namespace framedn {

namespace {

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw IoError("load_wav: truncated file " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* b) {
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace

VecX load_wav(const std::string& path, Index offset, Index length) {
  if (offset < 0 || length < 2) {
    throw OutOfRange("load_wav: need offset >= 0 and length >= 2");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_wav: cannot open " + path);

  char tag[4];
  in.read(tag, 4);
  if (in.gcount() != 4 || std::memcmp(tag, "RIFF", 4) != 0) {
    throw IoError("load_wav: not a RIFF file: " + path);
  }
  read_u32(in, path);  // overall size, unused
  in.read(tag, 4);
  if (in.gcount() != 4 || std::memcmp(tag, "WAVE", 4) != 0) {
    throw IoError("load_wav: not a WAVE file: " + path);
  }

  std::uint16_t audioFormat = 0, channels = 0, bitsPerSample = 0;
  bool haveFmt = false;
  std::vector<char> data;

  while (in.read(tag, 4) && in.gcount() == 4) {
    const std::uint32_t chunkSize = read_u32(in, path);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunkSize < 16) throw IoError("load_wav: malformed fmt chunk");
      std::vector<unsigned char> fmt(chunkSize);
      in.read(reinterpret_cast<char*>(fmt.data()), chunkSize);
      if (static_cast<std::uint32_t>(in.gcount()) != chunkSize) {
        throw IoError("load_wav: truncated fmt chunk");
      }
      audioFormat = read_u16(fmt.data());
      channels = read_u16(fmt.data() + 2);
      bitsPerSample = read_u16(fmt.data() + 14);
      haveFmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(chunkSize);
      in.read(data.data(), chunkSize);
      if (static_cast<std::uint32_t>(in.gcount()) != chunkSize) {
        throw IoError("load_wav: truncated data chunk");
      }
    } else {
      in.seekg(chunkSize, std::ios::cur);
    }
    if (chunkSize % 2 == 1) in.seekg(1, std::ios::cur);  // chunks are padded
  }

  if (!haveFmt || data.empty()) {
    throw IoError("load_wav: missing fmt or data chunk in " + path);
  }
  if (channels < 1) throw IoError("load_wav: zero channels in " + path);
  const bool isPcm16 = (audioFormat == 1 && bitsPerSample == 16);
  const bool isFloat32 = (audioFormat == 3 && bitsPerSample == 32);
  if (!isPcm16 && !isFloat32) {
    throw UnsupportedFormat("load_wav: only 16-bit PCM and 32-bit float are supported");
  }

  const std::size_t bytesPerSample = bitsPerSample / 8;
  const std::size_t frameBytes = bytesPerSample * channels;
  const Index total = static_cast<Index>(data.size() / frameBytes);
  if (offset + length > total) {
    throw OutOfRange("load_wav: requested window [" + std::to_string(offset) +
                     ", " + std::to_string(offset + length) + ") exceeds " +
                     std::to_string(total) + " samples");
  }

  VecX f(length);
  for (Index i = 0; i < length; ++i) {
    const std::size_t at = static_cast<std::size_t>(offset + i) * frameBytes;
    if (isPcm16) {
      std::int16_t v;
      std::memcpy(&v, data.data() + at, 2);
      f[i] = static_cast<double>(v) / 32768.0;
    } else {
      float v;
      std::memcpy(&v, data.data() + at, 4);
      f[i] = static_cast<double>(v);
    }
  }

  const double sd = sample_stddev(f);
  if (!(sd > 0.0)) throw DegenerateSignal("load_wav: constant excerpt");
  f /= sd;
  return f;
}

}  // namespace framedn
