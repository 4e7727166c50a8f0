#include "ganssl/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace ganssl::png {
namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(v >> 24);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back(v & 0xff);
}

void chunk(std::vector<std::uint8_t>& out, const char type[4],
           const std::vector<std::uint8_t>& payload) {
  put_be32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc = crc32(0, out.data() + crc_start,
                         static_cast<uInt>(out.size() - crc_start));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write(const std::string& path, const Tensor<float>& image) {
  if (image.shape.size() != 3)
    throw std::invalid_argument("png: image must be {C, H, W}");
  const std::size_t c = image.shape[0], h = image.shape[1],
                    w = image.shape[2];
  if (c != 1 && c != 3)
    throw std::invalid_argument("png: channel count must be 1 or 3");

  // filter byte 0 + interleaved samples per scanline
  std::vector<std::uint8_t> raw;
  raw.reserve(h * (1 + w * c));
  for (std::size_t i = 0; i < h; ++i) {
    raw.push_back(0);
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const float v =
            std::clamp(image.data[(ch * h + i) * w + j], 0.0f, 1.0f);
        raw.push_back(static_cast<std::uint8_t>(v * 255.0f + 0.5f));
      }
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> zdata(zlen);
  if (compress2(zdata.data(), &zlen, raw.data(),
                static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw std::runtime_error("png: deflate failed");
  zdata.resize(zlen);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                   '\n'};
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(w));
  put_be32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);                       // bit depth
  ihdr.push_back(c == 1 ? 0 : 2);          // gray / truecolor
  ihdr.push_back(0);                       // deflate
  ihdr.push_back(0);                       // filter method
  ihdr.push_back(0);                       // no interlace
  chunk(out, "IHDR", ihdr);
  chunk(out, "IDAT", zdata);
  chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("png: cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("png: short write to " + path);
}

}  // namespace ganssl::png
