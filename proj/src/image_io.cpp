#include "ugatit/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ugatit {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(path, "write failed");
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

const std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, std::size_t size,
                                       const std::string& path) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) fail(path, "inflateInit failed");
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 15];
  zs.next_in = const_cast<Bytef*>(data);
  zs.avail_in = static_cast<uInt>(size);
  int ret = Z_OK;
  while (ret != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&zs);
      fail(path, "corrupt compressed stream");
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& data) {
  uLongf bound = compressBound(static_cast<uLong>(data.size()));
  std::vector<std::uint8_t> out(bound);
  if (compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()),
                Z_BEST_COMPRESSION) != Z_OK)
    throw std::runtime_error("deflate failed");
  out.resize(bound);
  return out;
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

ImageU8 read_png(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 + 25) fail(path, "truncated PNG");
  ImageU8 img;
  int bit_depth = 0, color_type = -1;
  std::vector<std::uint8_t> idat;
  std::size_t pos = 8;
  bool seen_ihdr = false, seen_iend = false;
  while (pos + 8 <= bytes.size() && !seen_iend) {
    const std::uint32_t len = be32(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) fail(path, "truncated chunk");
    const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
    const std::uint8_t* payload = &bytes[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail(path, "bad IHDR");
      img.width = static_cast<int>(be32(payload));
      img.height = static_cast<int>(be32(payload + 4));
      bit_depth = payload[8];
      color_type = payload[9];
      if (payload[12] != 0) fail(path, "interlaced PNG not supported");
      seen_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      seen_iend = true;
    }
    pos += 12 + len;
  }
  if (!seen_ihdr || idat.empty()) fail(path, "missing PNG chunks");
  if (bit_depth != 8) fail(path, "only 8-bit PNG supported");
  if (color_type == 0)
    img.channels = 1;
  else if (color_type == 2)
    img.channels = 3;
  else
    fail(path, "unsupported PNG color type (want 8-bit gray or RGB)");
  if (img.width <= 0 || img.height <= 0) fail(path, "bad dimensions");

  auto raw = zlib_inflate(idat.data(), idat.size(), path);
  const int bpp = img.channels;
  const std::size_t stride = static_cast<std::size_t>(img.width) * bpp;
  if (raw.size() != (stride + 1) * img.height) fail(path, "bad scanline data size");

  img.pixels.resize(stride * img.height);
  std::vector<std::uint8_t> prev(stride, 0);
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t filter = raw[(stride + 1) * y];
    const std::uint8_t* src = &raw[(stride + 1) * y + 1];
    std::uint8_t* dst = &img.pixels[stride * y];
    for (std::size_t x = 0; x < stride; ++x) {
      const int a = x >= std::size_t(bpp) ? dst[x - bpp] : 0;
      const int b = prev[x];
      const int c = x >= std::size_t(bpp) ? prev[x - bpp] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: fail(path, "bad PNG filter type");
      }
      dst[x] = std::uint8_t(v);
    }
    std::copy(dst, dst + stride, prev.begin());
  }
  return img;
}

void skip_ppm_space(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  while (pos < b.size()) {
    if (std::isspace(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

int read_ppm_int(const std::vector<std::uint8_t>& b, std::size_t& pos,
                 const std::string& path) {
  skip_ppm_space(b, pos);
  if (pos >= b.size() || !std::isdigit(b[pos])) fail(path, "bad PPM header");
  int v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) v = v * 10 + (b[pos++] - '0');
  return v;
}

ImageU8 read_ppm(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2) fail(path, "truncated PPM");
  ImageU8 img;
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    fail(path, "unsupported PPM type (want binary P5/P6)");
  img.channels = bytes[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  img.width = read_ppm_int(bytes, pos, path);
  img.height = read_ppm_int(bytes, pos, path);
  const int maxval = read_ppm_int(bytes, pos, path);
  if (maxval != 255) fail(path, "only maxval 255 supported");
  ++pos;  // the single whitespace byte after maxval
  const std::size_t need = img.expected_size();
  if (bytes.size() < pos + need) fail(path, "truncated PPM data");
  img.pixels.assign(bytes.begin() + pos, bytes.begin() + pos + need);
  return img;
}

}  // namespace

ImageU8 read_image(const std::string& path) {
  auto bytes = read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0)
    return read_png(path, bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return read_ppm(path, bytes);
  fail(path, "unknown image format");
}

void write_png(const std::string& path, const ImageU8& img) {
  if (img.channels != 1 && img.channels != 3)
    fail(path, "write_png: want 1 or 3 channels");
  if (img.pixels.size() != img.expected_size()) fail(path, "write_png: bad buffer size");

  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), img.pixels.begin() + stride * y,
               img.pixels.begin() + stride * (y + 1));
  }
  auto compressed = zlib_deflate(raw);

  std::vector<std::uint8_t> out(kPngMagic, kPngMagic + 8);
  auto chunk = [&](const char* type, const std::vector<std::uint8_t>& payload) {
    push_be32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uLong crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
    push_be32(out, static_cast<std::uint32_t>(crc));
  };
  std::vector<std::uint8_t> ihdr;
  push_be32(ihdr, static_cast<std::uint32_t>(img.width));
  push_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);                                   // bit depth
  ihdr.push_back(img.channels == 3 ? 2 : 0);           // color type
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);                                   // no interlace
  chunk("IHDR", ihdr);
  chunk("IDAT", compressed);
  chunk("IEND", {});
  write_file(path, out);
}

void write_ppm(const std::string& path, const ImageU8& img) {
  if (img.channels != 1 && img.channels != 3)
    fail(path, "write_ppm: want 1 or 3 channels");
  if (img.pixels.size() != img.expected_size()) fail(path, "write_ppm: bad buffer size");
  std::vector<std::uint8_t> out;
  const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  write_file(path, out);
}

std::vector<float> to_unit_range(const ImageU8& img) {
  std::vector<float> planes(img.expected_size());
  const int hw = img.width * img.height;
  for (int i = 0; i < hw; ++i)
    for (int c = 0; c < img.channels; ++c)
      planes[static_cast<std::size_t>(c) * hw + i] =
          static_cast<float>(img.pixels[static_cast<std::size_t>(i) * img.channels + c] /
                                 127.5 -
                             1.0);
  return planes;
}

ImageU8 from_unit_range(const std::vector<float>& planes, int channels, int height,
                        int width) {
  ImageU8 img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  if (planes.size() != img.expected_size())
    throw std::invalid_argument("from_unit_range: bad plane buffer size");
  img.pixels.resize(planes.size());
  const int hw = width * height;
  for (int i = 0; i < hw; ++i)
    for (int c = 0; c < channels; ++c) {
      const double v = (planes[static_cast<std::size_t>(c) * hw + i] + 1.0) * 127.5;
      img.pixels[static_cast<std::size_t>(i) * channels + c] =
          static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  return img;
}

}  // namespace ugatit
