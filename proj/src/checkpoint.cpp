#include "ugatit/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ugatit {

namespace {

constexpr char kMagic[4] = {'U', 'G', 'I', 'T'};
constexpr std::uint32_t kVersion = 1;

void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 24));
}

void push_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  push_u32(out, static_cast<std::uint32_t>(v));
  push_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void push_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  push_u32(out, bits);
}

struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = std::uint32_t(bytes[pos]) | (std::uint32_t(bytes[pos + 1]) << 8) |
                      (std::uint32_t(bytes[pos + 2]) << 16) |
                      (std::uint32_t(bytes[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    return lo | (std::uint64_t(u32()) << 32);
  }
  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(&bytes[pos]), n);
    pos += n;
    return s;
  }
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const CheckpointData& data) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  push_u32(out, kVersion);
  push_u32(out, static_cast<std::uint32_t>(data.cfg.img_size));
  push_u32(out, static_cast<std::uint32_t>(data.cfg.ch));
  push_u32(out, static_cast<std::uint32_t>(data.cfg.n_res));
  push_u32(out, static_cast<std::uint32_t>(data.cfg.n_downsample));
  push_u32(out, data.cfg.light_mode ? 1 : 0);
  push_u32(out, data.cfg.use_cam ? 1 : 0);
  push_u64(out, data.iteration);
  push_u32(out, static_cast<std::uint32_t>(data.records.size()));
  for (const auto& r : data.records) {
    push_u32(out, static_cast<std::uint32_t>(r.name.size()));
    out.insert(out.end(), r.name.begin(), r.name.end());
    push_u32(out, static_cast<std::uint32_t>(r.dims.size()));
    std::size_t numel = 1;
    for (std::uint32_t d : r.dims) {
      push_u32(out, d);
      numel *= d;
    }
    if (numel != r.data.size())
      throw std::runtime_error("checkpoint: dims do not match data for " + r.name);
    for (float f : r.data) push_f32(out, f);
  }
  const uLong crc = crc32(0, out.data(), static_cast<uInt>(out.size()));
  push_u32(out, static_cast<std::uint32_t>(crc));
  return out;
}

CheckpointData deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  if (bytes.size() < 4)
    throw std::runtime_error("checkpoint: truncated file");
  const uLong crc = crc32(0, bytes.data(), static_cast<uInt>(bytes.size() - 4));
  Reader tail{bytes, bytes.size() - 4};
  if (tail.u32() != static_cast<std::uint32_t>(crc))
    throw std::runtime_error("checkpoint: CRC mismatch");

  Reader in{bytes, 4};
  const std::uint32_t version = in.u32();
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  CheckpointData data;
  data.cfg.img_size = static_cast<int>(in.u32());
  data.cfg.ch = static_cast<int>(in.u32());
  data.cfg.n_res = static_cast<int>(in.u32());
  data.cfg.n_downsample = static_cast<int>(in.u32());
  data.cfg.light_mode = in.u32() != 0;
  data.cfg.use_cam = in.u32() != 0;
  data.iteration = in.u64();
  const std::uint32_t count = in.u32();
  data.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorRecord r;
    r.name = in.str(in.u32());
    const std::uint32_t rank = in.u32();
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      r.dims.push_back(in.u32());
      numel *= r.dims.back();
    }
    r.data.reserve(numel);
    for (std::size_t e = 0; e < numel; ++e) r.data.push_back(in.f32());
    data.records.push_back(std::move(r));
  }
  if (in.pos != bytes.size() - 4)
    throw std::runtime_error("checkpoint: trailing garbage");
  return data;
}

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  auto bytes = serialize_checkpoint(data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(bytes);
}

}  // namespace ugatit
