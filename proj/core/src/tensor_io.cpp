#include "plug/tensor_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "plug/error.hpp"

namespace plug::io {

namespace {

constexpr std::string_view kMagic = "PLUGTNS1";
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  uint64_t uint(int width) {
    need(static_cast<size_t>(width));
    uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<size_t>(width);
    return v;
  }

  std::string_view take(size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  size_t pos() const { return pos_; }

 private:
  void need(size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError(source_ + ": truncated tensor file");
  }
  std::string_view bytes_;
  const std::string& source_;
  size_t pos_ = 0;
};

}  // namespace

const nn::Matrix* TensorFile::find(std::string_view name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return &m;
  }
  return nullptr;
}

uint32_t crc32(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  size_t pos = 0;
  while (pos < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<size_t>(bytes.size() - pos, 1u << 30));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), n);
    pos += n;
  }
  return static_cast<uint32_t>(crc);
}

std::string hex32(uint32_t value) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", value);
  return buf;
}

std::string encode(const TensorFile& file) {
  std::string out(kMagic);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(file.metadata.size()));
  out += file.metadata;
  put_u32(out, static_cast<uint32_t>(file.tensors.size()));
  for (const auto& [name, m] : file.tensors) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_u32(out, 2);
    put_u64(out, static_cast<uint64_t>(m.rows()));
    put_u64(out, static_cast<uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      uint64_t bits = 0;
      std::memcpy(&bits, m.data() + i, sizeof(bits));
      put_u64(out, bits);
    }
  }
  put_u32(out, crc32(out));
  return out;
}

std::string content_checksum(std::string_view encoded) {
  if (encoded.size() < 4) throw DataError("tensor file too short for a checksum");
  return hex32(crc32(encoded.substr(0, encoded.size() - 4)));
}

TensorFile decode(std::string_view bytes, const std::string& source) {
  if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError(source + ": not a tensor file");
  }
  const auto body = bytes.substr(0, bytes.size() - 4);
  Reader trailer(bytes.substr(bytes.size() - 4), source);
  const auto stored = static_cast<uint32_t>(trailer.uint(4));
  if (stored != crc32(body)) {
    throw ChecksumError(source + ": checksum mismatch (stored " + hex32(stored) + ", computed " +
                        hex32(crc32(body)) + ")");
  }
  Reader r(body, source);
  r.take(kMagic.size());
  if (r.uint(4) != kVersion) throw DataError(source + ": unsupported tensor file version");
  TensorFile file;
  file.metadata = std::string(r.take(r.uint(4)));
  const auto count = r.uint(4);
  for (uint64_t t = 0; t < count; ++t) {
    std::string name(r.take(r.uint(4)));
    if (r.uint(4) != 2) throw DataError(source + ": tensor '" + name + "' is not rank 2");
    const auto rows = r.uint(8);
    const auto cols = r.uint(8);
    if (rows * cols > (body.size() - r.pos()) / 8) {
      throw DataError(source + ": tensor '" + name + "' exceeds file size");
    }
    nn::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const uint64_t bits = r.uint(8);
      std::memcpy(m.data() + i, &bits, sizeof(bits));
    }
    file.tensors.emplace_back(std::move(name), std::move(m));
  }
  if (r.pos() != body.size()) throw DataError(source + ": trailing bytes in tensor file");
  return file;
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void append(TensorFile& file, const nn::ParamStore& store, const std::string& prefix) {
  for (const auto* p : store.all()) file.tensors.emplace_back(prefix + p->name, p->value);
}

void load_into(const TensorFile& file, nn::ParamStore& store, const std::string& prefix) {
  for (const auto& [name, m] : file.tensors) {
    if (name.rfind(prefix, 0) == 0) store.add(name.substr(prefix.size()), m);
  }
}

}  // namespace plug::io
