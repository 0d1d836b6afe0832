#pragma once

// Named-tensor container used for encoder files and language bundles.
//
// Layout, all integers little-endian:
//   "PLUGTNS1"                       8-byte magic
//   u32 version (1)
//   u32 metadata length, metadata    UTF-8 JSON text
//   u32 tensor count
//   per tensor:
//     u32 name length, name          UTF-8
//     u32 rank (always 2)
//     u64 rows, u64 cols
//     rows*cols IEEE-754 binary64    row-major
//   u32 CRC-32 of every preceding byte

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plug/neural/params.hpp"

namespace plug::io {

struct TensorFile {
  std::string metadata = "{}";
  std::vector<std::pair<std::string, nn::Matrix>> tensors;

  const nn::Matrix* find(std::string_view name) const;
};

std::string encode(const TensorFile& file);
// source names the file in error messages.
TensorFile decode(std::string_view bytes, const std::string& source);

void write_file(const std::string& path, std::string_view bytes);
std::string read_file(const std::string& path);

uint32_t crc32(std::string_view bytes);
std::string hex32(uint32_t value);

// Identity of an encoded tensor file: CRC32 of everything before the trailer.
// (A CRC over the whole file, trailer included, is the same for every file.)
std::string content_checksum(std::string_view encoded);

// Appends every parameter of store under prefix + name.
void append(TensorFile& file, const nn::ParamStore& store, const std::string& prefix = "");
// Adds tensors whose name starts with prefix to store (prefix stripped).
void load_into(const TensorFile& file, nn::ParamStore& store, const std::string& prefix);

}  // namespace plug::io
