#pragma once

// Shared setup for unit tests that need an encoder: a tiny untrained base
// built once per process, and scratch directories under the system temp dir.

#include <filesystem>
#include <string>

#include "toy.hpp"

namespace fixtures {

inline const toy::Base& tiny_base() {
  static const toy::Base base = toy::make_base(
      {.vocab_size = 400, .toy_sentences = 60, .background_sentences = 100, .pretrain_epochs = 0});
  return base;
}

inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("plug_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
