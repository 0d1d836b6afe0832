#pragma once

#include <stdexcept>
#include <string>

namespace plug {

// Malformed input data: treebanks, corpora, vocabularies, packages.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file whose stored checksum does not match its content, or a bundle built
// against a different encoder.
class ChecksumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an API precondition (unknown language, unregistered adapter).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace plug
