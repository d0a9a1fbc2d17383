// Shared test scaffolding: error-kind capture and self-cleaning temp dirs.
#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "rareclass/error.hpp"

namespace testutil {

// Runs fn and reports the ErrorKind it threw, or nullopt if it did not throw.
template <class Fn>
std::optional<rareclass::ErrorKind> error_kind(Fn&& fn) {
  try {
    fn();
  } catch (const rareclass::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

template <class Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const rareclass::Error& e) {
    return e.what();
  }
  return {};
}

// Unique directory under the system temp root, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<unsigned> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("rareclass_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace testutil
