#pragma once

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("shapepose_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

#define CHECK_THROWS_KIND(expr, k)                           \
  do {                                                       \
    bool thrown_ = false;                                    \
    try {                                                    \
      (void)(expr);                                          \
    } catch (const shapepose::Error& e_) {                   \
      thrown_ = true;                                        \
      CHECK_MESSAGE(e_.kind() == (k), e_.what());            \
    }                                                        \
    CHECK_MESSAGE(thrown_, "expected an exception: " #expr); \
  } while (0)
