#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "ctxprobe/jsonl.hpp"

namespace ctxprobe::testing {

inline std::filesystem::path source_dir() { return CTXPROBE_SOURCE_DIR; }
inline std::filesystem::path desk_dir() { return source_dir() / "data" / "desk"; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ctxprobe-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& contents) const {
    const auto p = path_ / name;
    std::filesystem::create_directories(p.parent_path());
    atomic_write(p, contents);
    return p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace ctxprobe::testing
