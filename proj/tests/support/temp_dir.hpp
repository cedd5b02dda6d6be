#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace testsupport {

// Unique scratch directory under the system temp root, removed on scope exit.
class temp_dir {
public:
  temp_dir() {
    std::random_device rd;
    const auto tag = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    path_ = std::filesystem::temp_directory_path() / ("rrll-test-" + std::to_string(tag));
    std::filesystem::create_directories(path_);
  }
  ~temp_dir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec); // best effort
  }
  temp_dir(const temp_dir&) = delete;
  temp_dir& operator=(const temp_dir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

} // namespace testsupport
