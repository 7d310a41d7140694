#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "radiofp/domain.hpp"
#include "radiofp/synthgen.hpp"

namespace testing {

inline radiofp::Fingerprint flat_fingerprint(const std::string& id, radiofp::FineClass fine,
                                             double value = -50.0) {
  return {id, fine, radiofp::Matrix(radiofp::kLinkCount, radiofp::kSamplesPerLink, value)};
}

inline radiofp::Dataset generated(std::size_t per_class, std::uint64_t seed, double noise = 1.0) {
  auto cfg = radiofp::GeneratorConfig::defaults();
  cfg.seed = seed;
  cfg.noise_std = noise;
  return radiofp::generate(cfg, radiofp::uniform_counts(per_class)).dataset;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("radiofp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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

 private:
  std::filesystem::path path_;
};

inline double rel_err(double a, double b) {
  const double scale = std::max({1e-300, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

}  // namespace testing
