// SPDX-License-Identifier: Apache-2.0

#ifndef TOUCHPASS_TESTS_HELPERS_HPP_
#define TOUCHPASS_TESTS_HELPERS_HPP_

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "touchpass/capture.hpp"
#include "touchpass/error.hpp"
#include "touchpass/features.hpp"

namespace tptest {

// Code of the touchpass::Error thrown by fn; fails the test otherwise.
template <typename Fn>
touchpass::ErrorCode CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const touchpass::Error& e) {
    return e.code();
  }
  FAIL("expected a touchpass::Error");
  return touchpass::ErrorCode::kEmpty;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("touchpass-" + tag + "-" + std::to_string(rd()));
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

// Random smooth-ish stroke with strictly increasing timestamps.
inline std::vector<touchpass::TouchPoint> RandomStroke(std::mt19937_64& rng,
                                                       int n) {
  std::uniform_real_distribution<double> step(-5.0, 5.0);
  std::uniform_real_distribution<double> dt(5.0, 20.0);
  std::vector<touchpass::TouchPoint> pts;
  double x = step(rng) * 10, y = step(rng) * 10, t = 0.0;
  for (int i = 0; i < n; ++i) {
    pts.push_back({x, y, t});
    x += step(rng);
    y += step(rng);
    t += dt(rng);
  }
  return pts;
}

inline touchpass::DigitSample RandomSample(std::mt19937_64& rng, int n,
                                           int digit = 3) {
  return touchpass::MakeSample({"u", digit, 1, 1}, RandomStroke(rng, n));
}

// Normalized matrix whose channel `id` is `values` and whose other channels
// are zero; the values are used as given.
inline touchpass::FunctionMatrix ChannelMatrix(
    const std::vector<double>& values, int id = 1) {
  touchpass::FunctionMatrix::Channels ch;
  for (auto& c : ch) c.assign(values.size(), 0.0);
  ch[id - 1] = values;
  return touchpass::FunctionMatrix(std::move(ch), true);
}

}  // namespace tptest

#endif  // TOUCHPASS_TESTS_HELPERS_HPP_
