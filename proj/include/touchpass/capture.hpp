// SPDX-License-Identifier: Apache-2.0
//
// Stroke and sample domain types, on-disk ingestion and the centroid/time
// preprocessing shared by every scorer.

#ifndef TOUCHPASS_CAPTURE_HPP_
#define TOUCHPASS_CAPTURE_HPP_

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace touchpass {

struct TouchPoint {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;  // ms since sample start

  bool operator==(const TouchPoint&) const = default;
};

struct SampleKey {
  std::string user_id;
  int digit = 0;
  int session = 1;
  int repetition = 1;

  auto operator<=>(const SampleKey&) const = default;
  bool operator==(const SampleKey&) const = default;
};

std::string ToString(const SampleKey& key);

struct DigitSample {
  SampleKey key;
  std::vector<TouchPoint> points;

  const std::string& user_id() const { return key.user_id; }
  int digit() const { return key.digit; }
  int session() const { return key.session; }
  int repetition() const { return key.repetition; }

  bool operator==(const DigitSample&) const = default;
};

inline constexpr std::size_t kMinSamplePoints = 5;

// Column layout of the per-sample text file. The default is the documented
// "count header, then x y t rows" format; the knobs exist so a corpus with a
// different column order or separator can be read without conversion.
struct LoaderOptions {
  int x_column = 0;
  int y_column = 1;
  int t_column = 2;
  bool count_header = true;
  std::string separators = " \t,;";
  std::size_t min_points = kMinSamplePoints;
};

// Validates metadata and points, drops consecutive points with a repeated
// timestamp (the first one is kept) and enforces the minimum length.
DigitSample MakeSample(SampleKey key, std::vector<TouchPoint> points,
                       std::size_t min_points = kMinSamplePoints);

DigitSample LoadSample(std::string_view content, const SampleKey& meta,
                       const LoaderOptions& options = {});

std::string SerializeSample(const DigitSample& sample);

// Parses "<user>_<digit>_s<session>_r<repetition>.txt". Returns false when
// the name does not follow the pattern.
bool ParseSampleFileName(std::string_view file_name, SampleKey* key);
std::string SampleFileName(const SampleKey& key);

// Samples of one corpus plus the development/evaluation partition. Users are
// ordered lexicographically; the first `dev_users` form the development split.
class Dataset {
 public:
  static constexpr std::size_t kDefaultDevUsers = 50;

  enum class Split { kDevelopment, kEvaluation, kAll };

  Dataset() = default;
  explicit Dataset(std::vector<DigitSample> samples,
                   std::size_t dev_users = kDefaultDevUsers);

  const std::vector<DigitSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  const std::vector<std::string>& users() const { return users_; }
  std::vector<std::string> users(Split split) const;
  std::size_t dev_user_count() const { return dev_users_; }

  // nullptr when the key is absent.
  const DigitSample* Find(const SampleKey& key) const;
  const DigitSample* Find(const std::string& user, int digit, int session,
                          int repetition) const;

  // Restricts the corpus to a subset of users, keeping the split size rule.
  Dataset Restrict(std::span<const std::string> users,
                   std::size_t dev_users) const;

  bool operator==(const Dataset& other) const {
    return samples_ == other.samples_ && dev_users_ == other.dev_users_;
  }

 private:
  std::vector<DigitSample> samples_;  // sorted by key
  std::vector<std::string> users_;
  std::size_t dev_users_ = 0;
  std::map<SampleKey, std::size_t> index_;
};

struct DatasetLoad {
  Dataset dataset;
  std::vector<std::string> skipped;  // "path: reason"
};

DatasetLoad LoadDataset(const std::filesystem::path& root,
                        const LoaderOptions& options = {},
                        std::size_t dev_users = Dataset::kDefaultDevUsers);

void WriteDataset(const Dataset& dataset, const std::filesystem::path& root);

// Centroid moved to the origin, first timestamp moved to zero.
DigitSample Preprocess(const DigitSample& sample);

// Capture interchange used by the drawing client:
// {"user":string,"digit":int,"points":[{"x":num,"y":num,"t":num},...]}
DigitSample SampleFromCaptureJson(const nlohmann::json& capture, int session,
                                  int repetition);
nlohmann::json SampleToCaptureJson(const DigitSample& sample);

}  // namespace touchpass

#endif  // TOUCHPASS_CAPTURE_HPP_
