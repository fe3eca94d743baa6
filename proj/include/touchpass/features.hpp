// SPDX-License-Identifier: Apache-2.0
//
// The 21 time functions computed from one digit sample.
//
// Channel ids are 1-based and follow the usual on-line handwriting table:
//
//    1 x      2 y      3 theta   4 v      5 rho     6 a
//    7 dx     8 dy     9 dtheta 10 dv    11 drho   12 da
//   13 ddx   14 ddy   15 vr     16 alpha 17 dalpha 18 sin   19 cos
//   20 r5    21 r7
//
// Derivatives are taken per sample index with the five-point regression
// delta. Window operators (vr, r5, r7) are centered and shrink at the edges.

#ifndef TOUCHPASS_FEATURES_HPP_
#define TOUCHPASS_FEATURES_HPP_

#include <array>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "touchpass/capture.hpp"

namespace touchpass {

inline constexpr int kNumChannels = 21;
inline constexpr double kFeatureEpsilon = 1e-8;

enum Channel : int {
  kX = 1, kY, kTheta, kVelocity, kLogRadius, kAcceleration,
  kDx, kDy, kDtheta, kDvelocity, kDlogRadius, kDacceleration,
  kDdx, kDdy, kSpeedRatio, kAlpha, kDalpha, kSine, kCosine,
  kLengthWidth5, kLengthWidth7,
};

std::string_view ChannelName(int id);

class FunctionMatrix {
 public:
  using Channels = std::array<std::vector<double>, kNumChannels>;

  FunctionMatrix() = default;
  // Throws InvalidArgument on unequal lengths or non-finite values.
  FunctionMatrix(Channels channels, bool normalized);

  std::size_t length() const { return channels_[0].size(); }
  bool normalized() const { return normalized_; }

  // 1-based channel id.
  std::span<const double> channel(int id) const;
  const Channels& channels() const { return channels_; }

  bool operator==(const FunctionMatrix&) const = default;

 private:
  Channels channels_;
  bool normalized_ = false;
};

// Non-empty set of channel ids, kept sorted.
class FunctionSubset {
 public:
  FunctionSubset(std::initializer_list<int> ids);
  explicit FunctionSubset(std::vector<int> ids);

  static FunctionSubset All();
  // x, y and their first and second derivatives.
  static FunctionSubset Baseline();
  // "1,2,7" form.
  static FunctionSubset Parse(std::string_view text);

  const std::vector<int>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool Contains(int id) const;
  std::string ToString() const;

  bool operator==(const FunctionSubset&) const = default;

 private:
  std::vector<int> ids_;
};

std::vector<double> Derivative(std::span<const double> seq);

// Expects a preprocessed sample; the result is not yet normalized.
FunctionMatrix Extract(const DigitSample& sample);

// Per-channel standardization with population std; flat channels map to 0.
FunctionMatrix ZNorm(const FunctionMatrix& m);

// Preprocess + Extract + ZNorm.
FunctionMatrix ComputeFeatures(const DigitSample& sample);

// Debug dump: header row, then "index,<21 channels>" per point.
void WriteChannelCsv(const FunctionMatrix& m, std::ostream& out);

}  // namespace touchpass

#endif  // TOUCHPASS_FEATURES_HPP_
