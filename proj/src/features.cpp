// SPDX-License-Identifier: Apache-2.0

#include "touchpass/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <tuple>

#include "touchpass/error.hpp"

namespace touchpass {

namespace {

constexpr std::array<std::string_view, kNumChannels> kChannelNames = {
    "x",     "y",      "theta", "v",   "rho", "a",  "dx",
    "dy",    "dtheta", "dv",    "drho", "da", "ddx", "ddy",
    "vr",    "alpha",  "dalpha", "sin", "cos", "r5", "r7"};

// Removes 2*pi jumps so an angle sequence can be differentiated.
std::vector<double> Unwrap(std::span<const double> angles) {
  std::vector<double> out(angles.begin(), angles.end());
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double offset = 0.0;
  for (std::size_t n = 1; n < angles.size(); ++n) {
    double step = angles[n] - angles[n - 1];
    if (step > std::numbers::pi) offset -= kTwoPi;
    if (step < -std::numbers::pi) offset += kTwoPi;
    out[n] = angles[n] + offset;
  }
  return out;
}

// Window [n - half, n + half] clamped to the sequence.
std::pair<std::size_t, std::size_t> Window(std::size_t n, std::size_t half,
                                           std::size_t size) {
  std::size_t lo = n >= half ? n - half : 0;
  std::size_t hi = std::min(size - 1, n + half);
  return {lo, hi};
}

std::vector<double> LengthWidthRatio(const std::vector<TouchPoint>& pts,
                                     std::size_t half) {
  const std::size_t n_pts = pts.size();
  std::vector<double> out(n_pts);
  for (std::size_t n = 0; n < n_pts; ++n) {
    auto [lo, hi] = Window(n, half, n_pts);
    double length = 0.0;
    double min_x = pts[lo].x, max_x = pts[lo].x;
    for (std::size_t k = lo + 1; k <= hi; ++k) {
      length += std::hypot(pts[k].x - pts[k - 1].x, pts[k].y - pts[k - 1].y);
      min_x = std::min(min_x, pts[k].x);
      max_x = std::max(max_x, pts[k].x);
    }
    out[n] = length / (max_x - min_x + kFeatureEpsilon);
  }
  return out;
}

}  // namespace

std::string_view ChannelName(int id) {
  if (id < 1 || id > kNumChannels) return "?";
  return kChannelNames[id - 1];
}

FunctionMatrix::FunctionMatrix(Channels channels, bool normalized)
    : channels_(std::move(channels)), normalized_(normalized) {
  const std::size_t n = channels_[0].size();
  for (const auto& c : channels_) {
    if (c.size() != n) {
      throw Error(ErrorCode::kInvalidArgument, "channel lengths differ");
    }
    for (double v : c) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kInvalidArgument, "non-finite channel value");
      }
    }
  }
}

std::span<const double> FunctionMatrix::channel(int id) const {
  if (id < 1 || id > kNumChannels) {
    throw Error(ErrorCode::kInvalidArgument,
                "channel id out of range: " + std::to_string(id));
  }
  return channels_[id - 1];
}

FunctionSubset::FunctionSubset(std::initializer_list<int> ids)
    : FunctionSubset(std::vector<int>(ids)) {}

FunctionSubset::FunctionSubset(std::vector<int> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  if (ids_.empty()) {
    throw Error(ErrorCode::kSubsetEmpty, "function subset is empty");
  }
  if (ids_.front() < 1 || ids_.back() > kNumChannels) {
    throw Error(ErrorCode::kInvalidArgument, "channel id out of range");
  }
}

FunctionSubset FunctionSubset::All() {
  std::vector<int> ids(kNumChannels);
  for (int i = 0; i < kNumChannels; ++i) ids[i] = i + 1;
  return FunctionSubset(std::move(ids));
}

FunctionSubset FunctionSubset::Baseline() {
  return FunctionSubset{kX, kY, kDx, kDy, kDdx, kDdy};
}

FunctionSubset FunctionSubset::Parse(std::string_view text) {
  std::vector<int> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view field = text.substr(pos, end - pos);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    int id = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), id);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bad channel id '" + std::string(field) + "'");
    }
    ids.push_back(id);
    pos = end + 1;
  }
  return FunctionSubset(std::move(ids));
}

bool FunctionSubset::Contains(int id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

std::string FunctionSubset::ToString() const {
  std::string out;
  for (int id : ids_) {
    if (!out.empty()) out += ',';
    out += std::to_string(id);
  }
  return out;
}

std::vector<double> Derivative(std::span<const double> seq) {
  const std::size_t n = seq.size();
  if (n < kMinSamplePoints) {
    throw Error(ErrorCode::kTooShort,
                "derivative needs at least 5 values, got " + std::to_string(n));
  }
  auto at = [&](std::ptrdiff_t i) {
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
    return seq[static_cast<std::size_t>(i)];
  };
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::ptrdiff_t>(k);
    out[k] = ((at(i + 1) - at(i - 1)) + 2.0 * (at(i + 2) - at(i - 2))) / 10.0;
  }
  return out;
}

FunctionMatrix Extract(const DigitSample& sample) {
  const auto& pts = sample.points;
  const std::size_t n = pts.size();
  if (n < kMinSamplePoints) {
    throw Error(ErrorCode::kTooShort, ToString(sample.key));
  }
  FunctionMatrix::Channels ch;
  auto& x = ch[kX - 1];
  auto& y = ch[kY - 1];
  x.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = pts[i].x;
    y[i] = pts[i].y;
  }

  ch[kDx - 1] = Derivative(x);
  ch[kDy - 1] = Derivative(y);
  const auto& dx = ch[kDx - 1];
  const auto& dy = ch[kDy - 1];

  auto& theta = ch[kTheta - 1];
  auto& v = ch[kVelocity - 1];
  theta.resize(n);
  v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    theta[i] = std::atan2(dy[i], dx[i]);
    v[i] = std::sqrt(dx[i] * dx[i] + dy[i] * dy[i]);
  }
  ch[kDtheta - 1] = Derivative(Unwrap(theta));
  ch[kDvelocity - 1] = Derivative(v);
  const auto& dtheta = ch[kDtheta - 1];
  const auto& dv = ch[kDvelocity - 1];

  auto& rho = ch[kLogRadius - 1];
  auto& acc = ch[kAcceleration - 1];
  rho.resize(n);
  acc.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // A stationary finger gives v = 0; clamp so the log stays finite.
    rho[i] = std::log(std::max(v[i], kFeatureEpsilon) /
                      (std::abs(dtheta[i]) + kFeatureEpsilon));
    const double centripetal = v[i] * dtheta[i];
    acc[i] = std::sqrt(dv[i] * dv[i] + centripetal * centripetal);
  }
  ch[kDlogRadius - 1] = Derivative(rho);
  ch[kDacceleration - 1] = Derivative(acc);
  ch[kDdx - 1] = Derivative(dx);
  ch[kDdy - 1] = Derivative(dy);

  auto& ratio = ch[kSpeedRatio - 1];
  ratio.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [lo, hi] = Window(i, 2, n);
    auto [mn, mx] = std::minmax_element(v.begin() + lo, v.begin() + hi + 1);
    ratio[i] = *mn / std::max(*mx, kFeatureEpsilon);
  }

  auto& alpha = ch[kAlpha - 1];
  alpha.resize(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    alpha[i] = std::atan2(pts[i + 1].y - pts[i].y, pts[i + 1].x - pts[i].x);
  }
  alpha[n - 1] = alpha[n - 2];
  ch[kDalpha - 1] = Derivative(Unwrap(alpha));
  auto& sine = ch[kSine - 1];
  auto& cosine = ch[kCosine - 1];
  sine.resize(n);
  cosine.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sine[i] = std::sin(alpha[i]);
    cosine[i] = std::cos(alpha[i]);
  }

  ch[kLengthWidth5 - 1] = LengthWidthRatio(pts, 2);
  ch[kLengthWidth7 - 1] = LengthWidthRatio(pts, 3);
  return FunctionMatrix(std::move(ch), false);
}

FunctionMatrix ZNorm(const FunctionMatrix& m) {
  if (m.normalized()) {
    throw Error(ErrorCode::kAlreadyNormalized, "matrix is already normalized");
  }
  auto moments = [](const std::vector<double>& c) {
    const double count = static_cast<double>(c.size());
    double mean = 0.0;
    for (double v : c) mean += v;
    mean /= count;
    double var = 0.0;
    for (double v : c) var += (v - mean) * (v - mean);
    return std::pair{mean, std::sqrt(var / count)};
  };
  FunctionMatrix::Channels ch = m.channels();
  for (auto& c : ch) {
    if (c.empty()) continue;
    auto [mean, sd] = moments(c);
    if (sd < 1e-12 * std::max(1.0, std::abs(mean))) {
      std::fill(c.begin(), c.end(), 0.0);
      continue;
    }
    for (double& v : c) v = (v - mean) / sd;
    // Large offsets with small spread lose digits in the first pass; a
    // second pass on the O(1) values restores the mean/std contract. A
    // channel that was constant up to rounding collapses to zero here.
    std::tie(mean, sd) = moments(c);
    if (sd < 1e-6) {
      std::fill(c.begin(), c.end(), 0.0);
      continue;
    }
    for (double& v : c) v = (v - mean) / sd;
  }
  return FunctionMatrix(std::move(ch), true);
}

FunctionMatrix ComputeFeatures(const DigitSample& sample) {
  return ZNorm(Extract(Preprocess(sample)));
}

void WriteChannelCsv(const FunctionMatrix& m, std::ostream& out) {
  out << "index";
  for (int id = 1; id <= kNumChannels; ++id) out << ',' << ChannelName(id);
  out << '\n';
  const auto prec = out.precision(17);
  for (std::size_t i = 0; i < m.length(); ++i) {
    out << i;
    for (const auto& c : m.channels()) out << ',' << c[i];
    out << '\n';
  }
  out.precision(prec);
}

}  // namespace touchpass
