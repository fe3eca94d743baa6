// SPDX-License-Identifier: Apache-2.0

#include "touchpass/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "touchpass/error.hpp"

namespace touchpass {

namespace {

constexpr int kBaseHarmonics = 3;
constexpr int kHarmonics = 5;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Curve {
  std::array<double, kHarmonics> ax{}, ay{}, px{}, py{};
  double speed_a = 0.0, speed_b = 0.0;  // speed profile harmonics
  double tempo = 1.0;                   // relative point count
};

std::mt19937_64 Rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(c)};
  return std::mt19937_64(seq);
}

Curve BaseCurve(const SynthConfig& cfg, int digit) {
  auto rng = Rng(cfg.seed, 1, static_cast<std::uint64_t>(digit));
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  Curve c;
  for (int k = 0; k < kBaseHarmonics; ++k) {
    c.ax[k] = 40.0 * amp(rng) / (k + 1);
    c.ay[k] = 40.0 * amp(rng) / (k + 1);
    c.px[k] = phase(rng);
    c.py[k] = phase(rng);
  }
  return c;
}

Curve WriterCurve(const SynthConfig& cfg, int writer, int digit) {
  Curve c = BaseCurve(cfg, digit);
  auto rng = Rng(cfg.seed, 2, static_cast<std::uint64_t>(writer),
                 static_cast<std::uint64_t>(digit));
  std::normal_distribution<double> n(0.0, 1.0);
  const double v = cfg.writer_variation;
  for (int k = 0; k < kHarmonics; ++k) {
    if (k < kBaseHarmonics) {
      c.ax[k] *= 1.0 + v * n(rng);
      c.ay[k] *= 1.0 + v * n(rng);
    } else {
      c.ax[k] = 15.0 * v * n(rng) / (k + 1);
      c.ay[k] = 15.0 * v * n(rng) / (k + 1);
    }
    c.px[k] += v * n(rng);
    c.py[k] += v * n(rng);
  }
  // Per-writer style is shared across digits.
  auto style = Rng(cfg.seed, 3, static_cast<std::uint64_t>(writer));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  c.speed_a = cfg.speed_variation * u(style);
  c.speed_b = cfg.speed_variation * u(style) / 2.0;
  c.tempo = 1.0 + 0.25 * u(style);
  return c;
}

std::vector<TouchPoint> Draw(const SynthConfig& cfg, const Curve& c,
                             std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Curve s = c;
  const double j = cfg.sample_jitter;
  for (int k = 0; k < kHarmonics; ++k) {
    s.ax[k] *= 1.0 + j * n(rng);
    s.ay[k] *= 1.0 + j * n(rng);
    s.px[k] += j * n(rng);
    s.py[k] += j * n(rng);
  }
  s.speed_a += j * n(rng);
  s.speed_b += j * n(rng) / 2.0;
  // Keep the time warp monotone.
  const double total = std::abs(s.speed_a) + std::abs(s.speed_b);
  if (total > 0.9) {
    s.speed_a *= 0.9 / total;
    s.speed_b *= 0.9 / total;
  }
  const int count = std::max(
      static_cast<int>(kMinSamplePoints) + 1,
      static_cast<int>(std::lround(cfg.points * s.tempo * (1.0 + 0.05 * n(rng)))));

  std::vector<TouchPoint> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double u = static_cast<double>(i) / (count - 1);
    const double tau = u + s.speed_a * std::sin(kTwoPi * u) / kTwoPi +
                       s.speed_b * std::sin(2.0 * kTwoPi * u) / (2.0 * kTwoPi);
    // Open curve: the drawing covers 85% of a period.
    const double theta = 0.85 * kTwoPi * tau;
    double x = 0.0, y = 0.0;
    for (int k = 0; k < kHarmonics; ++k) {
      x += s.ax[k] * std::cos((k + 1) * theta + s.px[k]);
      y += s.ay[k] * std::sin((k + 1) * theta + s.py[k]);
    }
    points.push_back({200.0 + x + cfg.position_noise * n(rng),
                      200.0 + y + cfg.position_noise * n(rng),
                      cfg.sample_period * i});
  }
  return points;
}

std::string WriterId(int writer) {
  std::string id = std::to_string(writer);
  if (id.size() < 2) id.insert(0, 2 - id.size(), '0');
  return "w" + id;
}

}  // namespace

DigitSample SynthesizeSample(const SynthConfig& config, int writer, int digit,
                             int session, int repetition,
                             std::uint64_t sample_seed) {
  if (writer < 0 || digit < 0 || digit > 9) {
    throw Error(ErrorCode::kInvalidArgument, "bad writer or digit");
  }
  const Curve c = WriterCurve(config, writer, digit);
  auto rng = Rng(config.seed, 4, sample_seed);
  return MakeSample({WriterId(writer), digit, session, repetition},
                    Draw(config, c, rng));
}

Dataset GenerateSynthetic(const SynthConfig& config) {
  if (config.writers < 2 ||
      config.dev_writers > static_cast<std::size_t>(config.writers)) {
    throw Error(ErrorCode::kInvalidArgument, "bad synthetic writer counts");
  }
  std::vector<DigitSample> samples;
  for (int w = 0; w < config.writers; ++w) {
    for (int d = 0; d <= 9; ++d) {
      const Curve c = WriterCurve(config, w, d);
      auto rng = Rng(config.seed, 5, static_cast<std::uint64_t>(w),
                     static_cast<std::uint64_t>(d));
      for (int session = 1; session <= 2; ++session) {
        for (int rep = 1; rep <= 4; ++rep) {
          samples.push_back(
              MakeSample({WriterId(w), d, session, rep}, Draw(config, c, rng)));
        }
      }
    }
  }
  return Dataset(std::move(samples), config.dev_writers);
}

}  // namespace touchpass
