// SPDX-License-Identifier: Apache-2.0
//
// Synthetic writers for tests and demos. Each digit has a shared base curve
// (a few Fourier harmonics); every writer perturbs its harmonics and draws
// with a personal speed profile, and every sample adds small jitter on top.

#ifndef TOUCHPASS_SYNTH_HPP_
#define TOUCHPASS_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <random>

#include "touchpass/capture.hpp"

namespace touchpass {

struct SynthConfig {
  int writers = 20;
  std::size_t dev_writers = 10;
  std::uint64_t seed = 1;
  int points = 80;                 // nominal points per sample
  double writer_variation = 0.1;   // relative harmonic perturbation per writer
  double speed_variation = 0.6;    // amplitude of the writer's speed profile
  double sample_jitter = 0.06;     // relative harmonic noise per sample
  double position_noise = 0.5;     // pixels
  double sample_period = 10.0;     // ms between points
};

// Writers "w00", "w01", ...; two sessions of four repetitions per digit.
Dataset GenerateSynthetic(const SynthConfig& config);

// One extra drawing of `digit` by synthetic writer `writer`, with its own
// jitter stream. Useful for fresh verification attempts.
DigitSample SynthesizeSample(const SynthConfig& config, int writer, int digit,
                             int session, int repetition,
                             std::uint64_t sample_seed);

}  // namespace touchpass

#endif  // TOUCHPASS_SYNTH_HPP_
