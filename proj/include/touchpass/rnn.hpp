// SPDX-License-Identifier: Apache-2.0
//
// Siamese bidirectional-LSTM pair scorer.
//
// Both inputs run through one shared BLSTM layer. The shorter branch output
// is linearly resampled to the longer length, the two branches are stacked
// per time step (first argument on top) and fed to a second BLSTM layer. The
// last forward state and the last backward state go through an affine head
// and a sigmoid. Parameters live in one flat vector so the optimizer and the
// gradient check can treat them uniformly.

#ifndef TOUCHPASS_RNN_HPP_
#define TOUCHPASS_RNN_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "touchpass/capture.hpp"
#include "touchpass/features.hpp"

namespace touchpass {

struct NetworkShape {
  int input = kNumChannels;
  int hidden1 = 21;  // memory blocks per direction, shared layer
  int hidden2 = 42;  // memory blocks per direction, pair layer

  int layer2_input() const { return 4 * hidden1; }
  bool operator==(const NetworkShape&) const = default;
};

// Offsets of one LSTM direction inside the flat parameter vector. Gate rows
// are ordered input, forget, cell, output.
struct LstmBlock {
  int input = 0;
  int hidden = 0;
  std::size_t w_offset = 0;  // 4H x I, column-major
  std::size_t u_offset = 0;  // 4H x H, column-major
  std::size_t b_offset = 0;  // 4H

  std::size_t size() const {
    return static_cast<std::size_t>(4 * hidden) * (input + hidden + 1);
  }
};

class NetworkParams {
 public:
  NetworkParams() : NetworkParams(NetworkShape{}, 0) {}
  // All parameters zero.
  NetworkParams(NetworkShape shape, std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }

  Eigen::VectorXd& flat() { return flat_; }
  const Eigen::VectorXd& flat() const { return flat_; }
  std::size_t size() const { return static_cast<std::size_t>(flat_.size()); }

  // 0 = layer1 forward, 1 = layer1 backward, 2 = layer2 forward,
  // 3 = layer2 backward.
  const LstmBlock& block(int k) const { return blocks_[k]; }
  std::size_t head_w_offset() const { return head_w_offset_; }
  std::size_t head_b_offset() const { return head_b_offset_; }

  bool operator==(const NetworkParams& o) const {
    return shape_ == o.shape_ && seed_ == o.seed_ && flat_ == o.flat_;
  }

 private:
  NetworkShape shape_;
  std::uint64_t seed_ = 0;
  LstmBlock blocks_[4];
  std::size_t head_w_offset_ = 0;
  std::size_t head_b_offset_ = 0;
  Eigen::VectorXd flat_;
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], forget-gate biases 1,
// other biases 0. Deterministic per seed.
NetworkParams InitNetwork(std::uint64_t seed, NetworkShape shape = {});

// Ordered score in (0, 1): `a` occupies the first block of the layer-2 input.
double ForwardPair(const NetworkParams& p, const FunctionMatrix& a,
                   const FunctionMatrix& b);

// Order-free similarity used at inference: mean of both orderings.
double ScorePair(const NetworkParams& p, const FunctionMatrix& a,
                 const FunctionMatrix& b);

// Binary cross-entropy of ForwardPair(a, b) against `label`; when `grad` is
// non-null the parameter gradient is added to it.
double PairLossAndGradient(const NetworkParams& p, const FunctionMatrix& a,
                           const FunctionMatrix& b, int label,
                           Eigen::VectorXd* grad);

struct PairSet {
  struct Pair {
    std::size_t first = 0;   // index into matrices (enrolment side)
    std::size_t second = 0;  // index into matrices (probe side)
    int label = 0;           // 1 genuine, 0 impostor
  };

  std::vector<FunctionMatrix> matrices;
  std::vector<Pair> pairs;

  std::size_t genuine_count() const;
  std::size_t impostor_count() const;
};

// Genuine: every (session-1, session-2) pair of the same user and digit.
// Impostor: same-digit cross-user (session-1, session-2) pairs, sampled
// without replacement down to the genuine count.
PairSet BuildPairs(const Dataset& dataset, Dataset::Split split,
                   std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;  // 0 disables early stopping
  int patience = 10;
  bool shuffle = true;
  unsigned threads = 1;
};

struct TrainResult {
  NetworkParams params;
  std::vector<double> loss_curve;        // mean training loss per epoch
  std::vector<double> validation_curve;  // empty without a held-out split
  int best_epoch = -1;
};

TrainResult Train(const NetworkParams& initial, const PairSet& data,
                  const TrainConfig& config);

nlohmann::json NetworkToJson(const NetworkParams& p);
NetworkParams NetworkFromJson(const nlohmann::json& j);
void SaveNetwork(const NetworkParams& p, const std::filesystem::path& path);
NetworkParams LoadNetwork(const std::filesystem::path& path);
void WriteLossCsv(const TrainResult& result, std::ostream& out);

}  // namespace touchpass

#endif  // TOUCHPASS_RNN_HPP_
