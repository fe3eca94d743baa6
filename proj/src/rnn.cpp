// SPDX-License-Identifier: Apache-2.0

#include "touchpass/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "touchpass/error.hpp"
#include "touchpass/parallel.hpp"

namespace touchpass {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + exp(x)) without overflow.
double Softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

Eigen::Map<const MatrixXd> WeightW(const VectorXd& flat, const LstmBlock& b) {
  return {flat.data() + b.w_offset, 4 * b.hidden, b.input};
}
Eigen::Map<const MatrixXd> WeightU(const VectorXd& flat, const LstmBlock& b) {
  return {flat.data() + b.u_offset, 4 * b.hidden, b.hidden};
}
Eigen::Map<const VectorXd> Bias(const VectorXd& flat, const LstmBlock& b) {
  return {flat.data() + b.b_offset, 4 * b.hidden};
}

struct LstmCache {
  MatrixXd x;      // I x T, in processing order
  MatrixXd gates;  // 4H x T activations: input, forget, cell, output
  MatrixXd c;      // H x T
  MatrixXd h;      // H x T
};

void LstmForward(const VectorXd& flat, const LstmBlock& blk, MatrixXd x,
                 LstmCache* cache) {
  const int hd = blk.hidden;
  const Eigen::Index steps = x.cols();
  const auto w = WeightW(flat, blk);
  const auto u = WeightU(flat, blk);
  const auto bias = Bias(flat, blk);

  MatrixXd z = w * x;
  z.colwise() += bias;
  cache->gates.resize(4 * hd, steps);
  cache->c.resize(hd, steps);
  cache->h.resize(hd, steps);
  VectorXd h_prev = VectorXd::Zero(hd);
  VectorXd c_prev = VectorXd::Zero(hd);
  for (Eigen::Index t = 0; t < steps; ++t) {
    VectorXd zt = z.col(t) + u * h_prev;
    auto gate = cache->gates.col(t);
    for (int k = 0; k < hd; ++k) {
      gate(k) = Sigmoid(zt(k));
      gate(hd + k) = Sigmoid(zt(hd + k));
      gate(2 * hd + k) = std::tanh(zt(2 * hd + k));
      gate(3 * hd + k) = Sigmoid(zt(3 * hd + k));
    }
    for (int k = 0; k < hd; ++k) {
      const double ct = gate(hd + k) * c_prev(k) + gate(k) * gate(2 * hd + k);
      cache->c(k, t) = ct;
      cache->h(k, t) = gate(3 * hd + k) * std::tanh(ct);
    }
    h_prev = cache->h.col(t);
    c_prev = cache->c.col(t);
  }
  cache->x = std::move(x);
}

// Backpropagation through time for one direction. `dh` holds the loss
// gradient with respect to every output h_t. Parameter gradients are added
// into `grad`; the input gradient is written to `dx`.
void LstmBackward(const VectorXd& flat, const LstmBlock& blk,
                  const LstmCache& cache, const MatrixXd& dh, VectorXd* grad,
                  MatrixXd* dx) {
  const int hd = blk.hidden;
  const Eigen::Index steps = cache.x.cols();
  const auto w = WeightW(flat, blk);
  const auto u = WeightU(flat, blk);
  Eigen::Map<MatrixXd> dw(grad->data() + blk.w_offset, 4 * hd, blk.input);
  Eigen::Map<MatrixXd> du(grad->data() + blk.u_offset, 4 * hd, hd);
  Eigen::Map<VectorXd> db(grad->data() + blk.b_offset, 4 * hd);

  MatrixXd dz(4 * hd, steps);
  VectorXd dh_next = VectorXd::Zero(hd);
  VectorXd dc_next = VectorXd::Zero(hd);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto gate = cache.gates.col(t);
    for (int k = 0; k < hd; ++k) {
      const double ig = gate(k), fg = gate(hd + k), gg = gate(2 * hd + k),
                   og = gate(3 * hd + k);
      const double c_prev = t > 0 ? cache.c(k, t - 1) : 0.0;
      const double tc = std::tanh(cache.c(k, t));
      const double dht = dh(k, t) + dh_next(k);
      const double dct = dht * og * (1.0 - tc * tc) + dc_next(k);
      dz(k, t) = dct * gg * ig * (1.0 - ig);
      dz(hd + k, t) = dct * c_prev * fg * (1.0 - fg);
      dz(2 * hd + k, t) = dct * ig * (1.0 - gg * gg);
      dz(3 * hd + k, t) = dht * tc * og * (1.0 - og);
      dc_next(k) = dct * fg;
    }
    dh_next = u.transpose() * dz.col(t);
  }
  dw.noalias() += dz * cache.x.transpose();
  if (steps > 1) {
    du.noalias() +=
        dz.rightCols(steps - 1) * cache.h.leftCols(steps - 1).transpose();
  }
  db += dz.rowwise().sum();
  *dx = w.transpose() * dz;
}

MatrixXd Reversed(const MatrixXd& m) { return m.rowwise().reverse(); }

struct BlstmCache {
  LstmCache fwd;
  LstmCache bwd;
};

// Output rows: forward states on top, backward states (re-aligned to input
// time) below.
MatrixXd BlstmForward(const VectorXd& flat, const LstmBlock& fwd,
                      const LstmBlock& bwd, const MatrixXd& x,
                      BlstmCache* cache) {
  LstmForward(flat, fwd, x, &cache->fwd);
  LstmForward(flat, bwd, Reversed(x), &cache->bwd);
  MatrixXd out(fwd.hidden + bwd.hidden, x.cols());
  out.topRows(fwd.hidden) = cache->fwd.h;
  out.bottomRows(bwd.hidden) = Reversed(cache->bwd.h);
  return out;
}

MatrixXd BlstmBackward(const VectorXd& flat, const LstmBlock& fwd,
                       const LstmBlock& bwd, const BlstmCache& cache,
                       const MatrixXd& d_out, VectorXd* grad) {
  MatrixXd dx_f, dx_b;
  LstmBackward(flat, fwd, cache.fwd, d_out.topRows(fwd.hidden), grad, &dx_f);
  LstmBackward(flat, bwd, cache.bwd, Reversed(d_out.bottomRows(bwd.hidden)),
               grad, &dx_b);
  return dx_f + Reversed(dx_b);
}

// Linear resampling of Ns columns onto L >= Ns columns.
struct Resampler {
  std::vector<Eigen::Index> lo, hi;
  std::vector<double> w;

  Resampler(Eigen::Index source, Eigen::Index target)
      : lo(target), hi(target), w(target) {
    for (Eigen::Index i = 0; i < target; ++i) {
      if (source == target) {
        lo[i] = hi[i] = i;
        w[i] = 0.0;
        continue;
      }
      const double pos = target == 1 ? 0.0
                                     : static_cast<double>(i) * (source - 1) /
                                           static_cast<double>(target - 1);
      lo[i] = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), source - 1);
      hi[i] = std::min<Eigen::Index>(lo[i] + 1, source - 1);
      w[i] = pos - static_cast<double>(lo[i]);
    }
  }

  MatrixXd Apply(const MatrixXd& y) const {
    MatrixXd out(y.rows(), static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) {
      out.col(i) = (1.0 - w[i]) * y.col(lo[i]) + w[i] * y.col(hi[i]);
    }
    return out;
  }

  MatrixXd Adjoint(const MatrixXd& d_out, Eigen::Index source) const {
    MatrixXd dy = MatrixXd::Zero(d_out.rows(), source);
    for (std::size_t i = 0; i < w.size(); ++i) {
      dy.col(lo[i]) += (1.0 - w[i]) * d_out.col(i);
      dy.col(hi[i]) += w[i] * d_out.col(i);
    }
    return dy;
  }
};

MatrixXd InputMatrix(const FunctionMatrix& m, const NetworkShape& shape) {
  if (!m.normalized()) {
    throw Error(ErrorCode::kNotNormalized, "network inputs must be normalized");
  }
  if (shape.input != kNumChannels) {
    throw Error(ErrorCode::kInvalidArgument, "network input width must be 21");
  }
  if (m.length() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty sequence");
  }
  const auto steps = static_cast<Eigen::Index>(m.length());
  MatrixXd x(kNumChannels, steps);
  for (int c = 0; c < kNumChannels; ++c) {
    const auto& ch = m.channels()[c];
    for (Eigen::Index t = 0; t < steps; ++t) x(c, t) = ch[t];
  }
  return x;
}

// Full forward pass; with `grad` set, also backpropagates d(loss)/d(logit).
double Run(const NetworkParams& p, const FunctionMatrix& a,
           const FunctionMatrix& b, int label, VectorXd* grad,
           double* loss) {
  const VectorXd& flat = p.flat();
  const NetworkShape& shape = p.shape();
  const MatrixXd xa = InputMatrix(a, shape);
  const MatrixXd xb = InputMatrix(b, shape);

  BlstmCache l1a, l1b, l2;
  const MatrixXd ya = BlstmForward(flat, p.block(0), p.block(1), xa, &l1a);
  const MatrixXd yb = BlstmForward(flat, p.block(0), p.block(1), xb, &l1b);
  const Eigen::Index steps = std::max(ya.cols(), yb.cols());
  const Resampler ra(ya.cols(), steps), rb(yb.cols(), steps);

  const int width1 = 2 * shape.hidden1;
  MatrixXd z(2 * width1, steps);
  z.topRows(width1) = ra.Apply(ya);
  z.bottomRows(width1) = rb.Apply(yb);
  const MatrixXd y2 = BlstmForward(flat, p.block(2), p.block(3), z, &l2);

  const int h2 = shape.hidden2;
  VectorXd summary(2 * h2);
  summary.head(h2) = y2.col(steps - 1).head(h2);
  summary.tail(h2) = y2.col(0).tail(h2);
  Eigen::Map<const VectorXd> head_w(flat.data() + p.head_w_offset(), 2 * h2);
  const double logit = head_w.dot(summary) + flat(p.head_b_offset());

  if (loss != nullptr) {
    *loss = Softplus(logit) - static_cast<double>(label) * logit;
  }
  if (grad == nullptr) return logit;

  const double d_logit = Sigmoid(logit) - static_cast<double>(label);
  Eigen::Map<VectorXd>(grad->data() + p.head_w_offset(), 2 * h2) +=
      d_logit * summary;
  (*grad)(p.head_b_offset()) += d_logit;

  MatrixXd d_y2 = MatrixXd::Zero(2 * h2, steps);
  d_y2.col(steps - 1).head(h2) = d_logit * head_w.head(h2);
  d_y2.col(0).tail(h2) += d_logit * head_w.tail(h2);
  const MatrixXd d_z =
      BlstmBackward(flat, p.block(2), p.block(3), l2, d_y2, grad);

  const MatrixXd d_ya = ra.Adjoint(d_z.topRows(width1), ya.cols());
  const MatrixXd d_yb = rb.Adjoint(d_z.bottomRows(width1), yb.cols());
  BlstmBackward(flat, p.block(0), p.block(1), l1a, d_ya, grad);
  BlstmBackward(flat, p.block(0), p.block(1), l1b, d_yb, grad);
  return logit;
}

}  // namespace

NetworkParams::NetworkParams(NetworkShape shape, std::uint64_t seed)
    : shape_(shape), seed_(seed) {
  if (shape.input <= 0 || shape.hidden1 <= 0 || shape.hidden2 <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "network dimensions must be > 0");
  }
  std::size_t offset = 0;
  auto place = [&](LstmBlock& blk, int input, int hidden) {
    blk.input = input;
    blk.hidden = hidden;
    blk.w_offset = offset;
    offset += static_cast<std::size_t>(4 * hidden) * input;
    blk.u_offset = offset;
    offset += static_cast<std::size_t>(4 * hidden) * hidden;
    blk.b_offset = offset;
    offset += static_cast<std::size_t>(4 * hidden);
  };
  place(blocks_[0], shape.input, shape.hidden1);
  place(blocks_[1], shape.input, shape.hidden1);
  place(blocks_[2], shape.layer2_input(), shape.hidden2);
  place(blocks_[3], shape.layer2_input(), shape.hidden2);
  head_w_offset_ = offset;
  offset += static_cast<std::size_t>(2 * shape.hidden2);
  head_b_offset_ = offset;
  offset += 1;
  flat_ = VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

NetworkParams InitNetwork(std::uint64_t seed, NetworkShape shape) {
  NetworkParams p(shape, seed);
  std::mt19937_64 rng(seed);
  VectorXd& flat = p.flat();
  auto fill = [&](std::size_t begin, std::size_t count, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) flat(begin + i) = dist(rng);
  };
  for (int k = 0; k < 4; ++k) {
    const LstmBlock& blk = p.block(k);
    const double fan_in = blk.input + blk.hidden;
    fill(blk.w_offset, static_cast<std::size_t>(4 * blk.hidden) * blk.input,
         fan_in);
    fill(blk.u_offset, static_cast<std::size_t>(4 * blk.hidden) * blk.hidden,
         fan_in);
    for (int h = 0; h < blk.hidden; ++h) {
      flat(blk.b_offset + blk.hidden + h) = 1.0;
    }
  }
  fill(p.head_w_offset(), static_cast<std::size_t>(2 * shape.hidden2),
       2.0 * shape.hidden2);
  return p;
}

double ForwardPair(const NetworkParams& p, const FunctionMatrix& a,
                   const FunctionMatrix& b) {
  return Sigmoid(Run(p, a, b, 0, nullptr, nullptr));
}

double ScorePair(const NetworkParams& p, const FunctionMatrix& a,
                 const FunctionMatrix& b) {
  return 0.5 * (ForwardPair(p, a, b) + ForwardPair(p, b, a));
}

double PairLossAndGradient(const NetworkParams& p, const FunctionMatrix& a,
                           const FunctionMatrix& b, int label,
                           Eigen::VectorXd* grad) {
  if (grad != nullptr && static_cast<std::size_t>(grad->size()) != p.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient size mismatch");
  }
  double loss = 0.0;
  Run(p, a, b, label, grad, &loss);
  return loss;
}

std::size_t PairSet::genuine_count() const {
  return static_cast<std::size_t>(std::count_if(
      pairs.begin(), pairs.end(), [](const Pair& p) { return p.label == 1; }));
}

std::size_t PairSet::impostor_count() const {
  return pairs.size() - genuine_count();
}

PairSet BuildPairs(const Dataset& dataset, Dataset::Split split,
                   std::uint64_t seed) {
  const std::vector<std::string> users = dataset.users(split);
  PairSet set;
  std::map<SampleKey, std::size_t> slot;
  auto index_of = [&](const DigitSample& s) {
    auto it = slot.find(s.key);
    if (it != slot.end()) return it->second;
    set.matrices.push_back(ComputeFeatures(s));
    slot.emplace(s.key, set.matrices.size() - 1);
    return set.matrices.size() - 1;
  };

  struct Candidate {
    const DigitSample* enrolment;
    const DigitSample* probe;
  };
  std::vector<Candidate> impostor_pool;
  bool any_second_session = false;
  for (int digit = 0; digit <= 9; ++digit) {
    std::vector<std::vector<const DigitSample*>> first(users.size()),
        second(users.size());
    for (std::size_t u = 0; u < users.size(); ++u) {
      for (int rep = 1; rep <= 4; ++rep) {
        if (auto* s = dataset.Find(users[u], digit, 1, rep)) first[u].push_back(s);
        if (auto* s = dataset.Find(users[u], digit, 2, rep)) second[u].push_back(s);
      }
      any_second_session = any_second_session || !second[u].empty();
    }
    for (std::size_t u = 0; u < users.size(); ++u) {
      for (const DigitSample* e : first[u]) {
        for (const DigitSample* q : second[u]) {
          set.pairs.push_back({index_of(*e), index_of(*q), 1});
        }
        for (std::size_t v = 0; v < users.size(); ++v) {
          if (v == u) continue;
          for (const DigitSample* q : second[v]) {
            impostor_pool.push_back({e, q});
          }
        }
      }
    }
  }
  if (!any_second_session || set.pairs.empty()) {
    throw Error(ErrorCode::kMissingSession,
                "no (session 1, session 2) genuine pairs available");
  }
  if (impostor_pool.empty()) {
    throw Error(ErrorCode::kImpossiblePairing,
                "impostor pairs need at least two users");
  }

  // Seeded partial Fisher-Yates; the first `take` entries are the sample.
  std::mt19937_64 rng(seed);
  const std::size_t take = std::min(set.pairs.size(), impostor_pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, impostor_pool.size() - 1);
    std::swap(impostor_pool[i], impostor_pool[pick(rng)]);
  }
  for (std::size_t i = 0; i < take; ++i) {
    set.pairs.push_back({index_of(*impostor_pool[i].enrolment),
                         index_of(*impostor_pool[i].probe), 0});
  }
  return set;
}

TrainResult Train(const NetworkParams& initial, const PairSet& data,
                  const TrainConfig& config) {
  if (data.pairs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty training set");
  }
  if (!(config.learning_rate >= 0.0) || config.batch_size == 0 ||
      config.epochs < 0) {
    throw Error(ErrorCode::kInvalidArgument, "bad training configuration");
  }
  std::mt19937_64 rng(config.seed);

  std::vector<std::size_t> train_ids(data.pairs.size());
  std::iota(train_ids.begin(), train_ids.end(), 0);
  std::vector<std::size_t> held_out;
  if (config.validation_fraction > 0.0) {
    std::shuffle(train_ids.begin(), train_ids.end(), rng);
    const auto n_val = static_cast<std::size_t>(
        std::floor(config.validation_fraction * train_ids.size()));
    if (n_val > 0 && n_val < train_ids.size()) {
      held_out.assign(train_ids.begin(), train_ids.begin() + n_val);
      train_ids.erase(train_ids.begin(), train_ids.begin() + n_val);
      std::sort(held_out.begin(), held_out.end());
    }
    std::sort(train_ids.begin(), train_ids.end());
  }

  TrainResult result{initial, {}, {}, -1};
  NetworkParams params = initial;
  const auto n_params = static_cast<Eigen::Index>(params.size());
  VectorXd m = VectorXd::Zero(n_params);
  VectorXd v = VectorXd::Zero(n_params);
  long long step = 0;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<double> pair_loss(data.pairs.size(), 0.0);
  std::vector<std::size_t> order = train_ids;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<VectorXd> grads(end - start);
      ParallelFor(end - start, config.threads, [&](std::size_t k) {
        const auto& pr = data.pairs[order[start + k]];
        grads[k] = VectorXd::Zero(n_params);
        pair_loss[order[start + k]] = PairLossAndGradient(
            params, data.matrices[pr.first], data.matrices[pr.second],
            pr.label, &grads[k]);
      });
      VectorXd g = VectorXd::Zero(n_params);
      for (const VectorXd& gk : grads) g += gk;
      g /= static_cast<double>(end - start);

      ++step;
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      VectorXd& theta = params.flat();
      for (Eigen::Index i = 0; i < n_params; ++i) {
        theta(i) -= config.learning_rate * (m(i) / c1) /
                    (std::sqrt(v(i) / c2) + config.adam_epsilon);
      }
    }

    double total = 0.0;
    for (std::size_t id : train_ids) total += pair_loss[id];
    const double epoch_loss = total / static_cast<double>(train_ids.size());
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::kDivergedLoss,
                  "loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.loss_curve.push_back(epoch_loss);

    if (held_out.empty()) {
      result.params = params;
      result.best_epoch = epoch;
      continue;
    }
    std::vector<double> val_loss(held_out.size());
    ParallelFor(held_out.size(), config.threads, [&](std::size_t k) {
      const auto& pr = data.pairs[held_out[k]];
      val_loss[k] = PairLossAndGradient(params, data.matrices[pr.first],
                                        data.matrices[pr.second], pr.label,
                                        nullptr);
    });
    double val = 0.0;
    for (double l : val_loss) val += l;
    val /= static_cast<double>(held_out.size());
    result.validation_curve.push_back(val);
    if (val < best_val) {
      best_val = val;
      since_best = 0;
      result.params = params;
      result.best_epoch = epoch;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  if (config.epochs == 0) result.params = params;
  return result;
}

nlohmann::json NetworkToJson(const NetworkParams& p) {
  const NetworkShape& s = p.shape();
  nlohmann::json tensors = nlohmann::json::array();
  static const char* kBlockNames[4] = {"layer1.forward", "layer1.backward",
                                       "layer2.forward", "layer2.backward"};
  auto add = [&](const std::string& name, std::size_t offset, int rows,
                 int cols) {
    std::vector<double> data(p.flat().data() + offset,
                             p.flat().data() + offset +
                                 static_cast<std::size_t>(rows) * cols);
    tensors.push_back({{"name", name},
                       {"shape", {rows, cols}},
                       {"order", "column-major"},
                       {"data", std::move(data)}});
  };
  for (int k = 0; k < 4; ++k) {
    const LstmBlock& b = p.block(k);
    add(std::string(kBlockNames[k]) + ".W", b.w_offset, 4 * b.hidden, b.input);
    add(std::string(kBlockNames[k]) + ".U", b.u_offset, 4 * b.hidden, b.hidden);
    add(std::string(kBlockNames[k]) + ".b", b.b_offset, 4 * b.hidden, 1);
  }
  add("head.w", p.head_w_offset(), 1, 2 * s.hidden2);
  add("head.b", p.head_b_offset(), 1, 1);
  return {{"format", "touchpass-siamese-blstm"},
          {"version", 1},
          {"shape",
           {{"input", s.input}, {"hidden1", s.hidden1}, {"hidden2", s.hidden2}}},
          {"seed", p.seed()},
          {"tensors", std::move(tensors)}};
}

NetworkParams NetworkFromJson(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "touchpass-siamese-blstm" ||
        j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kMalformedFile, "unsupported checkpoint format");
    }
    NetworkShape shape;
    shape.input = j.at("shape").at("input").get<int>();
    shape.hidden1 = j.at("shape").at("hidden1").get<int>();
    shape.hidden2 = j.at("shape").at("hidden2").get<int>();
    NetworkParams p(shape, j.at("seed").get<std::uint64_t>());
    std::size_t offset = 0;
    for (const auto& t : j.at("tensors")) {
      const auto data = t.at("data").get<std::vector<double>>();
      const auto dims = t.at("shape").get<std::vector<int>>();
      if (dims.size() != 2 ||
          static_cast<std::size_t>(dims[0]) * dims[1] != data.size() ||
          offset + data.size() > p.size()) {
        throw Error(ErrorCode::kMalformedFile,
                    "tensor " + t.at("name").get<std::string>() +
                        " does not match the shape manifest");
      }
      std::copy(data.begin(), data.end(), p.flat().data() + offset);
      offset += data.size();
    }
    if (offset != p.size()) {
      throw Error(ErrorCode::kMalformedFile, "checkpoint is missing tensors");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("checkpoint: ") + e.what());
  }
}

void SaveNetwork(const NetworkParams& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << NetworkToJson(p).dump();
  if (!out) {
    throw Error(ErrorCode::kStorageFailure, "cannot write " + path.string());
  }
}

NetworkParams LoadNetwork(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kStorageFailure, "cannot read " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, e.what());
  }
  return NetworkFromJson(j);
}

void WriteLossCsv(const TrainResult& result, std::ostream& out) {
  out << "epoch,train_loss,validation_loss\n";
  const auto prec = out.precision(17);
  for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
    out << e << ',' << result.loss_curve[e] << ',';
    if (e < result.validation_curve.size()) out << result.validation_curve[e];
    out << '\n';
  }
  out.precision(prec);
}

}  // namespace touchpass
