// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks that need no external corpus. Prints one PASS/FAIL line
// per criterion and exits non-zero if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>

#include "../oracles.hpp"
#include "touchpass/authsvc.hpp"
#include "touchpass/capture.hpp"
#include "touchpass/dtw.hpp"
#include "touchpass/eval.hpp"
#include "touchpass/rnn.hpp"
#include "touchpass/sffs.hpp"
#include "touchpass/synth.hpp"

namespace tp = touchpass;

namespace {

// Tolerances.
constexpr int kDtwCases = 1000;
constexpr int kEerCases = 1000;
constexpr double kGradRelTol = 1e-3;
constexpr double kToyLossReduction = 0.90;
constexpr double kSynthMaxEer = 10.0;
constexpr double kShuffledEer = 50.0;
constexpr double kShuffledTol = 5.0;
constexpr double kMinImpostorRejection = 0.90;

int failures = 0;

void Report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d %s: %s\n", pass ? "PASS" : "FAIL", id, name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string Fmt(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

tp::FunctionMatrix FromSequence(const oracle::Sequence& seq) {
  tp::FunctionMatrix::Channels ch;
  for (auto& c : ch) c.assign(seq.size(), 0.0);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t c = 0; c < seq[i].size(); ++c) ch[c][i] = seq[i][c];
  }
  return tp::FunctionMatrix(std::move(ch), true);
}

void DtwOracle() {
  std::mt19937_64 rng(1006);
  std::uniform_int_distribution<std::size_t> len(1, 6), dim(1, 3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> level(-2, 2);
  int exact = 0;
  for (int trial = 0; trial < kDtwCases; ++trial) {
    const std::size_t d = dim(rng);
    auto make = [&](std::size_t n) {
      oracle::Sequence s(n, std::vector<double>(d));
      for (auto& p : s) {
        for (double& v : p) v = trial % 2 == 0 ? level(rng) : u(rng);
      }
      return s;
    };
    const auto a = make(len(rng));
    const auto b = make(len(rng));
    std::vector<int> ids;
    for (std::size_t c = 1; c <= d; ++c) ids.push_back(static_cast<int>(c));
    const tp::DtwResult r =
        tp::DtwMatch(FromSequence(a), FromSequence(b), tp::FunctionSubset(ids));
    const oracle::PathOptimum o = oracle::ExhaustiveDtw(a, b);
    if (r.distance == o.distance && o.lengths.contains(r.path_length)) ++exact;
  }
  Report(6, "dtw-exhaustive-oracle", exact == kDtwCases,
         std::to_string(exact) + "/" + std::to_string(kDtwCases) + " exact");
}

void EerOracle() {
  std::mt19937_64 rng(1007);
  std::uniform_int_distribution<int> size(1, 60), level(0, 12);
  std::normal_distribution<double> g(0.0, 1.0);
  int exact = 0;
  for (int trial = 0; trial < kEerCases; ++trial) {
    tp::ScoreSet s;
    const bool coarse = trial % 2 == 0;
    const int ng = size(rng), ni = size(rng);
    for (int k = 0; k < ng; ++k) s.genuine.push_back(coarse ? level(rng) + 2 : g(rng) + 1.0);
    for (int k = 0; k < ni; ++k) s.impostor.push_back(coarse ? level(rng) : g(rng));
    const tp::EerResult r = tp::ComputeEer(s);
    const oracle::Eer o = oracle::BruteForceEer(s.genuine, s.impostor);
    if (r.eer == o.eer && r.threshold == o.threshold) ++exact;
  }
  Report(7, "eer-sweep-oracle", exact == kEerCases,
         std::to_string(exact) + "/" + std::to_string(kEerCases) + " exact");
}

void BlstmChecks() {
  const tp::NetworkShape shape{21, 2, 3};
  std::mt19937_64 rng(1008);
  std::normal_distribution<double> g(0.0, 1.0);
  auto random_matrix = [&](std::size_t n) {
    tp::FunctionMatrix::Channels ch;
    for (auto& c : ch) {
      for (std::size_t k = 0; k < n; ++k) c.push_back(g(rng));
    }
    return tp::FunctionMatrix(std::move(ch), true);
  };

  double worst = 0.0;
  bool tiny_ok = true;
  for (int trial = 0; trial < 3; ++trial) {
    const tp::NetworkParams p = tp::InitNetwork(200 + trial, shape);
    const tp::FunctionMatrix a = random_matrix(3), b = random_matrix(3);
    const int label = trial % 2;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
    tp::PairLossAndGradient(p, a, b, label, &grad);
    tp::NetworkParams q = p;
    constexpr double kStep = 1e-4;
    for (Eigen::Index k = 0; k < grad.size(); ++k) {
      const double orig = q.flat()[k];
      q.flat()[k] = orig + kStep;
      const double up = tp::PairLossAndGradient(q, a, b, label, nullptr);
      q.flat()[k] = orig - kStep;
      const double down = tp::PairLossAndGradient(q, a, b, label, nullptr);
      q.flat()[k] = orig;
      const double numeric = (up - down) / (2.0 * kStep);
      const double scale = std::max(std::abs(grad[k]), std::abs(numeric));
      if (scale < 1e-7) {
        tiny_ok = tiny_ok && std::abs(grad[k] - numeric) < 1e-9;
      } else {
        worst = std::max(worst, std::abs(grad[k] - numeric) / scale);
      }
    }
  }

  tp::PairSet toy;
  for (double level : {0.0, 1.0}) {
    for (std::size_t n : {3, 4}) {
      tp::FunctionMatrix::Channels ch;
      for (auto& c : ch) c.assign(n, 0.0);
      ch[0].assign(n, level);
      toy.matrices.emplace_back(std::move(ch), true);
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (i != j) toy.pairs.push_back({i, j, i / 2 == j / 2 ? 1 : 0});
    }
  }
  tp::TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.epochs = 200;
  cfg.batch_size = toy.pairs.size();
  cfg.validation_fraction = 0.0;
  cfg.shuffle = false;
  const tp::TrainResult r = tp::Train(tp::InitNetwork(5, shape), toy, cfg);
  const double reduction = 1.0 - r.loss_curve.back() / r.loss_curve.front();

  Report(8, "blstm-gradient-and-toy-training",
         worst < kGradRelTol && tiny_ok && reduction >= kToyLossReduction,
         Fmt("max relative gradient error %.2e, toy loss reduction %.1f%%", worst,
             100.0 * reduction));
}

// Permutes the drawings of each digit across all (writer, session,
// repetition) slots, destroying the link between label and writer.
tp::Dataset ShuffleLabels(const tp::Dataset& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<tp::DigitSample> out;
  for (int digit = 0; digit < tp::kNumDigits; ++digit) {
    std::vector<const tp::DigitSample*> of_digit;
    for (const auto& s : d.samples()) {
      if (s.key.digit == digit) of_digit.push_back(&s);
    }
    std::vector<std::size_t> perm(of_digit.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < of_digit.size(); ++i) {
      tp::DigitSample s = *of_digit[perm[i]];
      s.key = of_digit[i]->key;
      out.push_back(std::move(s));
    }
  }
  return tp::Dataset(std::move(out), d.users(tp::Dataset::Split::kDevelopment).size());
}

void SyntheticWriters() {
  const auto start = std::chrono::steady_clock::now();
  tp::SynthConfig cfg;
  cfg.writers = 20;
  cfg.dev_writers = 10;
  const tp::Dataset data = tp::GenerateSynthetic(cfg);
  const tp::FeatureCache cache(data);

  tp::FunctionSelection selection;
  auto& subsets = selection.subsets;
  for (int d = 0; d < tp::kNumDigits; ++d) {
    subsets[d] = tp::FunctionSubset(
        tp::SelectFunctions(cache, d, 1).best_subset);
  }
  const tp::DtwScorer adapted(subsets);
  const std::vector<int> digits{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const tp::EvalReport report =
      tp::RunDigitTable(cache, tp::Dataset::Split::kEvaluation,
                        tp::System::kDtwAdapted, adapted, 1, digits);

  const tp::Dataset shuffled = ShuffleLabels(data, 99);
  const tp::FeatureCache shuffled_cache(shuffled);
  const tp::EvalReport noise =
      tp::RunDigitTable(shuffled_cache, tp::Dataset::Split::kEvaluation,
                        tp::System::kDtwAdapted, adapted, 1, digits);

  // A second writer who knows the four-digit password draws it; the victim's
  // template holds one session-1 drawing per digit.
  const double threshold = tp::CalibrateThreshold(report, tp::ThresholdTarget::Eer());
  const auto eval_users = data.users(tp::Dataset::Split::kEvaluation);
  int trials = 0, rejected = 0, genuine_trials = 0, genuine_accepted = 0;
  for (std::size_t u = 0; u < eval_users.size(); ++u) {
    tp::UserRecord victim{eval_users[u], {}, 0, {}};
    for (int d = 0; d < tp::kNumDigits; ++d) {
      victim.templates[d] =
          tp::Template{eval_users[u], d, {*cache.Find(eval_users[u], d, 1, 1)}};
    }
    for (std::size_t v = 0; v < eval_users.size(); ++v) {
      const int writer_v = cfg.dev_writers + static_cast<int>(v);
      const std::vector<int> password =
          tp::GeneratePassword(tp::PasswordPolicy::Pin(4), 1000 * u + v);
      std::vector<tp::DigitSample> attempt;
      for (std::size_t i = 0; i < password.size(); ++i) {
        attempt.push_back(tp::SynthesizeSample(cfg, writer_v, password[i], 2, 1,
                                               5000 + 100 * u + 10 * v + i));
      }
      const tp::VerifyDecision dec =
          tp::Verify(victim, password, attempt, adapted, threshold);
      if (u == v) {
        ++genuine_trials;
        genuine_accepted += dec.accepted;
      } else {
        ++trials;
        rejected += !dec.accepted;
      }
    }
  }
  const double rejection = static_cast<double>(rejected) / trials;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const bool pass = report.MeanEer() <= kSynthMaxEer &&
                    std::abs(noise.pooled_eer - kShuffledEer) <= kShuffledTol &&
                    rejection >= kMinImpostorRejection;
  Report(9, "synthetic-writer-oracle", pass,
         Fmt("adapted mean EER %.2f%%, shuffled-label EER %.2f%%, ",
             report.MeanEer(), noise.pooled_eer) +
             Fmt("impostor rejection %.1f%%, genuine acceptance %.1f%%, ",
                 100.0 * rejection,
                 100.0 * genuine_accepted / std::max(1, genuine_trials)) +
             Fmt("%.0f s", seconds));
}

void RoundTrips() {
  std::vector<std::string> broken;
  tp::SynthConfig cfg;
  cfg.writers = 3;
  cfg.dev_writers = 1;
  cfg.points = 30;
  const tp::Dataset data = tp::GenerateSynthetic(cfg);
  if (!(data == tp::GenerateSynthetic(cfg))) broken.push_back("synthetic determinism");

  for (const tp::DigitSample& s : data.samples()) {
    if (!(tp::LoadSample(tp::SerializeSample(s), s.key) == s)) {
      broken.push_back("sample text");
      break;
    }
    if (!(tp::SampleFromCaptureJson(
              nlohmann::json::parse(tp::SampleToCaptureJson(s).dump()),
              s.key.session, s.key.repetition) == s)) {
      broken.push_back("capture JSON");
      break;
    }
  }

  const auto root = std::filesystem::temp_directory_path() /
                    ("touchpass-acceptance-" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(root);
  tp::WriteDataset(data, root / "corpus");
  if (!(tp::LoadDataset(root / "corpus", {}, 1).dataset == data)) {
    broken.push_back("dataset directory");
  }

  {
    tp::TemplateStore store(root / "store");
    std::vector<tp::DigitSample> samples;
    for (int r = 1; r <= 4; ++r) samples.push_back(*data.Find("w00", 8, 1, r));
    const tp::UserRecord written = store.Enroll("w00", 8, samples);
    tp::TemplateStore reopened(root / "store");
    if (!(reopened.Load("w00") == written)) broken.push_back("template store");
    if (!(tp::RecordFromJson(nlohmann::json::parse(tp::RecordToJson(written).dump())) ==
          written)) {
      broken.push_back("record JSON");
    }
  }
  std::filesystem::remove_all(root);

  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::vector<int>, double> table;
    auto objective = [&](std::span<const int> s) {
      std::vector<int> key(s.begin(), s.end());
      auto it = table.find(key);
      if (it == table.end()) it = table.emplace(key, u(rng)).first;
      return it->second;
    };
    const std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7};
    const tp::SelectionTrace a = tp::SffsSelect(candidates, objective, {});
    const tp::SelectionTrace b = tp::SffsSelect(candidates, objective, {});
    if (!(a == b)) {
      broken.push_back("sffs determinism");
      break;
    }
    if (!(tp::TraceFromJson(nlohmann::json::parse(tp::TraceToJson(a).dump())) == a)) {
      broken.push_back("sffs trace JSON");
      break;
    }
  }

  std::string detail = "capture, persistence and sffs traces exact";
  if (!broken.empty()) {
    detail = "broken:";
    for (const auto& b : broken) detail += " [" + b + "]";
  }
  Report(10, "round-trip-and-determinism", broken.empty(), detail);
}

}  // namespace

int main() {
  DtwOracle();
  EerOracle();
  BlstmChecks();
  SyntheticWriters();
  RoundTrips();
  return failures == 0 ? 0 : 1;
}
