// SPDX-License-Identifier: Apache-2.0
//
// Verification protocol runner and metrics.
//
// Protocol, per digit and per claimed user u of a split:
//   template  = first n_enrol session-1 samples of u
//   genuine   = u's four session-2 samples
//   impostor  = session-2 samples of every other user of the split
//               (they draw the same digit, i.e. an imitation attack)
// The template score of a probe is the mean of its one-to-one scores.

#ifndef TOUCHPASS_EVAL_HPP_
#define TOUCHPASS_EVAL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "touchpass/capture.hpp"
#include "touchpass/dtw.hpp"
#include "touchpass/features.hpp"
#include "touchpass/rnn.hpp"
#include "touchpass/sffs.hpp"

namespace touchpass {

inline constexpr int kNumDigits = 10;
inline constexpr int kProbeRepetitions = 4;  // session-2 samples per digit
inline constexpr int kMaxPasswordLength = 8;
inline constexpr int kExhaustiveLengthLimit = 6;  // exhaustive below this

// ---------------------------------------------------------------- metrics

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

struct EerResult {
  double eer = 0.0;        // percent
  double threshold = 0.0;  // accept when score >= threshold
};

// Thresholds are swept over the sorted union of all scores with
// FAR = impostor >= t and FRR = genuine < t. The EER is the FAR/FRR midpoint
// where |FAR - FRR| is smallest; the lowest such threshold wins ties.
EerResult ComputeEer(const ScoreSet& s);

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;  // fraction
  double frr = 0.0;  // fraction
};

// One point per distinct score, thresholds ascending.
std::vector<DetPoint> DetCurve(const ScoreSet& s);

// Arithmetic mean, independent of input order.
double Fuse(std::span<const double> scores);

// ---------------------------------------------------------------- scorers

enum class System { kDtwBaseline, kDtwAdapted, kBlstm };

std::string_view SystemName(System s);
System ParseSystem(std::string_view name);

// One-to-one similarity of an enrolment sample and a probe of a digit.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual double Score(int digit, const FunctionMatrix& enrolment,
                       const FunctionMatrix& probe) const = 0;
};

class DtwScorer : public PairScorer {
 public:
  // Same channels for every digit.
  explicit DtwScorer(const FunctionSubset& subset);
  explicit DtwScorer(std::array<FunctionSubset, kNumDigits> per_digit);

  double Score(int digit, const FunctionMatrix& enrolment,
               const FunctionMatrix& probe) const override;
  const FunctionSubset& subset(int digit) const { return subsets_[digit]; }

 private:
  std::vector<FunctionSubset> subsets_;
};

class BlstmScorer : public PairScorer {
 public:
  explicit BlstmScorer(NetworkParams params) : params_(std::move(params)) {}

  double Score(int digit, const FunctionMatrix& enrolment,
               const FunctionMatrix& probe) const override;

 private:
  NetworkParams params_;
};

// Normalized feature matrices for every sample of a dataset.
class FeatureCache {
 public:
  explicit FeatureCache(const Dataset& dataset, unsigned threads = 1);

  const Dataset& dataset() const { return *dataset_; }
  // nullptr when the sample is missing.
  const FunctionMatrix* Find(const std::string& user, int digit, int session,
                             int repetition) const;

 private:
  const Dataset* dataset_;
  std::vector<FunctionMatrix> matrices_;  // parallel to dataset.samples()
};

// ------------------------------------------------------------ score pools

// One-to-one scores of one digit over a set of users:
// Pair(u, i, v, r) = score(u's session-1 repetition i+1, v's session-2
// repetition r+1). Own probes use all four repetitions; other users' probes
// use the first `impostor_reps`.
class DigitScores {
 public:
  DigitScores(const FeatureCache& cache, std::vector<std::string> users,
              const PairScorer& scorer, int digit, int max_enrol,
              int impostor_reps, unsigned threads = 1);

  int digit() const { return digit_; }
  const std::vector<std::string>& users() const { return users_; }
  int max_enrol() const { return max_enrol_; }
  int impostor_reps() const { return impostor_reps_; }

  double Pair(std::size_t u, int i, std::size_t v, int r) const;
  // Mean over the first n_enrol enrolment samples.
  double TemplateScore(std::size_t u, int n_enrol, std::size_t v, int r) const;

  // Genuine: every user's 4 own probes. Impostor: the first probe of every
  // other user.
  ScoreSet Pools(int n_enrol) const;

 private:
  int digit_;
  std::vector<std::string> users_;
  int max_enrol_;
  int impostor_reps_;
  std::vector<double> pair_;
};

ScoreSet BuildScorePools(const FeatureCache& cache, Dataset::Split split,
                         const PairScorer& scorer, int digit, int n_enrol,
                         unsigned threads = 1);

// Scores of all ten digits over a split, ready for password fusion
// (impostors use all four repetitions).
std::vector<DigitScores> ScoreAllDigits(const FeatureCache& cache,
                                        Dataset::Split split,
                                        const PairScorer& scorer, int max_enrol,
                                        unsigned threads = 1);

// ------------------------------------------------------------- passwords

// Digit multiplicities of an order-free password.
using DigitCounts = std::array<int, kNumDigits>;

std::vector<int> CountsToDigits(const DigitCounts& counts);
DigitCounts DigitsToCounts(std::span<const int> digits);
// Number of distinct orderings of a multiset.
std::uint64_t Arrangements(const DigitCounts& counts);
// Multisets of `length` digits with every multiplicity <= max_repeat, in
// lexicographic order of their sorted digit lists.
std::vector<DigitCounts> EnumerateMultisets(int length, int max_repeat = 4);

// Template scores of all digits at a fixed enrolment size, ready for fusion.
class PasswordPools {
 public:
  // `per_digit` must hold the ten digits over the same users with
  // impostor_reps == 4.
  PasswordPools(std::span<const DigitScores> per_digit, int n_enrol);

  int n_enrol() const { return n_enrol_; }
  std::size_t user_count() const { return users_; }

  // Occurrence k (0-based) of a digit in genuine attempt r uses the user's
  // repetition (r + k) mod 4; in an impostor attempt it uses the attacker's
  // repetition k. Every attempt score is the mean over all occurrences.
  ScoreSet Fused(const DigitCounts& counts) const;

 private:
  int n_enrol_;
  std::size_t users_;
  // genuine_[d][u * 4 + r], impostor_[d][(u * users + v) * 4 + k]
  std::array<std::vector<double>, kNumDigits> genuine_;
  std::array<std::vector<double>, kNumDigits> impostor_;
};

enum class SearchMode { kExhaustive, kSffs };

struct PasswordResult {
  int n_enrol = 0;
  int length = 0;
  double eer = 0.0;
  std::vector<int> digits;  // sorted multiset
  std::size_t evaluated = 0;
};

// Lowest-EER multiset of `length` digits (multiplicity <= 4). Ties go to the
// lexicographically smallest sorted digit list in exhaustive mode and to the
// lowest pseudo-candidate ids in floating-search mode.
PasswordResult SearchPasswords(const PasswordPools& pools, int length,
                               SearchMode mode);

struct MultisetEer {
  std::vector<int> digits;
  double eer = 0.0;
};

struct PinDistribution {
  std::vector<MultisetEer> multisets;  // every multiset, enumeration order
  // Over ordered passwords (each multiset weighted by its arrangements).
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  double lower_whisker = 0.0, upper_whisker = 0.0;
  std::vector<double> outliers;  // distinct EER values beyond the whiskers
  std::uint64_t total_passwords = 0;
};

PinDistribution ComputePinDistribution(const PasswordPools& pools,
                                       int length = 4);

struct BandCount {
  std::size_t multisets = 0;
  std::uint64_t passwords = 0;  // ordered
};

BandCount CountInBand(std::span<const MultisetEer> table, double lo, double hi);

// ----------------------------------------------------------------- reports

struct EvalReport {
  System system = System::kDtwBaseline;
  int n_enrol = 1;
  std::string split = "evaluation";
  // NaN for digits that were not evaluated.
  std::array<double, kNumDigits> per_digit_eer{};
  std::array<double, kNumDigits> per_digit_threshold{};
  std::map<int, std::string> subsets;  // digit -> "1,2,7" for DTW systems
  // Over the union of all evaluated digits' pools.
  double pooled_eer = 0.0;
  double pooled_threshold = 0.0;
  std::vector<DetPoint> det_points;
  std::vector<PasswordResult> password_results;
  std::vector<MultisetEer> password_eers;  // for EER-band password filters

  double MeanEer() const;
};

EvalReport RunDigitTable(const FeatureCache& cache, Dataset::Split split,
                         System system, const PairScorer& scorer, int n_enrol,
                         std::span<const int> digits, unsigned threads = 1);

nlohmann::json ReportToJson(const EvalReport& r);
EvalReport ReportFromJson(const nlohmann::json& j);
void WriteDigitTableCsv(const EvalReport& r, std::ostream& out);
void WritePasswordTableCsv(const EvalReport& r, std::ostream& out);

// ------------------------------------------------------ function selection

struct FunctionSelection {
  std::array<FunctionSubset, kNumDigits> subsets{
      FunctionSubset::Baseline(), FunctionSubset::Baseline(),
      FunctionSubset::Baseline(), FunctionSubset::Baseline(),
      FunctionSubset::Baseline(), FunctionSubset::Baseline(),
      FunctionSubset::Baseline(), FunctionSubset::Baseline(),
      FunctionSubset::Baseline(), FunctionSubset::Baseline()};
  std::map<int, SelectionTrace> traces;

  // How many digits selected each channel (index 0 = channel 1).
  std::array<int, kNumChannels> Histogram() const;
};

// Floating search over the 21 channels for one digit, minimizing the
// development-split EER of the DTW system at the given enrolment size.
SelectionTrace SelectFunctions(const FeatureCache& cache, int digit,
                               int n_enrol = 1, unsigned threads = 1,
                               std::size_t max_size = kNumChannels);

nlohmann::json SelectionToJson(const FunctionSelection& s);
FunctionSelection SelectionFromJson(const nlohmann::json& j);

}  // namespace touchpass

#endif  // TOUCHPASS_EVAL_HPP_
