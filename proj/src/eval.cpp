// SPDX-License-Identifier: Apache-2.0

#include "touchpass/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "touchpass/error.hpp"
#include "touchpass/parallel.hpp"

namespace touchpass {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double SortedMean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

// ---------------------------------------------------------------- metrics

EerResult ComputeEer(const ScoreSet& s) {
  if (s.genuine.empty() || s.impostor.empty()) {
    throw Error(ErrorCode::kEmptyPool, "EER needs genuine and impostor scores");
  }
  std::vector<double> gen = s.genuine, imp = s.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> thresholds;
  thresholds.reserve(gen.size() + imp.size());
  std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  // |FAR - FRR| compared exactly as |far_count * Ng - frr_count * Ni|.
  const auto ng = static_cast<long long>(gen.size());
  const auto ni = static_cast<long long>(imp.size());
  long long best_gap = std::numeric_limits<long long>::max();
  long long best_far = 0, best_frr = 0;
  double best_threshold = thresholds.front();
  std::size_t gi = 0, ii = 0;
  for (double t : thresholds) {
    while (gi < gen.size() && gen[gi] < t) ++gi;
    while (ii < imp.size() && imp[ii] < t) ++ii;
    const long long frr = static_cast<long long>(gi);
    const long long far = ni - static_cast<long long>(ii);
    const long long gap = std::llabs(far * ng - frr * ni);
    if (gap < best_gap) {
      best_gap = gap;
      best_far = far;
      best_frr = frr;
      best_threshold = t;
    }
  }
  const double far = static_cast<double>(best_far) / static_cast<double>(ni);
  const double frr = static_cast<double>(best_frr) / static_cast<double>(ng);
  return {100.0 * (far + frr) / 2.0, best_threshold};
}

std::vector<DetPoint> DetCurve(const ScoreSet& s) {
  if (s.genuine.empty() || s.impostor.empty()) {
    throw Error(ErrorCode::kEmptyPool, "DET needs genuine and impostor scores");
  }
  std::vector<double> gen = s.genuine, imp = s.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> thresholds;
  std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  std::vector<DetPoint> det;
  det.reserve(thresholds.size());
  std::size_t gi = 0, ii = 0;
  for (double t : thresholds) {
    while (gi < gen.size() && gen[gi] < t) ++gi;
    while (ii < imp.size() && imp[ii] < t) ++ii;
    det.push_back({t,
                   static_cast<double>(imp.size() - ii) /
                       static_cast<double>(imp.size()),
                   static_cast<double>(gi) / static_cast<double>(gen.size())});
  }
  return det;
}

double Fuse(std::span<const double> scores) {
  if (scores.empty()) {
    throw Error(ErrorCode::kEmpty, "nothing to fuse");
  }
  return SortedMean({scores.begin(), scores.end()});
}

// ---------------------------------------------------------------- scorers

std::string_view SystemName(System s) {
  switch (s) {
    case System::kDtwBaseline: return "dtw-baseline";
    case System::kDtwAdapted: return "dtw-adapted";
    case System::kBlstm: return "blstm";
  }
  return "?";
}

System ParseSystem(std::string_view name) {
  if (name == "dtw-baseline") return System::kDtwBaseline;
  if (name == "dtw-adapted") return System::kDtwAdapted;
  if (name == "blstm") return System::kBlstm;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown system '" + std::string(name) + "'");
}

DtwScorer::DtwScorer(const FunctionSubset& subset)
    : subsets_(kNumDigits, subset) {}

DtwScorer::DtwScorer(std::array<FunctionSubset, kNumDigits> per_digit)
    : subsets_(per_digit.begin(), per_digit.end()) {}

double DtwScorer::Score(int digit, const FunctionMatrix& enrolment,
                        const FunctionMatrix& probe) const {
  return DtwMatch(enrolment, probe, subsets_.at(digit)).score;
}

double BlstmScorer::Score(int, const FunctionMatrix& enrolment,
                          const FunctionMatrix& probe) const {
  return ScorePair(params_, enrolment, probe);
}

FeatureCache::FeatureCache(const Dataset& dataset, unsigned threads)
    : dataset_(&dataset), matrices_(dataset.size()) {
  ParallelFor(dataset.size(), threads, [&](std::size_t i) {
    matrices_[i] = ComputeFeatures(dataset.samples()[i]);
  });
}

const FunctionMatrix* FeatureCache::Find(const std::string& user, int digit,
                                         int session, int repetition) const {
  const DigitSample* s = dataset_->Find(user, digit, session, repetition);
  if (s == nullptr) return nullptr;
  return &matrices_[static_cast<std::size_t>(s - dataset_->samples().data())];
}

// ------------------------------------------------------------ score pools

DigitScores::DigitScores(const FeatureCache& cache,
                         std::vector<std::string> users,
                         const PairScorer& scorer, int digit, int max_enrol,
                         int impostor_reps, unsigned threads)
    : digit_(digit),
      users_(std::move(users)),
      max_enrol_(max_enrol),
      impostor_reps_(impostor_reps) {
  if (digit < 0 || digit >= kNumDigits || max_enrol < 1 ||
      max_enrol > static_cast<int>(kMaxEnrolmentSamples) || impostor_reps < 1 ||
      impostor_reps > kProbeRepetitions) {
    throw Error(ErrorCode::kInvalidArgument, "bad score pool configuration");
  }
  if (users_.size() < 2) {
    throw Error(ErrorCode::kMissingData, "score pools need at least two users");
  }
  const std::size_t n_users = users_.size();
  std::vector<std::vector<const FunctionMatrix*>> enrol(n_users),
      probes(n_users);
  for (std::size_t u = 0; u < n_users; ++u) {
    for (int i = 1; i <= max_enrol; ++i) {
      const FunctionMatrix* m = cache.Find(users_[u], digit, 1, i);
      if (m == nullptr) {
        throw Error(ErrorCode::kMissingData,
                    users_[u] + " lacks session-1 repetition " +
                        std::to_string(i) + " of digit " + std::to_string(digit));
      }
      enrol[u].push_back(m);
    }
    for (int r = 1; r <= kProbeRepetitions; ++r) {
      const FunctionMatrix* m = cache.Find(users_[u], digit, 2, r);
      if (m == nullptr) {
        throw Error(ErrorCode::kMissingData,
                    users_[u] + " lacks session-2 repetition " +
                        std::to_string(r) + " of digit " + std::to_string(digit));
      }
      probes[u].push_back(m);
    }
  }

  pair_.assign(n_users * max_enrol * n_users * kProbeRepetitions, kNaN);
  ParallelFor(n_users * static_cast<std::size_t>(max_enrol), threads,
              [&](std::size_t job) {
                const std::size_t u = job / max_enrol;
                const int i = static_cast<int>(job % max_enrol);
                for (std::size_t v = 0; v < n_users; ++v) {
                  const int reps = v == u ? kProbeRepetitions : impostor_reps_;
                  for (int r = 0; r < reps; ++r) {
                    pair_[((u * max_enrol + i) * n_users + v) *
                              kProbeRepetitions + r] =
                        scorer.Score(digit, *enrol[u][i], *probes[v][r]);
                  }
                }
              });
}

double DigitScores::Pair(std::size_t u, int i, std::size_t v, int r) const {
  return pair_[((u * max_enrol_ + i) * users_.size() + v) * kProbeRepetitions +
               r];
}

double DigitScores::TemplateScore(std::size_t u, int n_enrol, std::size_t v,
                                  int r) const {
  if (n_enrol < 1 || n_enrol > max_enrol_) {
    throw Error(ErrorCode::kInvalidArgument, "n_enrol out of range");
  }
  if (v != u && r >= impostor_reps_) {
    throw Error(ErrorCode::kInvalidArgument, "impostor repetition not scored");
  }
  std::vector<double> s(static_cast<std::size_t>(n_enrol));
  for (int i = 0; i < n_enrol; ++i) s[i] = Pair(u, i, v, r);
  return SortedMean(std::move(s));
}

ScoreSet DigitScores::Pools(int n_enrol) const {
  ScoreSet out;
  const std::size_t n = users_.size();
  for (std::size_t u = 0; u < n; ++u) {
    for (int r = 0; r < kProbeRepetitions; ++r) {
      out.genuine.push_back(TemplateScore(u, n_enrol, u, r));
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (v != u) out.impostor.push_back(TemplateScore(u, n_enrol, v, 0));
    }
  }
  return out;
}

ScoreSet BuildScorePools(const FeatureCache& cache, Dataset::Split split,
                         const PairScorer& scorer, int digit, int n_enrol,
                         unsigned threads) {
  DigitScores scores(cache, cache.dataset().users(split), scorer, digit,
                     n_enrol, 1, threads);
  return scores.Pools(n_enrol);
}

std::vector<DigitScores> ScoreAllDigits(const FeatureCache& cache,
                                        Dataset::Split split,
                                        const PairScorer& scorer, int max_enrol,
                                        unsigned threads) {
  const std::vector<std::string> users = cache.dataset().users(split);
  std::vector<DigitScores> out;
  out.reserve(kNumDigits);
  for (int d = 0; d < kNumDigits; ++d) {
    out.emplace_back(cache, users, scorer, d, max_enrol, kProbeRepetitions,
                     threads);
  }
  return out;
}

// ------------------------------------------------------------- passwords

std::vector<int> CountsToDigits(const DigitCounts& counts) {
  std::vector<int> digits;
  for (int d = 0; d < kNumDigits; ++d) {
    for (int k = 0; k < counts[d]; ++k) digits.push_back(d);
  }
  return digits;
}

DigitCounts DigitsToCounts(std::span<const int> digits) {
  DigitCounts counts{};
  for (int d : digits) {
    if (d < 0 || d >= kNumDigits) {
      throw Error(ErrorCode::kInvalidArgument, "digit out of range");
    }
    ++counts[d];
  }
  return counts;
}

std::uint64_t Arrangements(const DigitCounts& counts) {
  // n! / prod(m!) built up as a product of binomials.
  std::uint64_t result = 1;
  int placed = 0;
  for (int m : counts) {
    for (int k = 1; k <= m; ++k) {
      result = result * static_cast<std::uint64_t>(placed + k) /
               static_cast<std::uint64_t>(k);
    }
    placed += m;
  }
  return result;
}

std::vector<DigitCounts> EnumerateMultisets(int length, int max_repeat) {
  std::vector<DigitCounts> out;
  std::vector<int> digits(static_cast<std::size_t>(length), 0);
  // Non-decreasing digit sequences in lexicographic order.
  auto rec = [&](auto&& self, int pos, int min_digit) -> void {
    if (pos == length) {
      DigitCounts c = DigitsToCounts(digits);
      if (*std::max_element(c.begin(), c.end()) <= max_repeat) out.push_back(c);
      return;
    }
    for (int d = min_digit; d < kNumDigits; ++d) {
      digits[pos] = d;
      self(self, pos + 1, d);
    }
  };
  if (length > 0) rec(rec, 0, 0);
  return out;
}

PasswordPools::PasswordPools(std::span<const DigitScores> per_digit,
                             int n_enrol)
    : n_enrol_(n_enrol) {
  if (per_digit.size() != kNumDigits) {
    throw Error(ErrorCode::kMissingData, "password pools need all ten digits");
  }
  users_ = per_digit[0].users().size();
  for (const DigitScores& ds : per_digit) {
    if (ds.users() != per_digit[0].users() ||
        ds.impostor_reps() != kProbeRepetitions) {
      throw Error(ErrorCode::kInvalidArgument,
                  "per-digit scores must share users and score 4 impostor "
                  "repetitions");
    }
  }
  for (const DigitScores& ds : per_digit) {
    const int d = ds.digit();
    genuine_[d].assign(users_ * kProbeRepetitions, 0.0);
    impostor_[d].assign(users_ * users_ * kProbeRepetitions, kNaN);
    for (std::size_t u = 0; u < users_; ++u) {
      for (std::size_t v = 0; v < users_; ++v) {
        for (int r = 0; r < kProbeRepetitions; ++r) {
          const double s = ds.TemplateScore(u, n_enrol, v, r);
          if (v == u) {
            genuine_[d][u * kProbeRepetitions + r] = s;
          } else {
            impostor_[d][(u * users_ + v) * kProbeRepetitions + r] = s;
          }
        }
      }
    }
  }
}

ScoreSet PasswordPools::Fused(const DigitCounts& counts) const {
  int length = 0;
  for (int m : counts) {
    if (m < 0 || m > kProbeRepetitions) {
      throw Error(ErrorCode::kInvalidArgument,
                  "digit multiplicity must be within 0..4");
    }
    length += m;
  }
  if (length == 0) throw Error(ErrorCode::kEmpty, "empty password");

  ScoreSet out;
  out.genuine.reserve(users_ * kProbeRepetitions);
  out.impostor.reserve(users_ * (users_ - 1));
  std::vector<double> parts;
  parts.reserve(static_cast<std::size_t>(length));
  for (std::size_t u = 0; u < users_; ++u) {
    for (int r = 0; r < kProbeRepetitions; ++r) {
      parts.clear();
      for (int d = 0; d < kNumDigits; ++d) {
        for (int k = 0; k < counts[d]; ++k) {
          parts.push_back(
              genuine_[d][u * kProbeRepetitions + (r + k) % kProbeRepetitions]);
        }
      }
      out.genuine.push_back(Fuse(parts));
    }
    for (std::size_t v = 0; v < users_; ++v) {
      if (v == u) continue;
      parts.clear();
      for (int d = 0; d < kNumDigits; ++d) {
        for (int k = 0; k < counts[d]; ++k) {
          parts.push_back(impostor_[d][(u * users_ + v) * kProbeRepetitions + k]);
        }
      }
      out.impostor.push_back(Fuse(parts));
    }
  }
  return out;
}

PasswordResult SearchPasswords(const PasswordPools& pools, int length,
                               SearchMode mode) {
  if (length < 1 || length > kMaxPasswordLength) {
    throw Error(ErrorCode::kBadLength,
                "password length must be within 1..8, got " +
                    std::to_string(length));
  }
  PasswordResult result;
  result.n_enrol = pools.n_enrol();
  result.length = length;

  if (mode == SearchMode::kExhaustive) {
    if (length >= kExhaustiveLengthLimit) {
      throw Error(ErrorCode::kModeMismatch,
                  "exhaustive search is limited to passwords shorter than 6");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const DigitCounts& c : EnumerateMultisets(length)) {
      const double eer = ComputeEer(pools.Fused(c)).eer;
      ++result.evaluated;
      if (eer < best) {
        best = eer;
        result.digits = CountsToDigits(c);
      }
    }
    result.eer = best;
    return result;
  }

  // Pseudo-candidate id = 4 * digit + copy; the multiplicity of a digit is
  // the number of its copies in the subset.
  std::vector<int> candidates(kNumDigits * kProbeRepetitions);
  std::iota(candidates.begin(), candidates.end(), 0);
  auto to_counts = [](std::span<const int> subset) {
    DigitCounts c{};
    for (int id : subset) ++c[id / kProbeRepetitions];
    return c;
  };
  std::map<DigitCounts, double> cache;
  SubsetObjective objective = [&](std::span<const int> subset) {
    const DigitCounts c = to_counts(subset);
    auto it = cache.find(c);
    if (it != cache.end()) return it->second;
    const double eer = ComputeEer(pools.Fused(c)).eer;
    cache.emplace(c, eer);
    return eer;
  };
  SffsOptions opts;
  opts.max_size = static_cast<std::size_t>(length);
  opts.min_size = static_cast<std::size_t>(length);
  const SelectionTrace trace = SffsSelect(candidates, objective, opts);
  result.eer = trace.best_objective;
  result.digits = CountsToDigits(to_counts(trace.best_subset));
  result.evaluated = cache.size();
  return result;
}

namespace {

// Linear-interpolated quantile of sorted data (R type 7).
double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

PinDistribution ComputePinDistribution(const PasswordPools& pools, int length) {
  if (length < 1 || length > kMaxPasswordLength) {
    throw Error(ErrorCode::kBadLength, "password length out of range");
  }
  PinDistribution dist;
  std::vector<double> expanded;
  for (const DigitCounts& c : EnumerateMultisets(length)) {
    const double eer = ComputeEer(pools.Fused(c)).eer;
    dist.multisets.push_back({CountsToDigits(c), eer});
    const std::uint64_t n = Arrangements(c);
    dist.total_passwords += n;
    expanded.insert(expanded.end(), n, eer);
  }
  std::sort(expanded.begin(), expanded.end());
  dist.min = expanded.front();
  dist.max = expanded.back();
  dist.q1 = Quantile(expanded, 0.25);
  dist.median = Quantile(expanded, 0.5);
  dist.q3 = Quantile(expanded, 0.75);
  const double iqr = dist.q3 - dist.q1;
  const double lo_fence = dist.q1 - 1.5 * iqr;
  const double hi_fence = dist.q3 + 1.5 * iqr;
  dist.lower_whisker = dist.max;
  dist.upper_whisker = dist.min;
  for (double e : expanded) {
    if (e >= lo_fence && e <= hi_fence) {
      dist.lower_whisker = std::min(dist.lower_whisker, e);
      dist.upper_whisker = std::max(dist.upper_whisker, e);
    } else if (dist.outliers.empty() || dist.outliers.back() != e) {
      dist.outliers.push_back(e);
    }
  }
  return dist;
}

BandCount CountInBand(std::span<const MultisetEer> table, double lo,
                      double hi) {
  BandCount count;
  for (const MultisetEer& m : table) {
    if (m.eer >= lo && m.eer <= hi) {
      ++count.multisets;
      count.passwords += Arrangements(DigitsToCounts(m.digits));
    }
  }
  return count;
}

// ----------------------------------------------------------------- reports

double EvalReport::MeanEer() const {
  double sum = 0.0;
  int n = 0;
  for (double e : per_digit_eer) {
    if (!std::isnan(e)) {
      sum += e;
      ++n;
    }
  }
  return n == 0 ? kNaN : sum / n;
}

EvalReport RunDigitTable(const FeatureCache& cache, Dataset::Split split,
                         System system, const PairScorer& scorer, int n_enrol,
                         std::span<const int> digits, unsigned threads) {
  EvalReport report;
  report.system = system;
  report.n_enrol = n_enrol;
  report.split = split == Dataset::Split::kDevelopment ? "development"
                 : split == Dataset::Split::kEvaluation ? "evaluation"
                                                        : "all";
  report.per_digit_eer.fill(kNaN);
  report.per_digit_threshold.fill(kNaN);
  if (const auto* dtw = dynamic_cast<const DtwScorer*>(&scorer)) {
    for (int d : digits) report.subsets[d] = dtw->subset(d).ToString();
  }
  ScoreSet pooled;
  for (int d : digits) {
    const ScoreSet pools =
        BuildScorePools(cache, split, scorer, d, n_enrol, threads);
    const EerResult eer = ComputeEer(pools);
    report.per_digit_eer[d] = eer.eer;
    report.per_digit_threshold[d] = eer.threshold;
    pooled.genuine.insert(pooled.genuine.end(), pools.genuine.begin(),
                          pools.genuine.end());
    pooled.impostor.insert(pooled.impostor.end(), pools.impostor.begin(),
                           pools.impostor.end());
  }
  if (!pooled.genuine.empty()) {
    const EerResult eer = ComputeEer(pooled);
    report.pooled_eer = eer.eer;
    report.pooled_threshold = eer.threshold;
    report.det_points = DetCurve(pooled);
  }
  return report;
}

namespace {

nlohmann::json NullableArray(const std::array<double, kNumDigits>& values) {
  nlohmann::json out = nlohmann::json::array();
  for (double v : values) {
    if (std::isnan(v)) {
      out.push_back(nullptr);
    } else {
      out.push_back(v);
    }
  }
  return out;
}

std::array<double, kNumDigits> NullableFromJson(const nlohmann::json& j) {
  std::array<double, kNumDigits> out;
  out.fill(kNaN);
  for (std::size_t d = 0; d < kNumDigits && d < j.size(); ++d) {
    if (!j[d].is_null()) out[d] = j[d].get<double>();
  }
  return out;
}

}  // namespace

nlohmann::json ReportToJson(const EvalReport& r) {
  nlohmann::json det = nlohmann::json::array();
  for (const DetPoint& p : r.det_points) {
    det.push_back({p.threshold, p.far, p.frr});
  }
  nlohmann::json passwords = nlohmann::json::array();
  for (const PasswordResult& p : r.password_results) {
    passwords.push_back({{"n_enrol", p.n_enrol},
                         {"length", p.length},
                         {"eer", p.eer},
                         {"digits", p.digits},
                         {"evaluated", p.evaluated}});
  }
  nlohmann::json eers = nlohmann::json::array();
  for (const MultisetEer& m : r.password_eers) {
    eers.push_back({{"digits", m.digits}, {"eer", m.eer}});
  }
  nlohmann::json subsets = nlohmann::json::object();
  for (const auto& [d, s] : r.subsets) subsets[std::to_string(d)] = s;
  return {{"system", SystemName(r.system)},
          {"n_enrol", r.n_enrol},
          {"split", r.split},
          {"per_digit_eer", NullableArray(r.per_digit_eer)},
          {"per_digit_threshold", NullableArray(r.per_digit_threshold)},
          {"subsets", std::move(subsets)},
          {"pooled_eer", r.pooled_eer},
          {"pooled_threshold", r.pooled_threshold},
          {"det_points", std::move(det)},
          {"password_results", std::move(passwords)},
          {"password_eers", std::move(eers)}};
}

EvalReport ReportFromJson(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.system = ParseSystem(j.at("system").get<std::string>());
    r.n_enrol = j.at("n_enrol").get<int>();
    r.split = j.value("split", std::string("evaluation"));
    r.per_digit_eer = NullableFromJson(j.at("per_digit_eer"));
    r.per_digit_threshold =
        NullableFromJson(j.value("per_digit_threshold", nlohmann::json::array()));
    if (j.contains("subsets")) {
      for (const auto& [k, v] : j.at("subsets").items()) {
        r.subsets[std::stoi(k)] = v.get<std::string>();
      }
    }
    r.pooled_eer = j.value("pooled_eer", 0.0);
    r.pooled_threshold = j.value("pooled_threshold", 0.0);
    for (const auto& p : j.value("det_points", nlohmann::json::array())) {
      r.det_points.push_back(
          {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    }
    for (const auto& p : j.value("password_results", nlohmann::json::array())) {
      r.password_results.push_back(
          {p.at("n_enrol").get<int>(), p.at("length").get<int>(),
           p.at("eer").get<double>(), p.at("digits").get<std::vector<int>>(),
           p.value("evaluated", std::size_t{0})});
    }
    for (const auto& m : j.value("password_eers", nlohmann::json::array())) {
      r.password_eers.push_back(
          {m.at("digits").get<std::vector<int>>(), m.at("eer").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("report: ") + e.what());
  }
  return r;
}

void WriteDigitTableCsv(const EvalReport& r, std::ostream& out) {
  out << "system,n_enrol";
  for (int d = 0; d < kNumDigits; ++d) out << ",digit" << d;
  out << ",mean\n" << SystemName(r.system) << ',' << r.n_enrol;
  for (double e : r.per_digit_eer) {
    out << ',';
    if (!std::isnan(e)) out << e;
  }
  out << ',' << r.MeanEer() << '\n';
}

void WritePasswordTableCsv(const EvalReport& r, std::ostream& out) {
  out << "n_enrol,length,eer,digits\n";
  for (const PasswordResult& p : r.password_results) {
    out << p.n_enrol << ',' << p.length << ',' << p.eer << ',';
    for (std::size_t i = 0; i < p.digits.size(); ++i) {
      out << (i ? " " : "") << p.digits[i];
    }
    out << '\n';
  }
}

// ------------------------------------------------------ function selection

std::array<int, kNumChannels> FunctionSelection::Histogram() const {
  std::array<int, kNumChannels> h{};
  for (const FunctionSubset& s : subsets) {
    for (int id : s.ids()) ++h[id - 1];
  }
  return h;
}

SelectionTrace SelectFunctions(const FeatureCache& cache, int digit,
                               int n_enrol, unsigned threads,
                               std::size_t max_size) {
  std::vector<int> candidates(kNumChannels);
  std::iota(candidates.begin(), candidates.end(), 1);
  const std::vector<std::string> users =
      cache.dataset().users(Dataset::Split::kDevelopment);
  SubsetObjective objective = [&](std::span<const int> subset) {
    const DtwScorer scorer(FunctionSubset({subset.begin(), subset.end()}));
    DigitScores scores(cache, users, scorer, digit, n_enrol, 1, threads);
    return ComputeEer(scores.Pools(n_enrol)).eer;
  };
  SffsOptions opts;
  opts.max_size = max_size;
  return SffsSelect(candidates, objective, opts);
}

nlohmann::json SelectionToJson(const FunctionSelection& s) {
  nlohmann::json subsets = nlohmann::json::object();
  for (int d = 0; d < kNumDigits; ++d) {
    subsets[std::to_string(d)] = s.subsets[d].ids();
  }
  nlohmann::json traces = nlohmann::json::object();
  for (const auto& [d, t] : s.traces) traces[std::to_string(d)] = TraceToJson(t);
  return {{"subsets", std::move(subsets)}, {"traces", std::move(traces)}};
}

FunctionSelection SelectionFromJson(const nlohmann::json& j) {
  FunctionSelection s;
  try {
    for (const auto& [k, v] : j.at("subsets").items()) {
      const int d = std::stoi(k);
      if (d < 0 || d >= kNumDigits) {
        throw Error(ErrorCode::kMalformedFile, "digit key out of range: " + k);
      }
      s.subsets[d] = FunctionSubset(v.get<std::vector<int>>());
    }
    if (j.contains("traces")) {
      for (const auto& [k, v] : j.at("traces").items()) {
        s.traces[std::stoi(k)] = TraceFromJson(v);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("selection: ") + e.what());
  }
  return s;
}

}  // namespace touchpass
