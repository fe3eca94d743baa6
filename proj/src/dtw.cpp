// SPDX-License-Identifier: Apache-2.0

#include "touchpass/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "touchpass/error.hpp"

namespace touchpass {

namespace {

// Point-major copy of the selected channels.
std::vector<double> Gather(const FunctionMatrix& m, const FunctionSubset& s) {
  const std::size_t n = m.length();
  const std::size_t d = s.size();
  std::vector<double> out(n * d);
  for (std::size_t c = 0; c < d; ++c) {
    auto ch = m.channel(s.ids()[c]);
    for (std::size_t i = 0; i < n; ++i) out[i * d + c] = ch[i];
  }
  return out;
}

}  // namespace

DtwResult DtwMatch(const FunctionMatrix& a, const FunctionMatrix& b,
                   const FunctionSubset& subset) {
  if (!a.normalized() || !b.normalized()) {
    throw Error(ErrorCode::kNotNormalized, "DTW inputs must be z-normalized");
  }
  const std::size_t na = a.length();
  const std::size_t nb = b.length();
  if (na == 0 || nb == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty sequence");
  }
  const std::size_t d = subset.size();
  const std::vector<double> pa = Gather(a, subset);
  const std::vector<double> pb = Gather(b, subset);

  auto local = [&](std::size_t i, std::size_t j) {
    const double* u = &pa[i * d];
    const double* v = &pb[j * d];
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = u[c] - v[c];
      acc += diff * diff;
    }
    return std::sqrt(acc);
  };

  // Two rolling rows of accumulated cost and path length.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> prev_cost(nb, kInf), cur_cost(nb, kInf);
  std::vector<std::size_t> prev_len(nb, 0), cur_len(nb, 0);

  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const double c = local(i, j);
      if (i == 0 && j == 0) {
        cur_cost[0] = c;
        cur_len[0] = 1;
        continue;
      }
      double best = kInf;
      std::size_t len = 0;
      if (i > 0 && j > 0) {
        best = prev_cost[j - 1];
        len = prev_len[j - 1];
      }
      if (i > 0 && prev_cost[j] < best) {
        best = prev_cost[j];
        len = prev_len[j];
      }
      if (j > 0 && cur_cost[j - 1] < best) {
        best = cur_cost[j - 1];
        len = cur_len[j - 1];
      }
      cur_cost[j] = best + c;
      cur_len[j] = len + 1;
    }
    std::swap(prev_cost, cur_cost);
    std::swap(prev_len, cur_len);
  }

  DtwResult r;
  r.distance = prev_cost[nb - 1];
  r.path_length = prev_len[nb - 1];
  r.score = std::exp(-r.distance / static_cast<double>(r.path_length));
  return r;
}

double ScoreAgainstTemplate(const Template& t, const FunctionMatrix& probe,
                            const FunctionSubset& subset) {
  if (t.enrolment.empty()) {
    throw Error(ErrorCode::kEmptyTemplate,
                t.user_id + "/digit" + std::to_string(t.digit));
  }
  std::vector<double> scores;
  scores.reserve(t.enrolment.size());
  for (const FunctionMatrix& e : t.enrolment) {
    scores.push_back(DtwMatch(e, probe, subset).score);
  }
  // Summing in sorted order makes the mean independent of enrolment order.
  std::sort(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

}  // namespace touchpass
