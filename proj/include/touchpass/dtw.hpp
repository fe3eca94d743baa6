// SPDX-License-Identifier: Apache-2.0
//
// Elastic matching of two function matrices and template scoring.

#ifndef TOUCHPASS_DTW_HPP_
#define TOUCHPASS_DTW_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "touchpass/features.hpp"

namespace touchpass {

struct DtwResult {
  double distance = 0.0;   // minimal accumulated cost D
  std::size_t path_length = 0;  // cells on the optimal path K
  double score = 1.0;      // exp(-D / K)
};

// Symmetric steps {(1,0),(0,1),(1,1)}, unit weights, anchored endpoints,
// Euclidean local cost over the subset channels. When several predecessors
// tie on accumulated cost the diagonal wins, then (i-1, j), then (i, j-1).
DtwResult DtwMatch(const FunctionMatrix& a, const FunctionMatrix& b,
                   const FunctionSubset& subset);

struct Template {
  std::string user_id;
  int digit = 0;
  std::vector<FunctionMatrix> enrolment;  // 1..4 normalized matrices

  bool operator==(const Template&) const = default;
};

inline constexpr std::size_t kMaxEnrolmentSamples = 4;

// Mean DTW score of the probe against every enrolment sample.
double ScoreAgainstTemplate(const Template& t, const FunctionMatrix& probe,
                            const FunctionSubset& subset);

}  // namespace touchpass

#endif  // TOUCHPASS_DTW_HPP_
