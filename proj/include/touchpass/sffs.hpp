// SPDX-License-Identifier: Apache-2.0
//
// Sequential Forward Floating Search over integer candidate ids.

#ifndef TOUCHPASS_SFFS_HPP_
#define TOUCHPASS_SFFS_HPP_

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "json.hpp"

namespace touchpass {

struct SelectionStep {
  enum class Kind { kAdd, kRemove };

  Kind kind = Kind::kAdd;
  int candidate = 0;
  std::size_t size = 0;  // subset size after the step
  double objective = 0.0;

  bool operator==(const SelectionStep&) const = default;
};

struct SelectionTrace {
  std::vector<int> best_subset;  // sorted
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<SelectionStep> history;
  std::size_t evaluations = 0;  // objective calls actually made

  bool operator==(const SelectionTrace&) const = default;
};

// Receives a sorted subset; lower is better. Must be thread-safe when
// SffsOptions::threads > 1.
using SubsetObjective = std::function<double(std::span<const int>)>;

struct SffsOptions {
  std::size_t max_size = 0;  // 0 means |candidates|
  std::size_t min_size = 1;
  bool memoize = true;
  unsigned threads = 1;
};

// Each round adds the candidate with the lowest objective, then removes
// members while that strictly beats the best subset recorded at the smaller
// size. Stops at max_size, or when an add fails to beat the best already
// recorded at its size. Ties go to the lowest candidate id. The result is the
// best subset seen with size in [min_size, max_size].
SelectionTrace SffsSelect(std::span<const int> candidates,
                          const SubsetObjective& objective,
                          const SffsOptions& options);

nlohmann::json TraceToJson(const SelectionTrace& trace);
SelectionTrace TraceFromJson(const nlohmann::json& j);

}  // namespace touchpass

#endif  // TOUCHPASS_SFFS_HPP_
