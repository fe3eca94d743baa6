// SPDX-License-Identifier: Apache-2.0

#include "touchpass/sffs.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "touchpass/error.hpp"
#include "touchpass/parallel.hpp"

namespace touchpass {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Evaluator {
 public:
  Evaluator(const SubsetObjective& objective, bool memoize, unsigned threads)
      : objective_(objective), memoize_(memoize), threads_(threads) {}

  // Objective values for a batch of subsets, in input order.
  std::vector<double> Evaluate(const std::vector<std::vector<int>>& subsets) {
    std::vector<double> values(subsets.size(), kInf);
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < subsets.size(); ++i) {
      if (memoize_) {
        auto it = memo_.find(subsets[i]);
        if (it != memo_.end()) {
          values[i] = it->second;
          continue;
        }
      }
      pending.push_back(i);
    }
    ParallelFor(pending.size(), threads_, [&](std::size_t k) {
      values[pending[k]] = objective_(subsets[pending[k]]);
    });
    for (std::size_t i : pending) {
      if (!std::isfinite(values[i])) {
        throw Error(ErrorCode::kNonFiniteObjective,
                    "objective returned a non-finite value");
      }
      if (memoize_) memo_.emplace(subsets[i], values[i]);
    }
    evaluations_ += pending.size();
    return values;
  }

  std::size_t evaluations() const { return evaluations_; }

 private:
  const SubsetObjective& objective_;
  bool memoize_;
  unsigned threads_;
  std::map<std::vector<int>, double> memo_;
  std::size_t evaluations_ = 0;
};

std::vector<int> With(const std::vector<int>& subset, int c) {
  std::vector<int> out = subset;
  out.insert(std::upper_bound(out.begin(), out.end(), c), c);
  return out;
}

std::vector<int> Without(const std::vector<int>& subset, int c) {
  std::vector<int> out;
  out.reserve(subset.size());
  for (int v : subset) {
    if (v != c) out.push_back(v);
  }
  return out;
}

// Index of the smallest value; the first one wins ties.
std::size_t ArgMin(const std::vector<double>& values) {
  return static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
}

}  // namespace

SelectionTrace SffsSelect(std::span<const int> candidates,
                          const SubsetObjective& objective,
                          const SffsOptions& options) {
  std::vector<int> pool(candidates.begin(), candidates.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  if (pool.empty()) {
    throw Error(ErrorCode::kEmptyCandidates, "no candidates");
  }
  const std::size_t max_size =
      options.max_size == 0 ? pool.size() : options.max_size;
  if (max_size > pool.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_size exceeds the number of candidates");
  }
  if (options.min_size < 1 || options.min_size > max_size) {
    throw Error(ErrorCode::kInvalidArgument, "min_size out of range");
  }

  Evaluator eval(objective, options.memoize, options.threads);
  SelectionTrace trace;
  std::vector<double> best(max_size + 1, kInf);
  std::vector<std::vector<int>> best_set(max_size + 1);
  std::vector<int> current;

  while (current.size() < max_size) {
    // Inclusion.
    std::vector<int> outside;
    for (int c : pool) {
      if (!std::binary_search(current.begin(), current.end(), c)) {
        outside.push_back(c);
      }
    }
    std::vector<std::vector<int>> grown;
    for (int c : outside) grown.push_back(With(current, c));
    const std::vector<double> grown_values = eval.Evaluate(grown);
    const std::size_t pick = ArgMin(grown_values);
    current = std::move(grown[pick]);
    const std::size_t k = current.size();
    trace.history.push_back(
        {SelectionStep::Kind::kAdd, outside[pick], k, grown_values[pick]});
    if (grown_values[pick] < best[k]) {
      best[k] = grown_values[pick];
      best_set[k] = current;
    } else if (k >= options.min_size) {
      break;
    }

    // Conditional exclusion.
    while (current.size() > 1) {
      std::vector<std::vector<int>> shrunk;
      for (int c : current) shrunk.push_back(Without(current, c));
      const std::vector<double> shrunk_values = eval.Evaluate(shrunk);
      const std::size_t drop = ArgMin(shrunk_values);
      const std::size_t smaller = current.size() - 1;
      if (!(shrunk_values[drop] < best[smaller])) break;
      const int removed = current[drop];
      current = std::move(shrunk[drop]);
      best[smaller] = shrunk_values[drop];
      best_set[smaller] = current;
      trace.history.push_back(
          {SelectionStep::Kind::kRemove, removed, smaller, shrunk_values[drop]});
    }
  }

  for (std::size_t k = options.min_size; k <= max_size; ++k) {
    if (best[k] < trace.best_objective) {
      trace.best_objective = best[k];
      trace.best_subset = best_set[k];
    }
  }
  trace.evaluations = eval.evaluations();
  return trace;
}

nlohmann::json TraceToJson(const SelectionTrace& trace) {
  nlohmann::json history = nlohmann::json::array();
  for (const SelectionStep& s : trace.history) {
    history.push_back(
        {{"step", s.kind == SelectionStep::Kind::kAdd ? "add" : "remove"},
         {"candidate", s.candidate},
         {"size", s.size},
         {"objective", s.objective}});
  }
  return {{"best_subset", trace.best_subset},
          {"best_objective", trace.best_objective},
          {"evaluations", trace.evaluations},
          {"history", std::move(history)}};
}

SelectionTrace TraceFromJson(const nlohmann::json& j) {
  SelectionTrace trace;
  try {
    trace.best_subset = j.at("best_subset").get<std::vector<int>>();
    trace.best_objective = j.at("best_objective").get<double>();
    trace.evaluations = j.at("evaluations").get<std::size_t>();
    for (const auto& s : j.at("history")) {
      const std::string kind = s.at("step").get<std::string>();
      if (kind != "add" && kind != "remove") {
        throw Error(ErrorCode::kMalformedFile, "unknown step kind " + kind);
      }
      trace.history.push_back(
          {kind == "add" ? SelectionStep::Kind::kAdd
                         : SelectionStep::Kind::kRemove,
           s.at("candidate").get<int>(), s.at("size").get<std::size_t>(),
           s.at("objective").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("trace: ") + e.what());
  }
  return trace;
}

}  // namespace touchpass
