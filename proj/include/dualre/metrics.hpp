#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace dualre {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// P = TP/(TP+FP), R = TP/(TP+FN), each 0 on an empty denominator;
// F1 = 2PR/(P+R), 0 when P+R = 0.
PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

struct PredicateCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
  friend bool operator==(const PredicateCounts&, const PredicateCounts&) = default;
};

/// Micro scores over the non-NULL predicates (index 0 is NULL). A wrong
/// non-NULL prediction is an FP for the predicted class and an FN for the gold one.
struct EvalReport {
  std::vector<std::string> predicates;
  std::vector<PredicateCounts> per_predicate;        // NULL row stays zero
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
  std::size_t num_pairs = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double micro_precision = 0.0, micro_recall = 0.0, micro_f1 = 0.0;

  std::size_t non_null_gold() const;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

EvalReport score_predictions(std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                             std::span<const std::string> predicates);

}  // namespace dualre
