#include "dualre/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "dualre/error.hpp"

namespace dualre {

PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  PRF r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

std::size_t EvalReport::non_null_gold() const {
  std::size_t n = 0;
  for (std::size_t g = 1; g < confusion.size(); ++g)
    for (std::size_t c : confusion[g]) n += c;
  return n;
}

EvalReport score_predictions(std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                             std::span<const std::string> predicates) {
  if (gold.size() != predicted.size())
    throw ContractError("score_predictions: " + std::to_string(gold.size()) + " gold labels vs " +
                        std::to_string(predicted.size()) + " predictions");
  const std::size_t n = predicates.size();
  if (n == 0) throw ContractError("score_predictions: empty predicate inventory");
  EvalReport rep;
  rep.predicates.assign(predicates.begin(), predicates.end());
  rep.per_predicate.assign(n, {});
  rep.confusion.assign(n, std::vector<std::size_t>(n, 0));
  rep.num_pairs = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::size_t g = gold[i], p = predicted[i];
    if (g >= n || p >= n) throw ContractError("score_predictions: label out of range");
    ++rep.confusion[g][p];
    if (g == p) {
      if (g != 0) ++rep.per_predicate[g].tp;
      continue;
    }
    if (p != 0) ++rep.per_predicate[p].fp;
    if (g != 0) ++rep.per_predicate[g].fn;
  }
  for (std::size_t r = 1; r < n; ++r) {
    rep.tp += rep.per_predicate[r].tp;
    rep.fp += rep.per_predicate[r].fp;
    rep.fn += rep.per_predicate[r].fn;
  }
  const PRF m = prf_from_counts(rep.tp, rep.fp, rep.fn);
  rep.micro_precision = m.precision;
  rep.micro_recall = m.recall;
  rep.micro_f1 = m.f1;
  return rep;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t r = 0; r < predicates.size(); ++r) {
    const PRF s = prf_from_counts(per_predicate[r].tp, per_predicate[r].fp, per_predicate[r].fn);
    per.push_back({{"predicate", predicates[r]},
                   {"tp", per_predicate[r].tp},
                   {"fp", per_predicate[r].fp},
                   {"fn", per_predicate[r].fn},
                   {"precision", s.precision},
                   {"recall", s.recall},
                   {"f1", s.f1}});
  }
  return {{"num_pairs", num_pairs},
          {"micro_precision", micro_precision},
          {"micro_recall", micro_recall},
          {"micro_f1", micro_f1},
          {"tp", tp},
          {"fp", fp},
          {"fn", fn},
          {"per_predicate", per},
          {"predicates", predicates},
          {"confusion", confusion}};
}

std::string EvalReport::to_text() const {
  std::size_t w = 9;
  for (const auto& p : predicates) w = std::max(w, p.size());
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "pairs %zu  micro P %.4f  R %.4f  F1 %.4f  (TP %zu FP %zu FN %zu)\n", num_pairs,
                micro_precision, micro_recall, micro_f1, tp, fp, fn);
  os << buf << '\n';
  std::snprintf(buf, sizeof buf, "%-*s %6s %6s %6s %8s %8s %8s\n", static_cast<int>(w), "predicate", "TP", "FP", "FN",
                "P", "R", "F1");
  os << buf;
  for (std::size_t r = 1; r < predicates.size(); ++r) {
    const auto& c = per_predicate[r];
    const PRF s = prf_from_counts(c.tp, c.fp, c.fn);
    std::snprintf(buf, sizeof buf, "%-*s %6zu %6zu %6zu %8.4f %8.4f %8.4f\n", static_cast<int>(w),
                  predicates[r].c_str(), c.tp, c.fp, c.fn, s.precision, s.recall, s.f1);
    os << buf;
  }
  os << "\nconfusion (rows gold, columns predicted)\n";
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), "");
  os << buf;
  for (const auto& p : predicates) {
    std::snprintf(buf, sizeof buf, " %*s", static_cast<int>(std::max<std::size_t>(p.size(), 6)), p.c_str());
    os << buf;
  }
  os << '\n';
  for (std::size_t g = 0; g < predicates.size(); ++g) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), predicates[g].c_str());
    os << buf;
    for (std::size_t p = 0; p < predicates.size(); ++p) {
      std::snprintf(buf, sizeof buf, " %*zu", static_cast<int>(std::max<std::size_t>(predicates[p].size(), 6)),
                    confusion[g][p]);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace dualre
