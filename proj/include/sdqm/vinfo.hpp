#pragma once

// Predictive / conditional entropy from detection logs and their difference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sdqm/dataio.hpp"
#include "sdqm/error.hpp"

namespace sdqm {

inline constexpr double kEntropyEps = 1e-12;

// Recursive pairwise sum; result depends only on the order of `v`.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

// Mean of -log2 max(p_gt, eps) over records, in bits.
inline double entropy_from_log(const DetectionLog& log, double eps = kEntropyEps) {
  if (!(eps > 0.0 && eps < 0.5)) throw ComputeError("entropy eps must lie in (0, 0.5)");
  if (log.records.empty()) throw ComputeError("entropy_from_log: empty log");
  std::vector<double> terms(log.records.size());
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = -std::log2(std::max(log.records[i].p_gt, eps));
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

struct EntropyReport {
  double h_y = 0;          // predictive
  double h_y_given_x = 0;  // conditional
  double v_information = 0;
};

inline EntropyReport v_information(const DetectionLog& predictive, const DetectionLog& conditional,
                                   double eps = kEntropyEps) {
  if (predictive.mode != EntropySource::predictive)
    throw ComputeError("v_information: first log has mode '" + to_string(predictive.mode) + "', expected predictive");
  if (conditional.mode != EntropySource::conditional)
    throw ComputeError("v_information: second log has mode '" + to_string(conditional.mode) +
                       "', expected conditional");
  EntropyReport r;
  r.h_y = entropy_from_log(predictive, eps);
  r.h_y_given_x = entropy_from_log(conditional, eps);
  r.v_information = r.h_y - r.h_y_given_x;
  return r;
}

}  // namespace sdqm
