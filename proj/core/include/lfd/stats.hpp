#pragma once

#include <cstddef>
#include <span>

namespace lfd {

struct WilcoxonResult {
  double statistic = 0.0;  // W+, sum of midranks of positive differences
  double p = 1.0;          // two-sided
  std::size_t n_used = 0;  // nonzero differences
  bool exact = true;
};

/// Paired signed-rank test on a - b. Zero differences are dropped, ties get
/// midranks. Exact null distribution for n_used <= 25, otherwise the normal
/// approximation with tie and continuity correction. Needs >= 6 pairs.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

double median(std::span<const double> x);
double mean(std::span<const double> x);

struct CompareResult {
  double median_a = 0.0;
  double median_b = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  WilcoxonResult wilcoxon;
  WelchResult welch;
};

CompareResult stats_compare(std::span<const double> a, std::span<const double> b);

}  // namespace lfd
