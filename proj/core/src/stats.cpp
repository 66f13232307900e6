#include "lfd/stats.hpp"

#include "lfd/errors.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace lfd {

namespace {

constexpr std::size_t kMinPairs = 6;
constexpr std::size_t kExactLimit = 25;

void check_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidArgument("sample contains a non-finite value");
}

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) throw InsufficientDataError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double median(std::span<const double> x) {
  if (x.empty()) throw InsufficientDataError("median of an empty sample");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw SizeMismatchError("paired samples differ in length");
  if (a.size() < kMinPairs)
    throw InsufficientDataError("signed-rank test needs at least " + std::to_string(kMinPairs) + " pairs");
  check_finite(a);
  check_finite(b);

  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
  WilcoxonResult res;
  res.n_used = d.size();
  if (d.empty()) return res;

  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
  // doubled midranks stay integral
  std::vector<long> rank2(n);
  std::vector<std::size_t> tie_sizes;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const long r2 = static_cast<long>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
    tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }
  long w2 = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0.0) w2 += rank2[i];
  res.statistic = static_cast<double>(w2) / 2.0;

  if (n <= kExactLimit) {
    const long total = std::accumulate(rank2.begin(), rank2.end(), 0L);
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    long reach = 0;
    for (long r : rank2) {
      reach += r;
      for (long s = reach; s >= r; --s) count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
    }
    double le = 0.0, ge = 0.0;
    for (long s = 0; s <= total; ++s) {
      if (s <= w2) le += count[static_cast<std::size_t>(s)];
      if (s >= w2) ge += count[static_cast<std::size_t>(s)];
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    res.p = std::min(1.0, 2.0 * std::min(le, ge) / all);
    res.exact = true;
    return res;
  }

  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  for (std::size_t t : tie_sizes) {
    const double tt = static_cast<double>(t);
    var -= (tt * tt * tt - tt) / 48.0;
  }
  res.exact = false;
  if (var <= 0.0) return res;
  const double z = std::max(0.0, std::abs(res.statistic - mu) - 0.5) / std::sqrt(var);
  res.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InsufficientDataError("Welch test needs at least 2 values per sample");
  check_finite(a);
  check_finite(b);
  auto var = [](std::span<const double> x, double m) {
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
  };
  const double ma = mean(a), mb = mean(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double sa = var(a, ma) / na, sb = var(b, mb) / nb;
  WelchResult res;
  const double se2 = sa + sb;
  if (se2 == 0.0) {
    if (ma == mb) return res;
    res.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    res.df = na + nb - 2.0;
    res.p = 0.0;
    return res;
  }
  res.t = (ma - mb) / std::sqrt(se2);
  res.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  const boost::math::students_t dist(res.df);
  res.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.t))));
  return res;
}

CompareResult stats_compare(std::span<const double> a, std::span<const double> b) {
  CompareResult r;
  r.wilcoxon = wilcoxon_signed_rank(a, b);
  r.welch = welch_t_test(a, b);
  r.median_a = median(a);
  r.median_b = median(b);
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  return r;
}

}  // namespace lfd
