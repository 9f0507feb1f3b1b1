#pragma once

// Brute-force reference formulas. Nothing here calls into the library, so a
// shared bug cannot cancel out.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace oracle {

using ld = long double;

inline double entropy_bits(const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  std::map<int, int> counts;
  for (int y : labels) ++counts[y];
  ld h = 0;
  for (const auto& [k, c] : counts) {
    const ld p = static_cast<ld>(c) / labels.size();
    h -= p * std::log2(p);
  }
  return static_cast<double>(h);
}

// Interior cut points at the linearly interpolated i/nb quantiles, nb capped at
// the number of distinct values; cuts equal to the minimum and repeats dropped.
inline std::vector<double> quantile_cuts(std::vector<double> v, int n_bins) {
  std::sort(v.begin(), v.end());
  std::vector<double> distinct = v;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const int nb = std::min<int>(n_bins, static_cast<int>(distinct.size()));
  std::vector<double> cuts;
  const std::size_t n = v.size();
  for (int i = 1; i < nb; ++i) {
    const double pos = static_cast<double>(i) / nb * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    const double cut = v[lo] + frac * (v[hi] - v[lo]);
    if (cut > v.front() && (cuts.empty() || cuts.back() != cut)) cuts.push_back(cut);
  }
  return cuts;
}

inline int bin_of(const std::vector<double>& cuts, double x) {
  int b = 0;
  for (double c : cuts) {
    if (x >= c) ++b;
  }
  return b;
}

inline double information_gain(const std::vector<double>& x, const std::vector<int>& y, int n_bins) {
  const auto cuts = quantile_cuts(x, n_bins);
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < x.size(); ++i) groups[bin_of(cuts, x[i])].push_back(y[i]);
  ld conditional = 0;
  for (const auto& [b, ys] : groups) conditional += static_cast<ld>(ys.size()) / y.size() * entropy_bits(ys);
  return static_cast<double>(static_cast<ld>(entropy_bits(y)) - conditional);
}

inline double chi_square(const std::vector<double>& x, const std::vector<int>& y, int n_bins, int n_classes) {
  const auto cuts = quantile_cuts(x, n_bins);
  const int rows = static_cast<int>(cuts.size()) + 1;
  std::vector<std::vector<ld>> obs(rows, std::vector<ld>(n_classes, 0));
  for (std::size_t i = 0; i < x.size(); ++i) obs[bin_of(cuts, x[i])][y[i]] += 1;
  std::vector<ld> r(rows, 0), c(n_classes, 0);
  ld n = 0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < n_classes; ++j) {
      r[i] += obs[i][j];
      c[j] += obs[i][j];
      n += obs[i][j];
    }
  }
  ld stat = 0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < n_classes; ++j) {
      const ld e = r[i] * c[j] / n;
      if (e > 0) stat += (obs[i][j] - e) * (obs[i][j] - e) / e;
    }
  }
  return static_cast<double>(stat);
}

// Sum over classes of n_c (mean_c - mean)^2 divided by the pooled within-class
// sum of squares. Returns +inf for zero within-class spread with separated means.
inline double fisher(const std::vector<double>& x, const std::vector<int>& y, int n_classes) {
  std::vector<ld> sum(n_classes, 0), cnt(n_classes, 0);
  ld total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum[y[i]] += x[i];
    cnt[y[i]] += 1;
    total += x[i];
  }
  const ld mean = total / x.size();
  ld between = 0, within = 0;
  for (int c = 0; c < n_classes; ++c) {
    if (cnt[c] == 0) continue;
    const ld mc = sum[c] / cnt[c];
    between += cnt[c] * (mc - mean) * (mc - mean);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const ld mc = sum[y[i]] / cnt[y[i]];
    within += (x[i] - mc) * (x[i] - mc);
  }
  if (within < 1e-24L) return between > 1e-24L ? INFINITY : 0.0;
  return static_cast<double>(between / within);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Best training accuracy of any single axis-aligned threshold (or no split)
// on a small dataset, with majority vote in each half.
inline double best_stump_accuracy(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                  int n_classes) {
  const std::size_t n = y.size();
  auto majority_hits = [&](const std::vector<std::size_t>& idx) {
    std::vector<int> c(n_classes, 0);
    for (auto i : idx) ++c[y[i]];
    return *std::max_element(c.begin(), c.end());
  };
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  int best = majority_hits(all);
  const std::size_t d = x.empty() ? 0 : x[0].size();
  for (std::size_t f = 0; f < d; ++f) {
    std::vector<double> values;
    for (const auto& row : x) values.push_back(row[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t t = 0; t + 1 < values.size(); ++t) {
      const double thr = 0.5 * (values[t] + values[t + 1]);
      std::vector<std::size_t> left, right;
      for (std::size_t i = 0; i < n; ++i) (x[i][f] <= thr ? left : right).push_back(i);
      best = std::max(best, majority_hits(left) + majority_hits(right));
    }
  }
  return static_cast<double>(best) / static_cast<double>(n);
}

}  // namespace oracle
