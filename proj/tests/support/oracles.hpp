#pragma once

// Reference implementations used only by tests. Each one is written
// independently of the library code it checks: straight-line, brute force,
// and without sharing helpers with include/canids.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

/// Two-sample Kolmogorov-Smirnov statistic: sup |F_a(x) - F_b(x)|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> points = a;
  points.insert(points.end(), b.begin(), b.end());
  double d = 0;
  for (double x : points) {
    const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / a.size();
    const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / b.size();
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

/// k nearest neighbours of row `self` among `members`, by full sort on
/// (squared distance, row index).
inline std::vector<std::size_t> knn(const std::vector<std::vector<double>>& rows,
                                    const std::vector<std::size_t>& members, std::size_t self, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (auto m : members) {
    if (m == self) continue;
    double d = 0;
    for (std::size_t c = 0; c < rows[self].size(); ++c) d += (rows[self][c] - rows[m][c]) * (rows[self][c] - rows[m][c]);
    all.push_back({d, m});
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

/// True when `syn` = x + u (nn - x) for one u in [0, 1], coordinate-wise to `tol`.
inline bool on_segment(const std::vector<double>& x, const std::vector<double>& nn, const std::vector<double>& syn,
                       double tol) {
  // Recover u from the coordinate with the largest spread, then check all.
  std::size_t best = 0;
  for (std::size_t c = 0; c < x.size(); ++c)
    if (std::fabs(nn[c] - x[c]) > std::fabs(nn[best] - x[best])) best = c;
  double u = 0;
  if (std::fabs(nn[best] - x[best]) > 0) u = (syn[best] - x[best]) / (nn[best] - x[best]);
  if (u < -tol || u > 1 + tol) return false;
  for (std::size_t c = 0; c < x.size(); ++c)
    if (std::fabs(x[c] + u * (nn[c] - x[c]) - syn[c]) > tol) return false;
  return true;
}

/// The arbitration bullets written out case by case. `pred[i]` and `conf[i]`
/// are base model i's class and confidence; `leader[c]` is class c's leader.
/// Returns (class, index of the model whose prediction was taken).
inline std::pair<int, int> lccde(const std::array<int, 3>& pred, const std::array<double, 3>& conf,
                                 const std::vector<int>& leader, bool literal) {
  const int p1 = pred[0], p2 = pred[1], p3 = pred[2];
  if (p1 == p2 && p2 == p3) {
    int who = 0;
    if (conf[1] > conf[who]) who = 1;
    if (conf[2] > conf[who]) who = 2;
    return {p1, who};
  }
  if (p1 == p2 || p1 == p3 || p2 == p3) {
    int majority;
    if (p1 == p2) majority = p1;
    else if (p1 == p3) majority = p1;
    else majority = p2;
    if (literal) {
      const int l = leader[majority];
      return {pred[l], l};
    }
    int a = -1, b = -1;
    for (int i = 0; i < 3; ++i)
      if (pred[i] == majority) (a < 0 ? a : b) = i;
    return conf[b] > conf[a] ? std::pair{majority, b} : std::pair{majority, a};
  }
  int aligned_count = 0;
  int only = -1;
  for (int i = 0; i < 3; ++i)
    if (leader[pred[i]] == i) {
      ++aligned_count;
      if (only < 0) only = i;
    }
  if (aligned_count == 1) return {pred[only], only};
  int who = -1;
  for (int i = 0; i < 3; ++i) {
    const bool eligible = aligned_count == 0 || leader[pred[i]] == i;
    if (!eligible) continue;
    if (who < 0 || conf[i] > conf[who]) who = i;
  }
  return {pred[who], who};
}

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

/// Per-class TP/FP/FN by direct counting.
inline std::map<std::string, Counts> confusion_counts(const std::vector<std::string>& truth,
                                                      const std::vector<std::string>& pred) {
  std::map<std::string, Counts> c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    c[truth[i]];
    c[pred[i]];
    if (truth[i] == pred[i]) {
      c[truth[i]].tp++;
    } else {
      c[pred[i]].fp++;
      c[truth[i]].fn++;
    }
  }
  return c;
}

inline double precision(const Counts& c) { return c.tp + c.fp == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fp); }
inline double recall(const Counts& c) { return c.tp + c.fn == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fn); }
inline double f1(const Counts& c) {
  // F1 = 2TP / (2TP + FP + FN), algebraically equal to the harmonic mean.
  const double den = 2.0 * c.tp + c.fp + c.fn;
  return den == 0 ? 0.0 : 2.0 * c.tp / den;
}

/// Mean softmax cross-entropy of raw scores.
inline double log_loss(const std::vector<std::vector<double>>& raw, const std::vector<int>& labels) {
  double total = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double z = 0;
    for (double v : raw[i]) z += std::exp(v);
    total += -std::log(std::exp(raw[i][labels[i]]) / z);
  }
  return total / raw.size();
}

/// Count of windows and window labels by explicit enumeration.
inline std::vector<int> window_labels(const std::vector<bool>& attack, std::size_t w, std::size_t s) {
  std::vector<int> out;
  for (std::size_t start = 0; start + w <= attack.size(); start += s) {
    int l = 0;
    for (std::size_t i = start; i < start + w; ++i)
      if (attack[i]) l = 1;
    out.push_back(l);
  }
  return out;
}

}  // namespace oracle
