#pragma once

// Binary decision trees grown greedily on presorted feature columns. The
// split criterion is a policy so one grower serves Gini classification trees
// and the Newton-step regression trees used by gradient boosting.
//
// Tie rule: among equal-gain splits the lowest feature index wins, then the
// lowest threshold. Thresholds are midpoints between consecutive distinct
// values; samples with x <= threshold go left.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "canids/error.hpp"
#include "canids/rng.hpp"

namespace canids {

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> value;  // class distribution or regression output
};

struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const {
    const TreeNode* n = &nodes.front();
    while (n->feature >= 0) n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
    return *n;
  }
  const std::vector<double>& evaluate(std::span<const double> x) const { return leaf_for(x).value; }

  /// Nodes visited on the path to the leaf, root included.
  std::size_t path_length(std::span<const double> x) const {
    std::size_t len = 1;
    const TreeNode* n = &nodes.front();
    while (n->feature >= 0) {
      n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
      ++len;
    }
    return len;
  }

  std::size_t depth() const { return depth_from(0); }

 private:
  std::size_t depth_from(int i) const {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    return n.feature < 0 ? 0 : 1 + std::max(depth_from(n.left), depth_from(n.right));
  }
};

struct TreeParams {
  std::size_t max_depth = 12;
  std::size_t min_leaf = 1;
  /// Fraction of features examined at each split (at least one).
  double feature_frac = 1.0;
  /// Features this tree may split on; empty means all.
  std::vector<std::size_t> allowed_features;
};

/// Row-major view of a design matrix.
struct MatrixView {
  std::span<const double> values;
  std::size_t cols = 0;

  std::size_t rows() const { return cols == 0 ? 0 : values.size() / cols; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return values.subspan(r * cols, cols); }
};

/// Gini impurity over integer class labels. Score = sum_c n_c^2 / n, so the
/// best split maximizes score(left) + score(right).
class GiniCriterion {
 public:
  struct Stats {
    std::vector<double> counts;
    double n = 0;
    double sumsq = 0;
  };

  GiniCriterion(std::span<const int> labels, std::size_t n_classes) : labels_(labels), n_classes_(n_classes) {}

  Stats empty() const { return {std::vector<double>(n_classes_, 0.0), 0, 0}; }
  void add(Stats& s, std::size_t row) const {
    auto& c = s.counts[static_cast<std::size_t>(labels_[row])];
    s.sumsq += 2 * c + 1;
    c += 1;
    s.n += 1;
  }
  void remove(Stats& s, std::size_t row) const {
    auto& c = s.counts[static_cast<std::size_t>(labels_[row])];
    s.sumsq -= 2 * c - 1;
    c -= 1;
    s.n -= 1;
  }
  double score(const Stats& s) const { return s.n > 0 ? s.sumsq / s.n : 0.0; }
  bool pure(const Stats& s) const { return s.sumsq == s.n * s.n; }
  std::vector<double> leaf(const Stats& s) const {
    std::vector<double> v(s.counts);
    for (auto& x : v) x /= s.n;
    return v;
  }

 private:
  std::span<const int> labels_;
  std::size_t n_classes_;
};

/// Second-order boosting criterion: score = G^2 / (H + lambda), leaf output
/// -G / (H + lambda).
class NewtonCriterion {
 public:
  struct Stats {
    double g = 0;
    double h = 0;
    double n = 0;
  };

  NewtonCriterion(std::span<const double> grad, std::span<const double> hess, double lambda)
      : grad_(grad), hess_(hess), lambda_(lambda) {}

  Stats empty() const { return {}; }
  void add(Stats& s, std::size_t row) const {
    s.g += grad_[row];
    s.h += hess_[row];
    s.n += 1;
  }
  void remove(Stats& s, std::size_t row) const {
    s.g -= grad_[row];
    s.h -= hess_[row];
    s.n -= 1;
  }
  double score(const Stats& s) const { return s.g * s.g / (s.h + lambda_); }
  bool pure(const Stats&) const { return false; }
  std::vector<double> leaf(const Stats& s) const { return {-s.g / (s.h + lambda_)}; }

 private:
  std::span<const double> grad_, hess_;
  double lambda_;
};

namespace detail {

/// Sample positions sorted by each feature's value (ties by position).
using SortedColumns = std::vector<std::vector<std::uint32_t>>;

inline SortedColumns presort(const MatrixView& x, std::span<const std::size_t> rows) {
  SortedColumns cols(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) {
    auto& v = cols[f];
    v.resize(rows.size());
    std::iota(v.begin(), v.end(), 0u);
    std::stable_sort(v.begin(), v.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x.at(rows[a], f) < x.at(rows[b], f); });
  }
  return cols;
}

template <class Criterion>
class TreeGrower {
 public:
  TreeGrower(const MatrixView& x, std::span<const std::size_t> rows, const Criterion& crit, const TreeParams& params,
             Rng* rng)
      : x_(x), rows_(rows), crit_(crit), params_(params), rng_(rng), go_left_(rows.size(), 0) {
    if (params.allowed_features.empty()) {
      allowed_.resize(x.cols);
      std::iota(allowed_.begin(), allowed_.end(), 0);
    } else {
      allowed_ = params.allowed_features;
      std::sort(allowed_.begin(), allowed_.end());
    }
    const auto f = static_cast<double>(allowed_.size());
    n_try_ = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(params.feature_frac * f)), 1,
                                     allowed_.size());
  }

  Tree grow(SortedColumns sorted) {
    tree_.nodes.clear();
    build(std::move(sorted), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0;
    double gain = 0;
  };

  double value(std::uint32_t pos, std::size_t f) const { return x_.at(rows_[pos], f); }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> feats = allowed_;
    if (n_try_ < feats.size() && rng_) {
      for (std::size_t i = 0; i < n_try_; ++i) std::swap(feats[i], feats[i + rng_->below(feats.size() - i)]);
      feats.resize(n_try_);
      std::sort(feats.begin(), feats.end());
    }
    return feats;
  }

  int build(SortedColumns sorted, std::size_t depth) {
    const auto& any = sorted.front();
    auto total = crit_.empty();
    for (auto p : any) crit_.add(total, rows_[p]);
    const int idx = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, crit_.leaf(total)});

    const auto n = any.size();
    if (depth >= params_.max_depth || n < 2 * params_.min_leaf || n < 2 || crit_.pure(total)) return idx;

    const double parent_score = crit_.score(total);
    Split best;
    for (auto f : candidate_features()) {
      const auto& order = sorted[f];
      auto left = crit_.empty();
      auto right = total;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        crit_.add(left, rows_[order[i]]);
        crit_.remove(right, rows_[order[i]]);
        const double a = value(order[i], f), b = value(order[i + 1], f);
        if (!(a < b)) continue;
        if (i + 1 < params_.min_leaf || n - i - 1 < params_.min_leaf) continue;
        const double gain = crit_.score(left) + crit_.score(right) - parent_score;
        if (gain > best.gain + 1e-12 * std::max(1.0, std::fabs(best.gain))) {
          double thr = a + (b - a) / 2;
          if (!(thr < b)) thr = a;
          best = {static_cast<int>(f), thr, gain};
        }
      }
    }
    if (best.feature < 0 || best.gain <= 1e-12) return idx;

    const auto bf = static_cast<std::size_t>(best.feature);
    for (auto p : sorted[bf]) go_left_[p] = value(p, bf) <= best.threshold;
    SortedColumns lhs(x_.cols), rhs(x_.cols);
    for (std::size_t f = 0; f < x_.cols; ++f) {
      lhs[f].reserve(n);
      rhs[f].reserve(n);
      for (auto p : sorted[f]) (go_left_[p] ? lhs[f] : rhs[f]).push_back(p);
      lhs[f].shrink_to_fit();
      rhs[f].shrink_to_fit();
      std::vector<std::uint32_t>().swap(sorted[f]);
    }
    const int l = build(std::move(lhs), depth + 1);
    const int r = build(std::move(rhs), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(idx)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return idx;
  }

  const MatrixView& x_;
  std::span<const std::size_t> rows_;
  const Criterion& crit_;
  TreeParams params_;
  Rng* rng_;
  std::vector<std::size_t> allowed_;
  std::size_t n_try_;
  std::vector<char> go_left_;
  Tree tree_;
};

}  // namespace detail

/// Grows a tree over the sample positions `rows` (duplicates allowed, as in a
/// bootstrap). `rng` drives per-split feature sampling and may be null when
/// feature_frac = 1.
template <class Criterion>
Tree grow_tree(const MatrixView& x, std::span<const std::size_t> rows, const Criterion& crit,
               const TreeParams& params, Rng* rng = nullptr) {
  if (rows.empty()) throw ValidationError("cannot grow a tree on zero samples");
  if (params.min_leaf == 0) throw ValidationError("min_leaf must be >= 1");
  detail::TreeGrower<Criterion> g(x, rows, crit, params, rng);
  return g.grow(detail::presort(x, rows));
}

/// As grow_tree, reusing columns presorted for the same `rows`.
template <class Criterion>
Tree grow_tree(const MatrixView& x, std::span<const std::size_t> rows, detail::SortedColumns presorted,
               const Criterion& crit, const TreeParams& params, Rng* rng = nullptr) {
  if (rows.empty()) throw ValidationError("cannot grow a tree on zero samples");
  if (params.min_leaf == 0) throw ValidationError("min_leaf must be >= 1");
  detail::TreeGrower<Criterion> g(x, rows, crit, params, rng);
  return g.grow(std::move(presorted));
}

}  // namespace canids
