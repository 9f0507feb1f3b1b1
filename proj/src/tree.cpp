#include "dtc/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dtc/error.hpp"

namespace dtc {

void TreeParams::validate() const {
  if (max_depth && *max_depth < 0) throw Error(Errc::Config, "max_depth must be >= 0");
  if (min_samples_split < 2) throw Error(Errc::Config, "min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw Error(Errc::Config, "min_samples_leaf must be >= 1");
}

double gini(const Vector& class_counts) {
  const double total = class_counts.sum();
  if (!(total > 0.0)) throw Error(Errc::EmptyNode, "impurity of an empty node");
  return 1.0 - (class_counts.array() / total).square().sum();
}

double entropy_impurity(const Vector& class_counts) {
  const double total = class_counts.sum();
  if (!(total > 0.0)) throw Error(Errc::EmptyNode, "impurity of an empty node");
  double h = 0.0;
  for (const double c : class_counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

double impurity(const Vector& class_counts, Criterion criterion) {
  return criterion == Criterion::Gini ? gini(class_counts) : entropy_impurity(class_counts);
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  int deepest = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [idx, d] = stack.back();
    stack.pop_back();
    const auto& node = nodes[static_cast<std::size_t>(idx)];
    if (node.is_leaf()) {
      deepest = std::max(deepest, d);
    } else {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return deepest;
}

int Tree::internal_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                        [](const TreeNode& n) { return !n.is_leaf(); }));
}

int Tree::leaf_count() const { return static_cast<int>(nodes.size()) - internal_count(); }

ColumnOrder::ColumnOrder(const Eigen::Ref<const Matrix>& x) {
  order_.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    auto& col = order_[static_cast<std::size_t>(j)];
    col.resize(static_cast<std::size_t>(x.rows()));
    std::iota(col.begin(), col.end(), 0);
    std::stable_sort(col.begin(), col.end(), [&](int a, int b) { return x(a, j) < x(b, j); });
  }
}

namespace {

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

struct Best {
  bool found = false;
  Split split;
};

// Shared per-position sample view used by both the public best_split and the
// recursive builder.
struct Samples {
  const Eigen::Ref<const Matrix>& x;
  std::vector<int> row;     // position -> matrix row
  std::vector<double> w;    // position -> weight
  std::vector<int> y;       // classification label
  std::vector<double> t;    // regression target

  double value(int pos, int feature) const { return x(row[static_cast<std::size_t>(pos)], feature); }
};

void scan_classification(const Samples& s, std::span<const int> sorted, int feature, int n_classes,
                         Criterion criterion, int min_leaf, const Vector& parent, double parent_impurity,
                         bool allow_zero_gain, Best& best) {
  const auto n = static_cast<int>(sorted.size());
  const double total = parent.sum();
  Vector left = Vector::Zero(n_classes);
  double left_w = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const int p = sorted[static_cast<std::size_t>(i)];
    left(s.y[static_cast<std::size_t>(p)]) += s.w[static_cast<std::size_t>(p)];
    left_w += s.w[static_cast<std::size_t>(p)];
    const double v = s.value(p, feature);
    const double next = s.value(sorted[static_cast<std::size_t>(i) + 1], feature);
    if (!(v < next)) continue;
    const int n_left = i + 1;
    if (n_left < min_leaf || n - n_left < min_leaf) continue;
    // Subtraction can cancel to a histogram of zeros, so the right weight is its sum.
    const Vector right = (parent - left).cwiseMax(0.0);
    const double right_w = right.sum();
    if (!(left_w > 0.0) || !(right_w > 0.0)) continue;
    const double gain = parent_impurity - left_w / total * impurity(left, criterion) -
                        right_w / total * impurity(right, criterion);
    const bool better = best.found ? gain > best.split.gain : (allow_zero_gain || gain > 0.0);
    if (better) {
      best.found = true;
      best.split = Split{feature, midpoint(v, next), gain};
    }
  }
}

void scan_regression(const Samples& s, std::span<const int> sorted, int feature, int min_leaf,
                     double total_w, double total_s, Best& best) {
  const auto n = static_cast<int>(sorted.size());
  const double parent_term = total_s * total_s / total_w;
  double left_w = 0.0;
  double left_s = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const auto p = static_cast<std::size_t>(sorted[static_cast<std::size_t>(i)]);
    left_w += s.w[p];
    left_s += s.w[p] * s.t[p];
    const double v = s.value(static_cast<int>(p), feature);
    const double next = s.value(sorted[static_cast<std::size_t>(i) + 1], feature);
    if (!(v < next)) continue;
    const int n_left = i + 1;
    if (n_left < min_leaf || n - n_left < min_leaf) continue;
    const double right_w = total_w - left_w;
    if (!(left_w > 0.0) || !(right_w > 0.0)) continue;
    const double right_s = total_s - left_s;
    const double gain =
        (left_s * left_s / left_w + right_s * right_s / right_w - parent_term) / total_w;
    if (gain > (best.found ? best.split.gain : 0.0)) {
      best.found = true;
      best.split = Split{feature, midpoint(v, next), gain};
    }
  }
}

class Builder {
 public:
  Builder(Samples samples, const TreeParams& params, int n_classes,
          std::optional<FeatureSampling> sampling, const ColumnOrder* presorted)
      : s_(std::move(samples)), params_(params), n_classes_(n_classes), sampling_(sampling) {
    const auto m = s_.row.size();
    const auto f = static_cast<std::size_t>(s_.x.cols());
    members_.resize(m);
    std::iota(members_.begin(), members_.end(), 0);
    goes_left_.assign(m, 0);
    order_.resize(f);
    if (presorted) {
      // Expand the shared row order into position order; a row drawn several
      // times contributes each of its positions.
      std::vector<int> start(static_cast<std::size_t>(s_.x.rows()) + 1, 0);
      for (const int r : s_.row) ++start[static_cast<std::size_t>(r) + 1];
      std::partial_sum(start.begin(), start.end(), start.begin());
      std::vector<int> by_row(m);
      std::vector<int> fill(start.begin(), start.end() - 1);
      for (std::size_t p = 0; p < m; ++p) {
        by_row[static_cast<std::size_t>(fill[static_cast<std::size_t>(s_.row[p])]++)] = static_cast<int>(p);
      }
      for (std::size_t j = 0; j < f; ++j) {
        auto& col = order_[j];
        col.reserve(m);
        for (const int r : presorted->column(static_cast<Eigen::Index>(j))) {
          for (int k = start[static_cast<std::size_t>(r)]; k < start[static_cast<std::size_t>(r) + 1]; ++k) {
            col.push_back(by_row[static_cast<std::size_t>(k)]);
          }
        }
      }
    } else {
      for (std::size_t j = 0; j < f; ++j) {
        auto& col = order_[j];
        col = members_;
        const int feature = static_cast<int>(j);
        std::stable_sort(col.begin(), col.end(),
                         [&](int a, int b) { return s_.value(a, feature) < s_.value(b, feature); });
      }
    }
    tree_.n_classes = regression() ? 0 : n_classes_;
  }

  Tree build() && {
    if (!members_.empty()) grow(0, static_cast<int>(members_.size()), 0);
    return std::move(tree_);
  }

 private:
  bool regression() const { return n_classes_ == 0; }

  int grow(int begin, int end, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const int n = end - begin;

    Vector class_w;
    Eigen::VectorXi class_n;
    double total_w = 0.0;
    double total_s = 0.0;
    if (regression()) {
      for (int i = begin; i < end; ++i) {
        const auto p = static_cast<std::size_t>(members_[static_cast<std::size_t>(i)]);
        total_w += s_.w[p];
        total_s += s_.w[p] * s_.t[p];
      }
      tree_.nodes[static_cast<std::size_t>(id)].value = total_w > 0.0 ? total_s / total_w : 0.0;
    } else {
      class_w = Vector::Zero(n_classes_);
      class_n = Eigen::VectorXi::Zero(n_classes_);
      for (int i = begin; i < end; ++i) {
        const auto p = static_cast<std::size_t>(members_[static_cast<std::size_t>(i)]);
        class_w(s_.y[p]) += s_.w[p];
        class_n(s_.y[p]) += 1;
      }
      total_w = class_w.sum();
      auto& node = tree_.nodes[static_cast<std::size_t>(id)];
      Eigen::Index arg = 0;
      class_w.maxCoeff(&arg);  // first maximum on ties
      node.predicted_class = static_cast<int>(arg);
      node.class_counts = class_n;
      node.class_weights = class_w;
    }

    const bool depth_left = !params_.max_depth || depth < *params_.max_depth;
    const bool enough = n >= params_.min_samples_split && n >= 2 * params_.min_samples_leaf;
    const bool pure = !regression() && (class_w.array() > 0.0).count() <= 1;
    if (!depth_left || !enough || pure || !(total_w > 0.0)) return id;

    const auto split = find_split(begin, end, class_w, total_w, total_s);
    if (!split) return id;

    int n_left = 0;
    for (int i = begin; i < end; ++i) {
      const int p = members_[static_cast<std::size_t>(i)];
      const bool left = s_.value(p, split->feature) <= split->threshold;
      goes_left_[static_cast<std::size_t>(p)] = left;
      n_left += left;
    }
    partition(members_, begin, end);
    for (auto& col : order_) partition(col, begin, end);

    {
      auto& node = tree_.nodes[static_cast<std::size_t>(id)];
      node.feature = split->feature;
      node.threshold = split->threshold;
    }
    const int left = grow(begin, begin + n_left, depth + 1);
    const int right = grow(begin + n_left, end, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.left = left;
    node.right = right;
    return id;
  }

  void partition(std::vector<int>& v, int begin, int end) {
    scratch_.clear();
    auto out = v.begin() + begin;
    for (int i = begin; i < end; ++i) {
      const int p = v[static_cast<std::size_t>(i)];
      if (goes_left_[static_cast<std::size_t>(p)]) {
        *out++ = p;
      } else {
        scratch_.push_back(p);
      }
    }
    std::copy(scratch_.begin(), scratch_.end(), out);
  }

  void scan(int feature, int begin, int end, const Vector& class_w, double parent_impurity,
            double total_w, double total_s, Best& best) const {
    const auto& col = order_[static_cast<std::size_t>(feature)];
    const std::span<const int> sorted(col.data() + begin, static_cast<std::size_t>(end - begin));
    if (regression()) {
      scan_regression(s_, sorted, feature, params_.min_samples_leaf, total_w, total_s, best);
    } else {
      scan_classification(s_, sorted, feature, n_classes_, params_.criterion,
                          params_.min_samples_leaf, class_w, parent_impurity, true, best);
    }
  }

  std::optional<Split> find_split(int begin, int end, const Vector& class_w, double total_w,
                                  double total_s) {
    const int n_features = static_cast<int>(order_.size());
    const double parent_impurity = regression() ? 0.0 : impurity(class_w, params_.criterion);
    Best best;
    if (!sampling_ || sampling_->max_features >= n_features) {
      for (int f = 0; f < n_features; ++f) scan(f, begin, end, class_w, parent_impurity, total_w, total_s, best);
    } else {
      std::vector<int> perm(static_cast<std::size_t>(n_features));
      std::iota(perm.begin(), perm.end(), 0);
      sampling_->rng->shuffle(perm.begin(), perm.end());
      const auto m = static_cast<std::ptrdiff_t>(std::max(1, sampling_->max_features));
      std::vector<int> chosen(perm.begin(), perm.begin() + m);
      std::sort(chosen.begin(), chosen.end());
      for (const int f : chosen) scan(f, begin, end, class_w, parent_impurity, total_w, total_s, best);
      // When every drawn feature is constant here, keep drawing.
      for (auto it = perm.begin() + m; !best.found && it != perm.end(); ++it) {
        scan(*it, begin, end, class_w, parent_impurity, total_w, total_s, best);
      }
    }
    if (!best.found) return std::nullopt;
    return best.split;
  }

  Samples s_;
  const TreeParams& params_;
  int n_classes_;
  std::optional<FeatureSampling> sampling_;
  std::vector<int> members_;
  std::vector<std::vector<int>> order_;
  std::vector<char> goes_left_;
  std::vector<int> scratch_;
  Tree tree_;
};

}  // namespace

std::optional<Split> best_split(const Eigen::Ref<const Matrix>& x, const LabelVector& labels,
                                int n_classes, std::span<const int> candidate_features,
                                Criterion criterion, const Vector* weights, int min_samples_leaf,
                                bool allow_zero_gain) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (static_cast<std::size_t>(labels.size()) != n || (weights && static_cast<std::size_t>(weights->size()) != n)) {
    throw Error(Errc::LengthMismatch, "best_split inputs differ in length");
  }
  Samples s{x, {}, {}, {}, {}};
  s.row.resize(n);
  std::iota(s.row.begin(), s.row.end(), 0);
  s.w.assign(n, 1.0);
  if (weights) std::copy(weights->begin(), weights->end(), s.w.begin());
  s.y.assign(labels.begin(), labels.end());

  Vector parent = Vector::Zero(n_classes);
  for (std::size_t i = 0; i < n; ++i) parent(s.y[i]) += s.w[i];
  if (!(parent.sum() > 0.0) || (parent.array() > 0.0).count() <= 1) return std::nullopt;
  const double parent_impurity = impurity(parent, criterion);

  std::vector<int> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  Best best;
  std::vector<int> sorted(n);
  for (const int f : features) {
    if (f < 0 || f >= x.cols()) throw Error(Errc::IndexOutOfRange, "feature " + std::to_string(f));
    std::iota(sorted.begin(), sorted.end(), 0);
    std::stable_sort(sorted.begin(), sorted.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
    scan_classification(s, sorted, f, n_classes, criterion, min_samples_leaf, parent,
                        parent_impurity, allow_zero_gain, best);
  }
  if (!best.found) return std::nullopt;
  return best.split;
}

Tree fit_classification_tree(const Eigen::Ref<const Matrix>& x, const LabelVector& labels,
                             int n_classes, const TreeParams& params, std::span<const int> rows,
                             std::span<const double> weights, std::optional<FeatureSampling> sampling,
                             const ColumnOrder* presorted) {
  params.validate();
  if (rows.empty()) throw Error(Errc::EmptyDataset, "cannot fit a tree on zero rows");
  if (!weights.empty() && weights.size() != rows.size()) {
    throw Error(Errc::LengthMismatch, "weights and rows differ in length");
  }
  if (n_classes < 1) throw Error(Errc::Config, "classification tree needs at least one class");
  Samples s{x, {}, {}, {}, {}};
  s.row.assign(rows.begin(), rows.end());
  s.y.reserve(rows.size());
  for (const int r : rows) {
    const int c = labels(r);
    if (c < 0 || c >= n_classes) throw Error(Errc::IndexOutOfRange, "label " + std::to_string(c));
    s.y.push_back(c);
  }
  if (weights.empty()) {
    s.w.assign(rows.size(), 1.0);
  } else {
    s.w.assign(weights.begin(), weights.end());
    for (const double w : s.w) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::Config, "sample weights must be finite and >= 0");
    }
  }
  if (params.balanced_class_weight) {
    Vector counts = Vector::Zero(n_classes);
    for (const int c : s.y) counts(c) += 1.0;
    const double present = static_cast<double>((counts.array() > 0.0).count());
    const double n = static_cast<double>(s.y.size());
    for (std::size_t i = 0; i < s.y.size(); ++i) s.w[i] *= n / (present * counts(s.y[i]));
  }
  return Builder(std::move(s), params, n_classes, sampling, presorted).build();
}

Tree fit_regression_tree(const Eigen::Ref<const Matrix>& x, const Vector& targets,
                         const TreeParams& params, std::span<const int> rows,
                         const ColumnOrder* presorted) {
  params.validate();
  if (rows.empty()) throw Error(Errc::EmptyDataset, "cannot fit a tree on zero rows");
  Samples s{x, {}, {}, {}, {}};
  s.row.assign(rows.begin(), rows.end());
  s.w.assign(rows.size(), 1.0);
  s.t.reserve(rows.size());
  for (const int r : rows) s.t.push_back(targets(r));
  return Builder(std::move(s), params, 0, std::nullopt, presorted).build();
}

}  // namespace dtc
