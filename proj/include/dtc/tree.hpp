#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dtc/data.hpp"
#include "dtc/random.hpp"

namespace dtc {

enum class Criterion { Gini, Entropy };

struct TreeParams {
  std::optional<int> max_depth;  // nullopt = unlimited
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  Criterion criterion = Criterion::Gini;
  /// Reweights samples by n / (K * n_c) before fitting.
  bool balanced_class_weight = false;

  void validate() const;
};

/// Flat node. Internal nodes send a row left iff x[feature] <= threshold.
/// Classification leaves carry both the raw and the weighted class histogram;
/// regression leaves carry `value`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  Eigen::VectorXi class_counts;
  Vector class_weights;
  int predicted_class = 0;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // preorder, root at 0
  int n_classes = 0;            // 0 for regression trees

  template <typename Derived>
  int leaf_of(const Eigen::MatrixBase<Derived>& row) const {
    int idx = 0;
    while (!nodes[static_cast<std::size_t>(idx)].is_leaf()) {
      const auto& node = nodes[static_cast<std::size_t>(idx)];
      idx = row(node.feature) <= node.threshold ? node.left : node.right;
    }
    return idx;
  }

  const TreeNode& leaf(int index) const { return nodes[static_cast<std::size_t>(index)]; }

  int depth() const;
  int internal_count() const;
  int leaf_count() const;
};

double gini(const Vector& class_counts);
double entropy_impurity(const Vector& class_counts);
double impurity(const Vector& class_counts, Criterion criterion);

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Exhaustive midpoint scan over the candidate features. Ties go to the lower
/// feature index, then the lower threshold. Without `allow_zero_gain` only
/// strictly improving splits are returned.
std::optional<Split> best_split(const Eigen::Ref<const Matrix>& x, const LabelVector& labels,
                                int n_classes, std::span<const int> candidate_features,
                                Criterion criterion, const Vector* weights = nullptr,
                                int min_samples_leaf = 1, bool allow_zero_gain = false);

/// Row order of every column of a matrix, sorted by value. Sharing one of
/// these across many fits on the same matrix skips the per-fit sort.
class ColumnOrder {
 public:
  explicit ColumnOrder(const Eigen::Ref<const Matrix>& x);
  const std::vector<int>& column(Eigen::Index j) const { return order_[static_cast<std::size_t>(j)]; }
  Eigen::Index cols() const noexcept { return static_cast<Eigen::Index>(order_.size()); }

 private:
  std::vector<std::vector<int>> order_;
};

/// Random candidate-feature draw used by forests.
struct FeatureSampling {
  int max_features = 0;
  Rng* rng = nullptr;
};

/// Greedy CART on the given rows (duplicates allowed, as in a bootstrap). An
/// impure node is split even when the best split has zero gain, as long as
/// some feature still varies; that is what lets parity-style labelings be fit.
Tree fit_classification_tree(const Eigen::Ref<const Matrix>& x, const LabelVector& labels,
                             int n_classes, const TreeParams& params, std::span<const int> rows,
                             std::span<const double> weights,
                             std::optional<FeatureSampling> sampling = std::nullopt,
                             const ColumnOrder* presorted = nullptr);

/// Weighted-variance regression tree; leaves hold the weighted target mean.
Tree fit_regression_tree(const Eigen::Ref<const Matrix>& x, const Vector& targets,
                         const TreeParams& params, std::span<const int> rows,
                         const ColumnOrder* presorted = nullptr);

}  // namespace dtc
