#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dtc/data.hpp"
#include "dtc/tree.hpp"

namespace dtc {

enum class LearnerKind { DecisionTree, RandomForest, AdaBoost, GradientBoosting, GaussianNB, Knn };

std::string_view to_string(LearnerKind kind) noexcept;
/// Human-readable name used in comparison tables ("Random Forest", ...).
std::string_view display_name(LearnerKind kind) noexcept;
std::optional<LearnerKind> parse_learner_kind(std::string_view text);

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_features;  // nullopt = round(sqrt(n_features))
  bool bootstrap = true;
};

struct AdaBoostParams {
  int n_rounds = 50;
  TreeParams weak{.max_depth = 1};
};

struct GradBoostParams {
  int n_stages = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
};

struct KnnParams {
  int k = 5;
};

/// Learner choice plus every hyperparameter block; only the block matching
/// `kind` is read.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::DecisionTree;
  TreeParams tree;
  ForestParams forest;
  AdaBoostParams adaboost;
  GradBoostParams gradient_boosting;
  KnnParams knn;
};

struct DecisionTreeModel {
  Tree tree;
};

struct ForestModel {
  std::vector<Tree> trees;
  int n_features_per_split = 1;
  std::uint64_t seed = 0;
};

struct AdaBoostModel {
  std::vector<Tree> stumps;
  std::vector<double> alphas;
  std::vector<double> round_errors;
  int n_classes = 2;
};

struct GradBoostModel {
  Vector init_scores;                     // centered log priors
  std::vector<std::vector<Tree>> stages;  // K regression trees per stage
  double learning_rate = 0.1;
};

struct NaiveBayesModel {
  Vector class_priors;
  Matrix means;      // K x F
  Matrix variances;  // K x F, floored
};

struct KnnModel {
  Matrix train_x;
  LabelVector train_y;
  int k = 5;
};

using ModelVariant = std::variant<DecisionTreeModel, ForestModel, AdaBoostModel, GradBoostModel,
                                  NaiveBayesModel, KnnModel>;

struct TrainedModel {
  LearnerSpec spec;
  ModelVariant model;
  ClassTaxonomy taxonomy = ClassTaxonomy::stage_one();
  std::vector<int> feature_subset;  // columns of the caller's namespace this model reads
  std::vector<std::string> feature_names;

  Eigen::Index input_width() const noexcept { return static_cast<Eigen::Index>(feature_subset.size()); }
  int n_classes() const noexcept { return taxonomy.size(); }
};

TrainedModel train_decision_tree(const Dataset& d, const TreeParams& params,
                                 const Vector* sample_weights = nullptr);

/// `bootstrap = false` with `max_features = n_features` reduces to a single
/// decision tree.
TrainedModel train_random_forest(const Dataset& d, const TreeParams& params,
                                 const ForestParams& forest, std::uint64_t seed);

/// SAMME round weight ln((1 - err) / err) + ln(K - 1).
double samme_alpha(double weighted_error, int n_classes);

/// Alpha used for a weak learner with zero training error; boosting stops there.
inline constexpr double kPerfectLearnerAlpha = 23.025850929940457;  // ln(1e10)

struct AdaBoostTrace {
  std::vector<double> round_errors;
  std::vector<double> alphas;
  std::vector<double> weight_sums;  // after renormalization
  std::vector<Vector> weights;      // distribution after each round
  std::vector<LabelVector> predictions;
};

/// The stumps are deterministic, so `seed` does not change the result.
TrainedModel train_adaboost(const Dataset& d, const AdaBoostParams& params, std::uint64_t seed,
                            AdaBoostTrace* trace = nullptr);

struct GradBoostTrace {
  std::vector<double> deviance;  // [0] = init-only model, then one per stage
};

TrainedModel train_gradient_boosting(const Dataset& d, const GradBoostParams& params,
                                     std::uint64_t seed, GradBoostTrace* trace = nullptr);

TrainedModel train_gaussian_nb(const Dataset& d);
TrainedModel train_knn(const Dataset& d, int k);

/// Dispatch on spec.kind.
TrainedModel train(const Dataset& d, const LearnerSpec& spec, std::uint64_t seed);

Matrix predict_proba(const TrainedModel& m, const Eigen::Ref<const Matrix>& x);
LabelVector predict(const TrainedModel& m, const Eigen::Ref<const Matrix>& x);

/// Mean negative log-likelihood of the true class.
double multiclass_deviance(const Matrix& proba, const LabelVector& labels);

}  // namespace dtc
