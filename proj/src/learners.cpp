#include "dtc/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dtc/error.hpp"
#include "dtc/parallel.hpp"
#include "dtc/random.hpp"
#include "strings.hpp"

namespace dtc {

std::string_view to_string(LearnerKind kind) noexcept {
  switch (kind) {
    case LearnerKind::DecisionTree: return "decision_tree";
    case LearnerKind::RandomForest: return "random_forest";
    case LearnerKind::AdaBoost: return "adaboost";
    case LearnerKind::GradientBoosting: return "gradient_boosting";
    case LearnerKind::GaussianNB: return "naive_bayes";
    case LearnerKind::Knn: return "knn";
  }
  return "decision_tree";
}

std::string_view display_name(LearnerKind kind) noexcept {
  switch (kind) {
    case LearnerKind::DecisionTree: return "Decision Tree";
    case LearnerKind::RandomForest: return "Random Forest";
    case LearnerKind::AdaBoost: return "AdaBoost";
    case LearnerKind::GradientBoosting: return "Gradient Boosting";
    case LearnerKind::GaussianNB: return "Naive Bayes";
    case LearnerKind::Knn: return "KNN";
  }
  return "Decision Tree";
}

std::optional<LearnerKind> parse_learner_kind(std::string_view text) {
  const auto t = detail::lower(detail::trim(text));
  if (t == "decision_tree" || t == "dt" || t == "tree" || t == "cart") return LearnerKind::DecisionTree;
  if (t == "random_forest" || t == "rf" || t == "forest") return LearnerKind::RandomForest;
  if (t == "adaboost" || t == "ada") return LearnerKind::AdaBoost;
  if (t == "gradient_boosting" || t == "gb" || t == "gbm") return LearnerKind::GradientBoosting;
  if (t == "naive_bayes" || t == "gnb" || t == "nb" || t == "gaussian_nb") return LearnerKind::GaussianNB;
  if (t == "knn") return LearnerKind::Knn;
  return std::nullopt;
}

namespace {

void check_trainable(const Dataset& d) {
  if (d.n_samples() == 0) throw Error(Errc::EmptyDataset, "no training rows");
  if (d.has_missing()) throw Error(Errc::MaskedData, "training data still has missing cells");
  for (const int c : d.labels) {
    if (c < 0 || c >= d.taxonomy.size()) throw Error(Errc::IndexOutOfRange, "label " + std::to_string(c));
  }
}

std::vector<int> iota_rows(Eigen::Index n) {
  std::vector<int> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

TrainedModel wrap(const Dataset& d, LearnerSpec spec, ModelVariant model) {
  TrainedModel m;
  m.spec = std::move(spec);
  m.model = std::move(model);
  m.taxonomy = d.taxonomy;
  m.feature_subset = iota_rows(d.n_features());
  m.feature_names = d.feature_names;
  return m;
}

int argmax_row(const Eigen::Ref<const Eigen::RowVectorXd, 0, Eigen::InnerStride<>>& row) {
  Eigen::Index best = 0;
  row.maxCoeff(&best);  // lowest index among equal maxima
  return static_cast<int>(best);
}

Vector log_softmax(const Eigen::Ref<const Eigen::RowVectorXd, 0, Eigen::InnerStride<>>& scores) {
  const double top = scores.maxCoeff();
  const double lse = top + std::log((scores.array() - top).exp().sum());
  return (scores.array() - lse).transpose();
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double top = scores.row(i).maxCoeff();
    out.row(i) = (scores.row(i).array() - top).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

template <typename RowFn>
void for_each_row_block(Eigen::Index n, RowFn&& fn) {
  constexpr Eigen::Index kBlock = 256;
  const auto blocks = static_cast<std::size_t>((n + kBlock - 1) / kBlock);
  parallel_for(blocks, [&](std::size_t b) {
    const auto begin = static_cast<Eigen::Index>(b) * kBlock;
    const auto end = std::min(n, begin + kBlock);
    for (Eigen::Index i = begin; i < end; ++i) fn(i);
  });
}

double gb_score(const std::vector<Tree>& trees, std::size_t k, const Eigen::Ref<const Eigen::RowVectorXd, 0, Eigen::InnerStride<>>& row) {
  const auto& tree = trees[k];
  return tree.leaf(tree.leaf_of(row)).value;
}

}  // namespace

// ---------------------------------------------------------------------------
// Decision tree and forest

TrainedModel train_decision_tree(const Dataset& d, const TreeParams& params, const Vector* sample_weights) {
  check_trainable(d);
  std::vector<double> weights;
  if (sample_weights) {
    if (sample_weights->size() != d.n_samples()) throw Error(Errc::LengthMismatch, "sample weights length");
    weights.assign(sample_weights->begin(), sample_weights->end());
    if (!(sample_weights->sum() > 0.0)) throw Error(Errc::Config, "sample weights must sum to > 0");
  }
  const auto rows = iota_rows(d.n_samples());
  LearnerSpec spec;
  spec.kind = LearnerKind::DecisionTree;
  spec.tree = params;
  auto tree = fit_classification_tree(d.features, d.labels, d.taxonomy.size(), params, rows, weights);
  return wrap(d, spec, DecisionTreeModel{std::move(tree)});
}

TrainedModel train_random_forest(const Dataset& d, const TreeParams& params, const ForestParams& forest,
                                 std::uint64_t seed) {
  check_trainable(d);
  params.validate();
  if (forest.n_trees < 1) throw Error(Errc::Config, "random forest needs n_trees >= 1");
  const auto n_features = static_cast<int>(d.n_features());
  const int per_split = std::clamp(
      forest.max_features.value_or(static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_features))))),
      1, std::max(1, n_features));

  const ColumnOrder order(d.features);
  const auto n = d.n_samples();
  ForestModel model;
  model.n_features_per_split = per_split;
  model.seed = seed;
  model.trees.resize(static_cast<std::size_t>(forest.n_trees));
  parallel_for(model.trees.size(), [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<int> rows;
    if (forest.bootstrap) {
      rows.resize(static_cast<std::size_t>(n));
      for (auto& r : rows) r = static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
    } else {
      rows = iota_rows(n);
    }
    model.trees[t] = fit_classification_tree(d.features, d.labels, d.taxonomy.size(), params, rows, {},
                                             FeatureSampling{per_split, &rng}, &order);
  });

  LearnerSpec spec;
  spec.kind = LearnerKind::RandomForest;
  spec.tree = params;
  spec.forest = forest;
  return wrap(d, spec, std::move(model));
}

// ---------------------------------------------------------------------------
// AdaBoost (SAMME)

double samme_alpha(double weighted_error, int n_classes) {
  if (n_classes < 2) throw Error(Errc::SingleClass, "SAMME needs K >= 2");
  const double k = static_cast<double>(n_classes);
  if (!(weighted_error < 1.0 - 1.0 / k)) {
    throw Error(Errc::WeakLearnerTooWeak, "weighted error " + detail::format_real(weighted_error) +
                                              " >= 1 - 1/K");
  }
  if (!(weighted_error > 0.0)) throw Error(Errc::OutOfRange, "weighted error must be > 0");
  return std::log((1.0 - weighted_error) / weighted_error) + std::log(k - 1.0);
}

TrainedModel train_adaboost(const Dataset& d, const AdaBoostParams& params, std::uint64_t /*seed*/,
                            AdaBoostTrace* trace) {
  check_trainable(d);
  params.weak.validate();
  if (params.n_rounds < 1) throw Error(Errc::Config, "AdaBoost needs n_rounds >= 1");
  const int k = d.taxonomy.size();
  {
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    for (const int c : d.labels) seen[static_cast<std::size_t>(c)] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2) {
      throw Error(Errc::SingleClass, "AdaBoost needs at least two classes present");
    }
  }
  const auto n = d.n_samples();
  const auto rows = iota_rows(n);
  const ColumnOrder order(d.features);
  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));

  AdaBoostModel model;
  model.n_classes = k;
  for (int round = 0; round < params.n_rounds; ++round) {
    auto stump = fit_classification_tree(d.features, d.labels, k, params.weak, rows,
                                         std::span<const double>(w.data(), static_cast<std::size_t>(n)),
                                         std::nullopt, &order);
    LabelVector pred(n);
    double err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      pred(i) = stump.leaf(stump.leaf_of(d.features.row(i))).predicted_class;
      if (pred(i) != d.labels(i)) err += w(i);
    }
    err /= w.sum();

    double alpha = 0.0;
    const bool perfect = !(err > 0.0);
    if (perfect) {
      alpha = kPerfectLearnerAlpha;
    } else if (err >= 1.0 - 1.0 / static_cast<double>(k)) {
      if (round == 0) {
        throw Error(Errc::NoUsableRound, "first weak learner has weighted error " +
                                             detail::format_real(err) + " >= 1 - 1/K");
      }
      break;
    } else {
      alpha = samme_alpha(err, k);
      const double boost = std::exp(alpha);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (pred(i) != d.labels(i)) w(i) *= boost;
      }
      w /= w.sum();
    }

    model.stumps.push_back(std::move(stump));
    model.alphas.push_back(alpha);
    model.round_errors.push_back(err);
    if (trace) {
      trace->round_errors.push_back(err);
      trace->alphas.push_back(alpha);
      trace->weight_sums.push_back(w.sum());
      trace->weights.push_back(w);
      trace->predictions.push_back(pred);
    }
    if (perfect) break;
  }

  LearnerSpec spec;
  spec.kind = LearnerKind::AdaBoost;
  spec.adaboost = params;
  return wrap(d, spec, std::move(model));
}

// ---------------------------------------------------------------------------
// Gradient boosting (multinomial deviance)

double multiclass_deviance(const Matrix& proba, const LabelVector& labels) {
  if (proba.rows() != labels.size() || proba.rows() == 0) {
    throw Error(Errc::LengthMismatch, "deviance inputs differ in length");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    total -= std::log(std::max(proba(i, labels(i)), std::numeric_limits<double>::min()));
  }
  return total / static_cast<double>(proba.rows());
}

namespace {

double scores_deviance(const Matrix& scores, const LabelVector& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) total -= log_softmax(scores.row(i))(labels(i));
  return total / static_cast<double>(scores.rows());
}

}  // namespace

TrainedModel train_gradient_boosting(const Dataset& d, const GradBoostParams& params, std::uint64_t /*seed*/,
                                     GradBoostTrace* trace) {
  check_trainable(d);
  if (params.n_stages < 0) throw Error(Errc::Config, "n_stages must be >= 0");
  if (!(params.learning_rate >= 0.0 && params.learning_rate <= 1.0)) {
    throw Error(Errc::Config, "learning_rate must lie in [0, 1]");
  }
  if (params.max_depth < 0) throw Error(Errc::Config, "gradient boosting max_depth must be >= 0");

  const int k = d.taxonomy.size();
  const auto n = d.n_samples();
  const auto kd = static_cast<double>(k);

  Vector prior = Vector::Zero(k);
  for (const int c : d.labels) prior(c) += 1.0;
  prior /= static_cast<double>(n);
  // absent classes would give log(0); floor them
  Vector init = prior.cwiseMax(1e-12).array().log();
  init.array() -= init.mean();

  GradBoostModel model;
  model.init_scores = init;
  model.learning_rate = params.learning_rate;

  Matrix scores = init.transpose().replicate(n, 1);
  Matrix onehot = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, d.labels(i)) = 1.0;

  if (trace) trace->deviance.push_back(scores_deviance(scores, d.labels));

  const ColumnOrder order(d.features);
  const auto rows = iota_rows(n);
  TreeParams reg;
  reg.max_depth = params.max_depth;

  for (int stage = 0; stage < params.n_stages; ++stage) {
    const Matrix proba = softmax_rows(scores);
    std::vector<Tree> trees(static_cast<std::size_t>(k));
    std::vector<Vector> updates(static_cast<std::size_t>(k));
    parallel_for(trees.size(), [&](std::size_t c) {
      const auto col = static_cast<Eigen::Index>(c);
      const Vector residual = onehot.col(col) - proba.col(col);
      Tree tree = fit_regression_tree(d.features, residual, reg, rows, &order);

      std::vector<int> leaf_of_row(static_cast<std::size_t>(n));
      Vector num = Vector::Zero(static_cast<Eigen::Index>(tree.nodes.size()));
      Vector den = Vector::Zero(static_cast<Eigen::Index>(tree.nodes.size()));
      for (Eigen::Index i = 0; i < n; ++i) {
        const int leaf = tree.leaf_of(d.features.row(i));
        leaf_of_row[static_cast<std::size_t>(i)] = leaf;
        const double r = residual(i);
        num(leaf) += r;
        den(leaf) += std::abs(r) * (1.0 - std::abs(r));
      }
      for (std::size_t j = 0; j < tree.nodes.size(); ++j) {
        auto& node = tree.nodes[j];
        if (!node.is_leaf()) continue;
        const auto jj = static_cast<Eigen::Index>(j);
        node.value = (kd - 1.0) / kd * num(jj) / std::max(den(jj), 1e-12);
      }
      Vector update(n);
      for (Eigen::Index i = 0; i < n; ++i) update(i) = tree.nodes[static_cast<std::size_t>(leaf_of_row[static_cast<std::size_t>(i)])].value;
      updates[c] = std::move(update);
      trees[c] = std::move(tree);
    });
    for (int c = 0; c < k; ++c) scores.col(c) += params.learning_rate * updates[static_cast<std::size_t>(c)];
    model.stages.push_back(std::move(trees));
    if (trace) trace->deviance.push_back(scores_deviance(scores, d.labels));
  }

  LearnerSpec spec;
  spec.kind = LearnerKind::GradientBoosting;
  spec.gradient_boosting = params;
  return wrap(d, spec, std::move(model));
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes and KNN

TrainedModel train_gaussian_nb(const Dataset& d) {
  check_trainable(d);
  const int k = d.taxonomy.size();
  const auto f = d.n_features();
  const auto n = static_cast<double>(d.n_samples());

  const Eigen::RowVectorXd overall_mean = d.features.colwise().mean();
  const double max_var = f > 0
      ? ((d.features.rowwise() - overall_mean).array().square().colwise().sum() / n).maxCoeff()
      : 0.0;
  const double floor = max_var > 0.0 ? 1e-9 * max_var : 1e-9;

  NaiveBayesModel model;
  model.class_priors = Vector::Zero(k);
  model.means = Matrix::Zero(k, f);
  model.variances = Matrix::Constant(k, f, floor);
  for (const int c : d.labels) model.class_priors(c) += 1.0;
  for (Eigen::Index i = 0; i < d.n_samples(); ++i) model.means.row(d.labels(i)) += d.features.row(i);
  for (int c = 0; c < k; ++c) {
    if (model.class_priors(c) > 0.0) model.means.row(c) /= model.class_priors(c);
  }
  Matrix sq = Matrix::Zero(k, f);
  for (Eigen::Index i = 0; i < d.n_samples(); ++i) {
    const int c = d.labels(i);
    sq.row(c) += (d.features.row(i) - model.means.row(c)).array().square().matrix();
  }
  for (int c = 0; c < k; ++c) {
    if (model.class_priors(c) > 0.0) {
      model.variances.row(c) = (sq.row(c) / model.class_priors(c)).cwiseMax(floor);
    }
  }
  model.class_priors /= n;

  LearnerSpec spec;
  spec.kind = LearnerKind::GaussianNB;
  return wrap(d, spec, std::move(model));
}

TrainedModel train_knn(const Dataset& d, int k) {
  check_trainable(d);
  if (k < 1) throw Error(Errc::Config, "KNN needs k >= 1");
  if (k > d.n_samples()) {
    throw Error(Errc::KTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(d.n_samples()) +
                                     " training rows");
  }
  LearnerSpec spec;
  spec.kind = LearnerKind::Knn;
  spec.knn.k = k;
  return wrap(d, spec, KnnModel{d.features, d.labels, k});
}

TrainedModel train(const Dataset& d, const LearnerSpec& spec, std::uint64_t seed) {
  TrainedModel m = [&] {
    switch (spec.kind) {
      case LearnerKind::DecisionTree: return train_decision_tree(d, spec.tree);
      case LearnerKind::RandomForest: return train_random_forest(d, spec.tree, spec.forest, seed);
      case LearnerKind::AdaBoost: return train_adaboost(d, spec.adaboost, seed);
      case LearnerKind::GradientBoosting: return train_gradient_boosting(d, spec.gradient_boosting, seed);
      case LearnerKind::GaussianNB: return train_gaussian_nb(d);
      case LearnerKind::Knn: return train_knn(d, spec.knn.k);
    }
    throw Error(Errc::Config, "unknown learner kind");
  }();
  m.spec = spec;
  return m;
}

// ---------------------------------------------------------------------------
// Prediction

namespace {

struct KnnVote {
  Vector votes;
  int winner = 0;
};

KnnVote knn_vote(const KnnModel& m, int n_classes, const Eigen::Ref<const Eigen::RowVectorXd, 0, Eigen::InnerStride<>>& query) {
  const Vector d2 = (m.train_x.rowwise() - query).rowwise().squaredNorm();
  std::vector<int> idx(static_cast<std::size_t>(d2.size()));
  std::iota(idx.begin(), idx.end(), 0);
  const auto kth = idx.begin() + m.k;
  std::partial_sort(idx.begin(), kth, idx.end(), [&](int a, int b) {
    return d2(a) < d2(b) || (d2(a) == d2(b) && a < b);
  });
  KnnVote out;
  out.votes = Vector::Zero(n_classes);
  Vector dist = Vector::Zero(n_classes);
  for (auto it = idx.begin(); it != kth; ++it) {
    const int c = m.train_y(*it);
    out.votes(c) += 1.0;
    dist(c) += std::sqrt(d2(*it));
  }
  for (int c = 1; c < n_classes; ++c) {
    const bool more = out.votes(c) > out.votes(out.winner);
    const bool tie_closer = out.votes(c) == out.votes(out.winner) && dist(c) < dist(out.winner);
    if (more || tie_closer) out.winner = c;
  }
  return out;
}

void proba_row(const TrainedModel& tm, const Eigen::Ref<const Eigen::RowVectorXd, 0, Eigen::InnerStride<>>& row,
               Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) {
  const int k = tm.n_classes();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTreeModel>) {
          const auto& leaf = m.tree.leaf(m.tree.leaf_of(row));
          out = leaf.class_weights.transpose() / leaf.class_weights.sum();
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          out.setZero();
          for (const auto& tree : m.trees) out(tree.leaf(tree.leaf_of(row)).predicted_class) += 1.0;
          out /= static_cast<double>(m.trees.size());
        } else if constexpr (std::is_same_v<T, AdaBoostModel>) {
          out.setZero();
          double total = 0.0;
          for (std::size_t t = 0; t < m.stumps.size(); ++t) {
            const auto& stump = m.stumps[t];
            out(stump.leaf(stump.leaf_of(row)).predicted_class) += m.alphas[t];
            total += m.alphas[t];
          }
          out /= total;
        } else if constexpr (std::is_same_v<T, GradBoostModel>) {
          Eigen::RowVectorXd scores = m.init_scores.transpose();
          for (const auto& stage : m.stages) {
            for (std::size_t c = 0; c < stage.size(); ++c) {
              scores(static_cast<Eigen::Index>(c)) += m.learning_rate * gb_score(stage, c, row);
            }
          }
          out = log_softmax(scores).array().exp().transpose();
          out /= out.sum();
        } else if constexpr (std::is_same_v<T, NaiveBayesModel>) {
          Eigen::RowVectorXd joint(k);
          for (int c = 0; c < k; ++c) {
            if (!(m.class_priors(c) > 0.0)) {
              joint(c) = -std::numeric_limits<double>::infinity();
              continue;
            }
            const auto var = m.variances.row(c).array();
            const auto diff = row.array() - m.means.row(c).array();
            joint(c) = std::log(m.class_priors(c)) -
                       0.5 * ((2.0 * M_PI * var).log() + diff.square() / var).sum();
          }
          out = log_softmax(joint).array().exp().transpose();
          out /= out.sum();
        } else {
          out = knn_vote(m, k, row).votes.transpose() / static_cast<double>(m.k);
        }
      },
      tm.model);
}

void check_width(const TrainedModel& m, const Eigen::Ref<const Matrix>& x) {
  if (x.cols() != m.input_width()) {
    throw Error(Errc::ShapeMismatch, "model expects " + std::to_string(m.input_width()) +
                                         " features, input has " + std::to_string(x.cols()));
  }
}

}  // namespace

Matrix predict_proba(const TrainedModel& m, const Eigen::Ref<const Matrix>& x) {
  check_width(m, x);
  Matrix proba(x.rows(), m.n_classes());
  for_each_row_block(x.rows(), [&](Eigen::Index i) { proba_row(m, x.row(i), proba.row(i)); });
  return proba;
}

LabelVector predict(const TrainedModel& m, const Eigen::Ref<const Matrix>& x) {
  check_width(m, x);
  LabelVector out(x.rows());
  if (const auto* knn = std::get_if<KnnModel>(&m.model)) {
    for_each_row_block(x.rows(), [&](Eigen::Index i) { out(i) = knn_vote(*knn, m.n_classes(), x.row(i)).winner; });
    return out;
  }
  for_each_row_block(x.rows(), [&](Eigen::Index i) {
    Eigen::RowVectorXd p(m.n_classes());
    proba_row(m, x.row(i), p);
    out(i) = argmax_row(p);
  });
  return out;
}

}  // namespace dtc
