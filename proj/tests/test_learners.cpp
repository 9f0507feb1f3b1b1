#include <doctest.h>

#include <cmath>

#include "dtc/error.hpp"
#include "dtc/learners.hpp"
#include "dtc/parallel.hpp"
#include "helpers.hpp"

using namespace dtc;

namespace {

double accuracy(const LabelVector& a, const LabelVector& b) { return (a.array() == b.array()).cast<double>().mean(); }

LearnerSpec spec_of(LearnerKind kind) {
  LearnerSpec s;
  s.kind = kind;
  s.forest.n_trees = 15;
  s.adaboost.n_rounds = 20;
  s.gradient_boosting.n_stages = 15;
  s.knn.k = 5;
  return s;
}

const LearnerKind kAll[] = {LearnerKind::DecisionTree, LearnerKind::RandomForest, LearnerKind::AdaBoost,
                            LearnerKind::GradientBoosting, LearnerKind::GaussianNB, LearnerKind::Knn};

}  // namespace

TEST_CASE("learner names") {
  for (auto k : kAll) CHECK(parse_learner_kind(to_string(k)) == k);
  CHECK(display_name(LearnerKind::RandomForest) == "Random Forest");
  CHECK_FALSE(parse_learner_kind("svm"));
}

TEST_CASE("random forest") {
  const auto d = testing::blobs(200, 6, 2, 17, 10.0);
  ForestParams f;
  f.n_trees = 25;
  const auto a = train_random_forest(d, TreeParams{}, f, 99);
  CHECK(accuracy(predict(a, d.features), d.labels) >= 0.99);

  const auto b = train_random_forest(d, TreeParams{}, f, 99);
  CHECK(predict_proba(a, d.features) == predict_proba(b, d.features));

  SUBCASE("one tree without bootstrap is the plain tree") {
    const auto noisy = testing::blobs(150, 5, 3, 8, 1.0);
    ForestParams one{1, 5, false};
    const auto forest = train_random_forest(noisy, TreeParams{}, one, 5);
    const auto tree = train_decision_tree(noisy, TreeParams{});
    CHECK(predict(forest, noisy.features) == predict(tree, noisy.features));

    // Leaves are pure here, so the vote share equals the leaf frequency.
    const auto& t = std::get<ForestModel>(forest.model).trees[0];
    const Matrix proba = predict_proba(forest, noisy.features);
    for (Eigen::Index i = 0; i < noisy.n_samples(); ++i) {
      const auto& leaf = t.leaf(t.leaf_of(noisy.features.row(i)));
      const Vector freq = leaf.class_counts.cast<double>() / leaf.class_counts.sum();
      CHECK((proba.row(i).transpose() - freq).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("samme alpha") {
  CHECK(samme_alpha(0.25, 2) == doctest::Approx(std::log(3.0)));
  CHECK(samme_alpha(0.25, 4) == doctest::Approx(2 * std::log(3.0)));
  CHECK_THROWS_AS(samme_alpha(0.5, 2), Error);
  try {
    samme_alpha(0.8, 4);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::WeakLearnerTooWeak);
  }
}

TEST_CASE("adaboost") {
  SUBCASE("perfect stump stops after one round") {
    Matrix x(6, 1);
    x << 1, 2, 3, 7, 8, 9;
    LabelVector y(6);
    y << 0, 0, 0, 1, 1, 1;
    const auto d = make_dataset(x, y, ClassTaxonomy::stage_one());
    const auto m = train_adaboost(d, AdaBoostParams{}, 0);
    CHECK(std::get<AdaBoostModel>(m.model).stumps.size() == 1);
    CHECK(predict(m, x) == y);
  }
  SUBCASE("weights stay normalized and the training-error bound holds") {
    const auto d = testing::blobs(200, 4, 2, 5, 0.8);
    AdaBoostTrace trace;
    const auto m = train_adaboost(d, AdaBoostParams{}, 0, &trace);
    double bound = 1.0;
    for (std::size_t t = 0; t < trace.round_errors.size(); ++t) {
      CHECK(std::abs(trace.weights[t].sum() - 1.0) <= 1e-9);
      CHECK(std::abs(trace.weight_sums[t] - 1.0) <= 1e-9);
      const double e = trace.round_errors[t];
      bound *= 2.0 * std::sqrt(e * (1.0 - e));
    }
    CHECK(1.0 - accuracy(predict(m, d.features), d.labels) <= bound + 1e-12);
  }
  SUBCASE("single class is rejected") {
    auto d = testing::blobs(20, 2, 2, 1);
    d.labels.setZero();
    CHECK_THROWS_AS(train_adaboost(d, AdaBoostParams{}, 0), Error);
  }
}

TEST_CASE("gradient boosting") {
  const auto d = testing::blobs(150, 3, 3, 41, 1.2);
  SUBCASE("deviance never rises") {
    GradBoostTrace trace;
    GradBoostParams p;
    p.n_stages = 30;
    train_gradient_boosting(d, p, 0, &trace);
    REQUIRE(trace.deviance.size() == 31);
    for (std::size_t s = 1; s < trace.deviance.size(); ++s) CHECK(trace.deviance[s] <= trace.deviance[s - 1] + 1e-9);
  }
  SUBCASE("zero stages predicts the prior argmax") {
    auto y = d.labels;
    y.head(20).setConstant(1);
    const auto dd = make_dataset(d.features, y, d.taxonomy);
    GradBoostParams p;
    p.n_stages = 0;
    CHECK((predict(train_gradient_boosting(dd, p, 0), dd.features).array() == 1).all());
  }
  SUBCASE("zero learning rate equals the init-only model") {
    GradBoostParams init;
    init.n_stages = 0;
    GradBoostParams frozen;
    frozen.n_stages = 10;
    frozen.learning_rate = 0.0;
    CHECK(predict_proba(train_gradient_boosting(d, frozen, 0), d.features) ==
          predict_proba(train_gradient_boosting(d, init, 0), d.features));
  }
  SUBCASE("separable blobs") {
    const auto easy = testing::blobs(120, 2, 2, 3, 10.0);
    GradBoostParams p;
    p.n_stages = 50;
    CHECK(accuracy(predict(train_gradient_boosting(easy, p, 0), easy.features), easy.labels) == 1.0);
  }
}

TEST_CASE("naive bayes and knn") {
  Matrix x(4, 1);
  x << -1, 1, 9, 11;
  LabelVector y(4);
  y << 0, 0, 1, 1;
  const auto d = make_dataset(x, y, ClassTaxonomy::stage_one());
  const auto nb = train_gaussian_nb(d);
  CHECK(predict(nb, Matrix::Zero(1, 1))(0) == 0);

  const auto blobs = testing::blobs(60, 3, 3, 2);
  CHECK(accuracy(predict(train_knn(blobs, 1), blobs.features), blobs.labels) == 1.0);
  CHECK_THROWS_AS(train_knn(blobs, 61), Error);

  Matrix pts(3, 1);
  pts << -1, 1, 1;
  LabelVector lab(3);
  lab << 0, 0, 1;
  const auto knn = train_knn(make_dataset(pts, lab, ClassTaxonomy::stage_one()), 3);
  CHECK(predict(knn, Matrix::Zero(1, 1))(0) == 0);
}

TEST_CASE("probability contract for every learner") {
  const auto d = testing::blobs(120, 4, 4, 55, 1.5);
  Rng rng(8);
  Matrix q(40, 4);
  for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = rng.normal(1.5, 3.0);
  for (auto kind : kAll) {
    CAPTURE(to_string(kind));
    const auto m = train(d, spec_of(kind), 4);
    const Matrix p = predict_proba(m, q);
    const LabelVector y = predict(m, q);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(p.row(i).minCoeff() >= 0.0);
      Eigen::Index arg;
      const double top = p.row(i).maxCoeff(&arg);
      const bool unique_max = (p.row(i).array() == top).count() == 1;
      if (kind != LearnerKind::Knn || unique_max) CHECK(y(i) == arg);
    }
    CHECK_THROWS_AS(predict(m, Matrix::Zero(2, 3)), Error);
  }
}

TEST_CASE("predictions do not depend on the thread count") {
  const auto d = testing::blobs(300, 5, 4, 13, 1.0);
  for (auto kind : kAll) {
    CAPTURE(to_string(kind));
    set_thread_count(1);
    const auto m1 = train(d, spec_of(kind), 77);
    const Matrix p1 = predict_proba(m1, d.features);
    set_thread_count(4);
    const auto m4 = train(d, spec_of(kind), 77);
    const Matrix p4 = predict_proba(m4, d.features);
    set_thread_count(1);
    CHECK(p1 == p4);
  }
}
