#include <doctest.h>

#include <algorithm>

#include "dtc/error.hpp"
#include "dtc/evaluation.hpp"
#include "helpers.hpp"

using namespace dtc;

namespace {

ConfusionMatrix from_counts(std::initializer_list<std::initializer_list<std::int64_t>> rows,
                            const ClassTaxonomy& tax) {
  ConfusionMatrix c;
  c.taxonomy = tax;
  c.counts.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (auto v : r) c.counts(i, j++) = v;
    ++i;
  }
  return c;
}

}  // namespace

TEST_CASE("confusion matrix") {
  LabelVector a(2), b(2);
  a << 0, 1;
  b << 1, 0;
  const auto anti = confusion_matrix(a, b, ClassTaxonomy::stage_one());
  CHECK(anti.counts(0, 1) == 1);
  CHECK(anti.counts(1, 0) == 1);
  CHECK(anti.counts.trace() == 0);
  CHECK(confusion_matrix(a, a, ClassTaxonomy::stage_one()).counts.trace() == 2);

  Rng rng(3);
  LabelVector t(100), p(100);
  for (int i = 0; i < 100; ++i) {
    t(i) = static_cast<int>(rng.index(4));
    p(i) = static_cast<int>(rng.index(4));
  }
  CHECK(confusion_matrix(t, p, ClassTaxonomy::stage_two()).total() == 100);
  CHECK_THROWS_AS(confusion_matrix(t, p.head(5), ClassTaxonomy::stage_two()), Error);
  p(0) = 9;
  CHECK_THROWS_AS(confusion_matrix(t, p, ClassTaxonomy::stage_two()), Error);
}

TEST_CASE("metrics from confusion") {
  const auto m = metrics_from_confusion(from_counts({{50, 10}, {5, 35}}, ClassTaxonomy::stage_one()));
  CHECK(m.accuracy == doctest::Approx(0.85));
  CHECK(m.precision(1) == doctest::Approx(35.0 / 45.0));
  CHECK(m.recall(1) == doctest::Approx(0.875));
  CHECK(m.support(0) == 60);

  const auto perfect = metrics_from_confusion(from_counts({{3, 0}, {0, 4}}, ClassTaxonomy::stage_one()));
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.macro_f1 == 1.0);
  CHECK(perfect.weighted_precision == 1.0);

  const auto absent = metrics_from_confusion(
      from_counts({{5, 0, 0, 0}, {0, 5, 0, 0}, {0, 0, 5, 0}, {0, 0, 0, 0}}, ClassTaxonomy::stage_two()));
  CHECK(absent.precision(3) == 0.0);
  CHECK(absent.recall(3) == 0.0);
  CHECK(absent.f1(3) == 0.0);
  CHECK(absent.macro_f1 == doctest::Approx(0.75));

  CHECK_THROWS_AS(metrics_from_confusion(from_counts({{0, 0}, {0, 0}}, ClassTaxonomy::stage_one())), Error);
}

TEST_CASE("metric identities on random label vectors") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(300));
    LabelVector t(n), p(n);
    for (int i = 0; i < n; ++i) {
      t(i) = static_cast<int>(rng.index(8));
      p(i) = rng.uniform() < 0.6 ? t(i) : static_cast<int>(rng.index(8));
    }
    const auto tax = ClassTaxonomy::stage_three();
    const auto c = confusion_matrix(t, p, tax);
    const auto m = metrics_from_confusion(c);
    const double agree = static_cast<double>((t.array() == p.array()).count()) / n;
    CHECK(m.accuracy == doctest::Approx(agree).epsilon(1e-15));
    const auto micro = micro_metrics(c);
    CHECK(micro.precision == doctest::Approx(m.accuracy));
    CHECK(micro.recall == doctest::Approx(m.accuracy));
    CHECK(m.macro_f1 <= m.f1.maxCoeff() + 1e-15);
    CHECK(m.macro_f1 >= m.f1.minCoeff() - 1e-15);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    const auto shuffled = metrics_from_confusion(confusion_matrix(t(order), p(order), tax));
    CHECK(shuffled.accuracy == m.accuracy);
    CHECK(shuffled.f1 == m.f1);
  }
}

TEST_CASE("cross validation") {
  Matrix x(100, 3);
  LabelVector y(100);
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    y(i) = i % 2;
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
  }
  const auto d = make_dataset(x, y, ClassTaxonomy::stage_one(), {"a", "b", "c"});
  StageSpec constant;
  constant.learner.tree.max_depth = 0;
  const auto r = cross_validate(d, constant, 5, 4);
  REQUIRE(r.folds.size() == 5);
  for (const auto& f : r.folds) CHECK(f.metrics.accuracy == 0.5);
  CHECK(r.accuracy.mean == 0.5);
  CHECK(r.accuracy.stddev == 0.0);

  StageSpec tree;
  const auto a = cross_validate(d, tree, 4, 9);
  const auto b = cross_validate(d, tree, 4, 9);
  CHECK(a.accuracy.mean == b.accuracy.mean);
  CHECK(a.macro_f1.stddev == b.macro_f1.stddev);

  SUBCASE("held-out rows never feed a fitted statistic") {
    StageSpec spec;
    spec.selection.method = ScoreMethod::Fisher;
    spec.selection.k = 2;
    const auto plans = kfold(d, 5, 4);
    for (std::size_t f = 0; f < plans.size(); ++f) {
      Matrix canary(100, 4);
      canary.leftCols(3) = x;
      canary.col(3).setConstant(1.0);
      auto dd = make_dataset(canary, y, d.taxonomy, {"a", "b", "c", "canary"});
      for (int i : plans[f].test_indices) {
        dd.features(i, 3) = 1e12;
        dd.features(i, 0) = 0.0;
        dd.missing_mask(i, 0) = true;
      }
      dd.features(plans[f].train_indices[0], 0) = 0.0;
      dd.missing_mask(plans[f].train_indices[0], 0) = true;
      const auto cv = cross_validate(dd, spec, 5, 4);
      const auto& art = cv.folds[f].artifact;
      CHECK(cv.folds[f].plan.test_indices == plans[f].test_indices);
      CHECK(art.normalization.b(3) == 1.0);
      std::vector<double> observed;
      for (int i : plans[f].train_indices) {
        if (!dd.missing_mask(i, 0)) observed.push_back(x(i, 0));
      }
      std::sort(observed.begin(), observed.end());
      const std::size_t m = observed.size();
      const double med = m % 2 ? observed[m / 2] : 0.5 * (observed[m / 2 - 1] + observed[m / 2]);
      CHECK(art.imputation.fill_values(0) == med);
      CHECK(std::find(art.feature_indices.begin(), art.feature_indices.end(), 3) == art.feature_indices.end());
    }
  }
}

TEST_CASE("comparison tables") {
  CHECK(format_percent(0.997491) == "99.7491");
  CHECK(format_percent(1.0) == "100.0000");
  CHECK(emit_comparison({}, ReportFormat::Csv) == "algorithm,stage,accuracy,f1,precision,recall\n");
  CHECK(emit_comparison({}, ReportFormat::Json) == "[]\n");

  MetricsReport lo, hi, s2;
  lo.accuracy = 0.9;
  hi.accuracy = 0.997491;
  hi.macro_f1 = 0.5;
  s2.accuracy = 0.99;
  std::vector<ComparisonRow> rows{comparison_row("KNN", Stage::StageII, s2),
                                  comparison_row("Decision Tree", Stage::StageI, lo),
                                  comparison_row("AdaBoost", Stage::StageI, hi)};
  const auto csv = emit_comparison(rows, ReportFormat::Csv);
  CHECK(csv ==
        "algorithm,stage,accuracy,f1,precision,recall\n"
        "AdaBoost,DTC1,99.7491,50.0000,0.0000,0.0000\n"
        "Decision Tree,DTC1,90.0000,0.0000,0.0000,0.0000\n"
        "KNN,DTC2,99.0000,0.0000,0.0000,0.0000\n");
  CHECK(emit_comparison(rows, ReportFormat::Csv) == csv);
  const auto json = Json::parse(emit_comparison(rows, ReportFormat::Json));
  CHECK(json[0]["accuracy"].get<double>() == 99.7491);
  CHECK(json[2]["stage"] == "DTC2");
  const auto text = emit_comparison(rows, ReportFormat::Text);
  CHECK(text.find("AdaBoost       DTC1    99.7491") != std::string::npos);
}
