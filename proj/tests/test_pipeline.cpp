#include <doctest.h>

#include "dtc/error.hpp"
#include "dtc/pipeline.hpp"
#include "dtc/synthetic.hpp"
#include "helpers.hpp"

using namespace dtc;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected dtc::Error");
  return Errc::Io;
}

std::array<StageSpec, 3> specs_with(LearnerKind kind) {
  std::array<StageSpec, 3> specs;
  for (int s = 0; s < 3; ++s) {
    specs[s].stage = static_cast<Stage>(s);
    specs[s].learner.kind = kind;
    specs[s].learner.forest.n_trees = 10;
  }
  return specs;
}

struct Fixture {
  PreparedData data = [] {
    SyntheticParams p;
    p.n_rows = 800;
    return make_synthetic(p, 5);
  }();
  std::array<Dataset, 3> sets{data.stage_dataset(Stage::StageI), data.stage_dataset(Stage::StageII),
                              data.stage_dataset(Stage::StageIII)};
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "train_stage") {
  StageSpec spec;
  spec.stage = Stage::StageI;
  const auto art = train_stage(sets[0], spec, 1);
  REQUIRE(art.feature_indices.size() == 20);
  for (int i = 0; i < 20; ++i) CHECK(art.feature_indices[static_cast<std::size_t>(i)] == i);

  CHECK(code_of([&] { train_stage(sets[1], spec, 1); }) == Errc::SpecMismatch);

  spec.selection.method = ScoreMethod::Fisher;
  spec.selection.k = 4;
  spec.learner.kind = LearnerKind::RandomForest;
  spec.learner.forest.n_trees = 8;
  const auto a = train_stage(sets[0], spec, 9);
  const auto b = train_stage(sets[0], spec, 9);
  CHECK(a.feature_indices.size() == 4);
  CHECK(a.model.feature_subset == a.feature_indices);
  CHECK(stage_artifact_to_json(a).dump() == stage_artifact_to_json(b).dump());

  SUBCASE("normalizer is fit on the training rows only") {
    const auto plan = stratified_split(sets[0], 0.25, 3);
    const auto train_rows = subset_rows(sets[0], plan.train_indices);
    const auto art2 = train_stage(train_rows, spec, 9);
    const auto expect = fit_normalizer(train_rows, NormMethod::MinMax);
    CHECK(art2.normalization.a == expect.a);
    CHECK(art2.normalization.b == expect.b);
  }
}

TEST_CASE_FIXTURE(Fixture, "train_pipeline and routing") {
  const auto p = train_pipeline(sets, specs_with(LearnerKind::DecisionTree), Routing::Cascade, 11);
  for (int s = 0; s < 3; ++s) CHECK(p.stages[static_cast<std::size_t>(s)].feature_indices.size() == 20);

  const auto ind = predict_routed(p, data.features, Routing::Independent);
  const auto cas = predict_routed(p, data.features);
  std::size_t benign = 0;
  for (std::size_t i = 0; i < ind.size(); ++i) {
    CHECK(ind[i].stage2.has_value());
    CHECK(ind[i].stage3.has_value());
    CHECK(cas[i].stage1 == ind[i].stage1);
    if (cas[i].stage1 == "Benign") {
      ++benign;
      CHECK_FALSE(cas[i].stage2.has_value());
      CHECK_FALSE(cas[i].stage3.has_value());
      CHECK(path_label(cas[i]) == "Benign");
    } else {
      CHECK(cas[i].stage2 == ind[i].stage2);
      CHECK(cas[i].stage3 == ind[i].stage3);
    }
  }
  CHECK(benign > 0);
  CHECK(benign < ind.size());

  CHECK(code_of([&] { predict_routed(p, Matrix::Zero(2, 3)); }) == Errc::ShapeMismatch);

  SUBCASE("stage independence") {
    auto specs = specs_with(LearnerKind::DecisionTree);
    specs[2].learner.kind = LearnerKind::GaussianNB;
    const auto q = train_pipeline(sets, specs, Routing::Independent, 11);
    const auto other = predict_routed(q, data.features);
    for (std::size_t i = 0; i < ind.size(); ++i) {
      CHECK(other[i].stage1 == ind[i].stage1);
      CHECK(other[i].stage2 == ind[i].stage2);
    }
  }
  SUBCASE("column mismatch") {
    auto bad = sets;
    bad[1].feature_names[0] = "renamed";
    CHECK(code_of([&] { train_pipeline(bad, specs_with(LearnerKind::DecisionTree), Routing::Cascade, 1); }) ==
          Errc::ColumnMismatch);
  }
  SUBCASE("determinism") {
    const auto again = train_pipeline(sets, specs_with(LearnerKind::DecisionTree), Routing::Cascade, 11);
    CHECK(pipeline_to_json(again).dump() == pipeline_to_json(p).dump());
  }
}

TEST_CASE_FIXTURE(Fixture, "pipeline persistence") {
  const auto p = train_pipeline(sets, specs_with(LearnerKind::RandomForest), Routing::Cascade, 2);
  const auto dir = testing::scratch("pipe");
  save_pipeline(p, dir / "p.json");
  const auto back = load_pipeline(dir / "p.json");
  Rng rng(4);
  Matrix q(100, 20);
  for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = rng.normal(2.0, 5.0);
  CHECK(predict_routed(back, q) == predict_routed(p, q));
  CHECK(predict_routed(back, q, Routing::Independent) == predict_routed(p, q, Routing::Independent));

  Json doc = pipeline_to_json(p);
  doc["format_version"] = 0;
  write_text_file(dir / "v.json", doc.dump());
  CHECK(code_of([&] { load_pipeline(dir / "v.json"); }) == Errc::VersionMismatch);
  const auto text = pipeline_to_json(p).dump();
  write_text_file(dir / "t.json", text.substr(0, text.size() - 40));
  CHECK(code_of([&] { load_pipeline(dir / "t.json"); }) == Errc::Schema);
}
