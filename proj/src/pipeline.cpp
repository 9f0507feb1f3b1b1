#include "dtc/pipeline.hpp"

#include <chrono>
#include <numeric>

#include "dtc/error.hpp"
#include "dtc/parallel.hpp"
#include "dtc/random.hpp"
#include "strings.hpp"

namespace dtc {

std::string_view to_string(Routing routing) noexcept {
  return routing == Routing::Independent ? "independent" : "cascade";
}

std::optional<Routing> parse_routing(std::string_view text) {
  const auto t = detail::lower(detail::trim(text));
  if (t == "independent") return Routing::Independent;
  if (t == "cascade") return Routing::Cascade;
  return std::nullopt;
}

Matrix StageArtifact::transform(const Eigen::Ref<const Matrix>& x) const {
  if (x.cols() != imputation.fill_values.size()) {
    throw Error(Errc::ShapeMismatch, "stage expects " + std::to_string(imputation.fill_values.size()) +
                                         " input columns, got " + std::to_string(x.cols()));
  }
  const Matrix normalized = apply_normalizer(x, normalization);
  return normalized(Eigen::all, feature_indices);
}

Matrix StageArtifact::transform(const Dataset& d) const {
  if (d.n_features() != imputation.fill_values.size()) {
    throw Error(Errc::ShapeMismatch, "stage expects " + std::to_string(imputation.fill_values.size()) +
                                         " input columns, got " + std::to_string(d.n_features()));
  }
  return transform(apply_imputer(d, imputation).features);
}

LabelVector StageArtifact::predict(const Dataset& d) const { return dtc::predict(model, transform(d)); }

LabelVector StageArtifact::predict(const Eigen::Ref<const Matrix>& x) const {
  return dtc::predict(model, transform(x));
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

StageArtifact train_stage(const Dataset& d, const StageSpec& spec, std::uint64_t seed, StageTiming* timing) {
  if (spec.stage != Stage::Custom) {
    const auto expected = ClassTaxonomy::for_stage(spec.stage);
    if (d.taxonomy.size() != expected.size() || d.taxonomy.names() != expected.names()) {
      throw Error(Errc::SpecMismatch, std::string(to_string(spec.stage)) + " expects " +
                                          std::to_string(expected.size()) + " classes, labels carry " +
                                          std::to_string(d.taxonomy.size()));
    }
  }
  auto clock = std::chrono::steady_clock::now();
  StageTiming local;
  StageArtifact art;
  art.stage = spec.stage;
  art.imputation = fit_imputer(d);
  const Dataset imputed = apply_imputer(d, art.imputation);
  art.normalization = fit_normalizer(imputed, spec.normalization);
  const Dataset normalized = apply_normalizer(imputed, art.normalization);
  local.preprocess_ms = elapsed_ms(clock);

  clock = std::chrono::steady_clock::now();
  if (spec.selection.method) {
    const auto ranking = rank_features(normalized, *spec.selection.method, spec.selection.n_bins);
    art.feature_indices = select_top_k(ranking, spec.selection.k);
  } else {
    art.feature_indices.resize(static_cast<std::size_t>(d.n_features()));
    std::iota(art.feature_indices.begin(), art.feature_indices.end(), 0);
  }
  local.select_ms = elapsed_ms(clock);

  clock = std::chrono::steady_clock::now();
  art.model = train(select_features(normalized, art.feature_indices), spec.learner, seed);
  art.model.feature_subset = art.feature_indices;
  local.fit_ms = elapsed_ms(clock);
  if (timing) *timing = local;
  return art;
}

PipelineModel train_pipeline(const std::array<Dataset, 3>& datasets, const std::array<StageSpec, 3>& specs,
                             Routing routing, std::uint64_t seed, std::string cascade_gate) {
  for (std::size_t s = 0; s < 3; ++s) {
    if (specs[s].stage != static_cast<Stage>(s)) {
      throw Error(Errc::SpecMismatch, "stage specs must be ordered stage1, stage2, stage3");
    }
    if (datasets[s].feature_names != datasets[0].feature_names) {
      throw Error(Errc::ColumnMismatch, "stage " + std::to_string(s + 1) + " dataset columns differ from stage 1");
    }
  }
  if (!ClassTaxonomy::stage_one().find(cascade_gate)) {
    throw Error(Errc::Config, "cascade gate '" + cascade_gate + "' is not a stage 1 class");
  }

  PipelineModel p;
  p.specs = specs;
  p.routing = routing;
  p.cascade_gate = ClassTaxonomy::stage_one().name(*ClassTaxonomy::stage_one().find(cascade_gate));
  p.feature_names = datasets[0].feature_names;
  parallel_for(3, [&](std::size_t s) { p.stages[s] = train_stage(datasets[s], specs[s], derive_seed(seed, s)); });
  return p;
}

std::vector<RoutedPrediction> predict_routed(const PipelineModel& p, const Eigen::Ref<const Matrix>& x) {
  return predict_routed(p, x, p.routing);
}

std::vector<RoutedPrediction> predict_routed(const PipelineModel& p, const Eigen::Ref<const Matrix>& x,
                                             Routing routing) {
  if (x.cols() != static_cast<Eigen::Index>(p.feature_names.size())) {
    throw Error(Errc::ShapeMismatch, "pipeline expects " + std::to_string(p.feature_names.size()) +
                                         " columns, got " + std::to_string(x.cols()));
  }
  const auto stage1 = p.stages[0].predict(x);
  const auto& tax1 = p.stages[0].model.taxonomy;
  const int gate = *tax1.find(p.cascade_gate);

  std::vector<int> routed;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (routing == Routing::Independent || stage1(i) == gate) routed.push_back(static_cast<int>(i));
  }
  std::vector<RoutedPrediction> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)].stage1 = tax1.name(stage1(i));
  if (routed.empty()) return out;

  const Matrix sub = x(routed, Eigen::all);
  const auto stage2 = p.stages[1].predict(sub);
  const auto stage3 = p.stages[2].predict(sub);
  for (std::size_t r = 0; r < routed.size(); ++r) {
    auto& row = out[static_cast<std::size_t>(routed[r])];
    row.stage2 = p.stages[1].model.taxonomy.name(stage2(static_cast<Eigen::Index>(r)));
    row.stage3 = p.stages[2].model.taxonomy.name(stage3(static_cast<Eigen::Index>(r)));
  }
  return out;
}

std::string path_label(const RoutedPrediction& r) {
  std::string out = r.stage1;
  if (r.stage2) out += "->" + *r.stage2;
  if (r.stage3) out += "->" + *r.stage3;
  return out;
}

// ---------------------------------------------------------------------------
// JSON

Json stage_spec_to_json(const StageSpec& spec) {
  Json selection = Json{{"method", spec.selection.method ? Json(to_string(*spec.selection.method)) : Json(nullptr)},
                        {"k", spec.selection.k},
                        {"n_bins", spec.selection.n_bins}};
  return Json{{"stage", to_string(spec.stage)},
              {"learner", learner_spec_to_json(spec.learner)},
              {"selection", selection},
              {"normalization", to_string(spec.normalization)},
              {"label_column", spec.label_column}};
}

StageSpec stage_spec_from_json(const Json& j) {
  StageSpec spec;
  const auto stage_text = j.at("stage").get<std::string>();
  const auto stage = parse_stage(stage_text);
  if (!stage) throw Error(Errc::Config, "unknown stage '" + stage_text + "'");
  spec.stage = *stage;
  if (j.contains("learner")) spec.learner = learner_spec_from_json(j.at("learner"));
  if (j.contains("selection")) {
    const auto& s = j.at("selection");
    if (s.contains("method") && !s.at("method").is_null()) {
      const auto text = s.at("method").get<std::string>();
      if (text != "all") {
        const auto method = parse_score_method(text);
        if (!method) throw Error(Errc::Config, "unknown selection method '" + text + "' (valid: infogain, fisher, chisquare, all)");
        spec.selection.method = method;
      }
    }
    if (s.contains("k")) spec.selection.k = s.at("k").get<int>();
    if (s.contains("n_bins")) spec.selection.n_bins = s.at("n_bins").get<int>();
  }
  if (j.contains("normalization")) {
    const auto text = j.at("normalization").get<std::string>();
    const auto method = parse_norm_method(text);
    if (!method) throw Error(Errc::Config, "unknown normalization '" + text + "' (valid: minmax, zscore)");
    spec.normalization = *method;
  }
  if (j.contains("label_column")) spec.label_column = j.at("label_column").get<std::string>();
  return spec;
}

Json stage_artifact_to_json(const StageArtifact& a) {
  return Json{{"stage", to_string(a.stage)},
              {"imputation", std::vector<double>(a.imputation.fill_values.begin(), a.imputation.fill_values.end())},
              {"normalization", normalization_to_json(a.normalization)},
              {"feature_indices", a.feature_indices},
              {"model", model_to_json(a.model)}};
}

StageArtifact stage_artifact_from_json(const Json& j) {
  return with_schema_errors("stage artifact", [&] {
    StageArtifact a;
    const auto stage = parse_stage(j.at("stage").get<std::string>());
    if (!stage) throw Error(Errc::Schema, "unknown stage tag");
    a.stage = *stage;
    const auto fill = j.at("imputation").get<std::vector<double>>();
    a.imputation.fill_values = Eigen::Map<const Vector>(fill.data(), static_cast<Eigen::Index>(fill.size()));
    a.normalization = normalization_from_json(j.at("normalization"));
    a.feature_indices = j.at("feature_indices").get<std::vector<int>>();
    a.model = model_from_json(j.at("model"));
    const auto width = a.imputation.fill_values.size();
    if (a.normalization.a.size() != width) throw Error(Errc::Schema, "normalizer width differs from imputer width");
    for (const int f : a.feature_indices) {
      if (f < 0 || f >= width) throw Error(Errc::Schema, "feature index outside the input width");
    }
    if (a.model.feature_subset != a.feature_indices) {
      throw Error(Errc::Schema, "model feature subset differs from the stage's selection");
    }
    return a;
  });
}

Json pipeline_to_json(const PipelineModel& p) {
  Json specs = Json::array();
  Json stages = Json::array();
  for (std::size_t s = 0; s < 3; ++s) {
    specs.push_back(stage_spec_to_json(p.specs[s]));
    stages.push_back(stage_artifact_to_json(p.stages[s]));
  }
  return Json{{"format_version", kFormatVersion},
              {"routing", to_string(p.routing)},
              {"cascade_gate", p.cascade_gate},
              {"feature_names", p.feature_names},
              {"specs", specs},
              {"stages", stages}};
}

PipelineModel pipeline_from_json(const Json& j) {
  return with_schema_errors("pipeline", [&] {
    if (!j.is_object()) throw Error(Errc::Schema, "pipeline document must be an object");
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error(Errc::VersionMismatch, "pipeline format_version " + std::to_string(version) + ", expected " +
                                             std::to_string(kFormatVersion));
    }
    PipelineModel p;
    const auto routing = parse_routing(j.at("routing").get<std::string>());
    if (!routing) throw Error(Errc::Schema, "unknown routing mode");
    p.routing = *routing;
    p.cascade_gate = j.at("cascade_gate").get<std::string>();
    p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto& specs = j.at("specs");
    const auto& stages = j.at("stages");
    if (specs.size() != 3 || stages.size() != 3) throw Error(Errc::Schema, "pipeline needs exactly three stages");
    for (std::size_t s = 0; s < 3; ++s) {
      p.specs[s] = stage_spec_from_json(specs.at(s));
      p.stages[s] = stage_artifact_from_json(stages.at(s));
      if (p.stages[s].stage != static_cast<Stage>(s)) throw Error(Errc::Schema, "stages out of order");
      if (p.stages[s].imputation.fill_values.size() != static_cast<Eigen::Index>(p.feature_names.size())) {
        throw Error(Errc::Schema, "stage width differs from the pipeline's column list");
      }
    }
    if (!p.stages[0].model.taxonomy.find(p.cascade_gate)) throw Error(Errc::Schema, "cascade gate is not a stage 1 class");
    return p;
  });
}

void save_pipeline(const PipelineModel& p, const std::filesystem::path& path) {
  write_text_file(path, pipeline_to_json(p).dump(1) + "\n");
}

PipelineModel load_pipeline(const std::filesystem::path& path) { return pipeline_from_json(read_json_file(path)); }

}  // namespace dtc
