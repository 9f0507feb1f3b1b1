#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dtc/data.hpp"
#include "dtc/feature_selection.hpp"
#include "dtc/learners.hpp"
#include "dtc/serialization.hpp"

namespace dtc {

enum class Routing { Independent, Cascade };

std::string_view to_string(Routing routing) noexcept;
std::optional<Routing> parse_routing(std::string_view text);

struct SelectionSpec {
  std::optional<ScoreMethod> method;  // nullopt = keep every feature
  int k = 0;
  int n_bins = 10;
};

struct StageSpec {
  Stage stage = Stage::StageI;
  LearnerSpec learner;
  SelectionSpec selection;
  NormMethod normalization = NormMethod::MinMax;
  std::string label_column;
};

/// Everything needed to replay one stage on rows of the shared column space.
struct StageArtifact {
  Stage stage = Stage::StageI;
  ImputationParams imputation;
  NormalizationParams normalization;
  std::vector<int> feature_indices;
  TrainedModel model;

  /// Impute (fitted fill values), normalize, then keep the selected columns.
  Matrix transform(const Dataset& d) const;
  Matrix transform(const Eigen::Ref<const Matrix>& x) const;
  LabelVector predict(const Dataset& d) const;
  LabelVector predict(const Eigen::Ref<const Matrix>& x) const;
};

/// Wall-clock milliseconds per phase of train_stage.
struct StageTiming {
  double preprocess_ms = 0.0;
  double select_ms = 0.0;
  double fit_ms = 0.0;
};

/// impute -> fit normalizer -> rank on normalized rows -> top-k -> fit learner.
/// Every statistic comes from `d` alone.
StageArtifact train_stage(const Dataset& d, const StageSpec& spec, std::uint64_t seed,
                          StageTiming* timing = nullptr);

struct PipelineModel {
  std::array<StageSpec, 3> specs;
  std::array<StageArtifact, 3> stages;
  Routing routing = Routing::Cascade;
  std::string cascade_gate = "Malicious";
  std::vector<std::string> feature_names;
};

/// Stage s trains on datasets[s] with seed derive_seed(seed, s). Stages never
/// see each other's outputs during training.
PipelineModel train_pipeline(const std::array<Dataset, 3>& datasets, const std::array<StageSpec, 3>& specs,
                             Routing routing, std::uint64_t seed, std::string cascade_gate = "Malicious");

struct RoutedPrediction {
  std::string stage1;
  std::optional<std::string> stage2;
  std::optional<std::string> stage3;

  friend auto operator<=>(const RoutedPrediction&, const RoutedPrediction&) = default;
};

std::vector<RoutedPrediction> predict_routed(const PipelineModel& p, const Eigen::Ref<const Matrix>& x);
std::vector<RoutedPrediction> predict_routed(const PipelineModel& p, const Eigen::Ref<const Matrix>& x,
                                             Routing routing);

/// "Benign" or "Malicious->Tor->Chat".
std::string path_label(const RoutedPrediction& r);

Json stage_spec_to_json(const StageSpec& spec);
StageSpec stage_spec_from_json(const Json& j);
Json stage_artifact_to_json(const StageArtifact& a);
StageArtifact stage_artifact_from_json(const Json& j);

Json pipeline_to_json(const PipelineModel& p);
PipelineModel pipeline_from_json(const Json& j);
void save_pipeline(const PipelineModel& p, const std::filesystem::path& path);
PipelineModel load_pipeline(const std::filesystem::path& path);

}  // namespace dtc
