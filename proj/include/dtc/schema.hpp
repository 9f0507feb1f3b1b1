#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dtc/data.hpp"
#include "dtc/serialization.hpp"

namespace dtc {

struct StageColumn {
  std::string label_column;
  LabelAliases aliases;
};

enum class PrepImpute { Median, DropRow, None };

/// Column layout of a raw flow CSV.
struct SchemaConfig {
  char delimiter = ',';
  std::optional<std::vector<std::string>> features;  // nullopt = every numeric non-label column
  std::array<std::optional<StageColumn>, 3> stages;
  std::vector<std::string> missing_tokens = default_missing_tokens();
  PrepImpute impute = PrepImpute::Median;
};

SchemaConfig schema_from_json(const Json& j);
Json schema_to_json(const SchemaConfig& s);
SchemaConfig load_schema(const std::filesystem::path& path);

/// Label columns of a prepared file: dtc_label_stage1, dtc_label_stage2, ...
std::string prepared_label_column(Stage stage);

struct PreparedData {
  Matrix features;
  MissingMask missing_mask;
  std::vector<std::string> feature_names;
  std::array<std::optional<LabelVector>, 3> labels;
  std::size_t rows_in = 0;
  std::size_t dropped_rows = 0;
  Eigen::VectorXi imputed_counts;

  Dataset stage_dataset(Stage stage) const;
};

PreparedData prepare(const RawTable& table, const SchemaConfig& schema);

std::string prepared_to_csv(const PreparedData& p);
Json prep_manifest(const PreparedData& p, const std::string& source);

/// Loads one stage's dataset. Files carrying dtc_label_stageN columns are read
/// as prepared output; anything else needs a schema. Missing cells stay masked.
Dataset load_stage_dataset(const std::filesystem::path& path, Stage stage, const SchemaConfig* schema);

/// Loads every stage a file provides labels for.
PreparedData load_prepared(const std::filesystem::path& path, const SchemaConfig* schema);

}  // namespace dtc
