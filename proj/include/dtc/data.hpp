#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dtc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using LabelVector = Eigen::VectorXi;
using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using IndexList = std::vector<int>;

enum class Stage { StageI, StageII, StageIII, Custom };

std::string_view to_string(Stage stage) noexcept;
/// Accepts "stage1"/"1"/"I"/"StageI" style spellings.
std::optional<Stage> parse_stage(std::string_view text);
/// 0, 1, 2 for the three DTC stages; throws for Custom.
int stage_index(Stage stage);

/// Closed label set of one classification stage.
class ClassTaxonomy {
 public:
  static ClassTaxonomy stage_one();
  static ClassTaxonomy stage_two();
  static ClassTaxonomy stage_three();
  static ClassTaxonomy for_stage(Stage stage);
  static ClassTaxonomy custom(std::vector<std::string> names);

  Stage stage() const noexcept { return stage_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  int size() const noexcept { return static_cast<int>(names_.size()); }
  const std::string& name(int index) const;
  /// Case-insensitive lookup.
  std::optional<int> find(std::string_view name) const;

  friend bool operator==(const ClassTaxonomy&, const ClassTaxonomy&) = default;

 private:
  ClassTaxonomy(Stage stage, std::vector<std::string> names);

  Stage stage_ = Stage::Custom;
  std::vector<std::string> names_;
};

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string source_path;

  std::optional<int> column(std::string_view name) const;
};

struct CsvOptions {
  char delimiter = ',';
};

/// Reads an RFC-4180 style CSV. Header names are trimmed and a UTF-8 BOM is
/// dropped. Duplicate header names get ".1", ".2", ... suffixes.
RawTable load_flow_csv(const std::filesystem::path& path, const CsvOptions& options = {});
RawTable parse_flow_csv(std::string_view text, std::string source_path = "<memory>",
                        const CsvOptions& options = {});

struct Dataset {
  Matrix features;
  MissingMask missing_mask;
  std::vector<std::string> feature_names;
  LabelVector labels;
  ClassTaxonomy taxonomy = ClassTaxonomy::stage_one();

  Eigen::Index n_samples() const noexcept { return features.rows(); }
  Eigen::Index n_features() const noexcept { return features.cols(); }
  bool has_missing() const { return missing_mask.size() > 0 && missing_mask.any(); }
};

/// Builds a dataset with an all-false missing mask.
Dataset make_dataset(Matrix features, LabelVector labels, ClassTaxonomy taxonomy,
                     std::vector<std::string> feature_names = {});

using LabelAliases = std::map<std::string, std::string>;

const std::vector<std::string>& default_missing_tokens();

Dataset to_dataset(const RawTable& table, const std::vector<std::string>& feature_columns,
                   const std::string& label_column, const ClassTaxonomy& taxonomy,
                   const LabelAliases& label_aliases = {},
                   const std::vector<std::string>& missing_tokens = default_missing_tokens());

/// Columns (minus `exclude`) whose every cell is numeric or a missing token.
std::vector<std::string> numeric_columns(
    const RawTable& table, const std::vector<std::string>& exclude,
    const std::vector<std::string>& missing_tokens = default_missing_tokens());

/// Maps one raw label through the alias table onto a taxonomy index.
std::optional<int> resolve_label(std::string_view raw, const ClassTaxonomy& taxonomy,
                                 const LabelAliases& aliases);

std::vector<std::string> decode_labels(const Dataset& d);

Dataset subset_rows(const Dataset& d, std::span<const int> rows);
Dataset select_features(const Dataset& d, std::span<const int> columns);

// ---------------------------------------------------------------------------
// Imputation and normalization

enum class ImputeStrategy { MedianPerFeature, DropRow };

struct ImputationParams {
  Vector fill_values;  // per-feature median of the unmasked cells
};

ImputationParams fit_imputer(const Dataset& d);
Dataset apply_imputer(const Dataset& d, const ImputationParams& params);
Dataset impute_missing(const Dataset& d, ImputeStrategy strategy);
Eigen::VectorXi missing_counts(const Dataset& d);

enum class NormMethod { MinMax, ZScore };

std::string_view to_string(NormMethod method) noexcept;
std::optional<NormMethod> parse_norm_method(std::string_view text);

/// One (a, b) pair per feature: (min, max) for MinMax, (mean, stddev) for ZScore.
struct NormalizationParams {
  NormMethod method = NormMethod::MinMax;
  Vector a;
  Vector b;
};

NormalizationParams fit_normalizer(const Dataset& d, NormMethod method);
Dataset apply_normalizer(const Dataset& d, const NormalizationParams& params);
Matrix apply_normalizer(const Eigen::Ref<const Matrix>& x, const NormalizationParams& params);

// ---------------------------------------------------------------------------
// Splits

struct SplitPlan {
  IndexList train_indices;
  IndexList test_indices;
  std::uint64_t seed = 0;
};

SplitPlan stratified_split(const LabelVector& labels, int n_classes, double test_fraction,
                           std::uint64_t seed);
SplitPlan stratified_split(const Dataset& d, double test_fraction, std::uint64_t seed);

std::vector<SplitPlan> kfold(const LabelVector& labels, int n_classes, int k, std::uint64_t seed);
std::vector<SplitPlan> kfold(const Dataset& d, int k, std::uint64_t seed);

}  // namespace dtc
