#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtc/data.hpp"
#include "dtc/pipeline.hpp"

namespace dtc {

/// Rows are true classes, columns are predicted classes.
struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  ClassTaxonomy taxonomy = ClassTaxonomy::stage_one();

  std::int64_t total() const { return counts.sum(); }
};

ConfusionMatrix confusion_matrix(const LabelVector& y_true, const LabelVector& y_pred,
                                 const ClassTaxonomy& taxonomy);

struct MetricsReport {
  double accuracy = 0.0;
  Vector precision;
  Vector recall;
  Vector f1;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> support;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  ClassTaxonomy taxonomy = ClassTaxonomy::stage_one();
};

/// Classes with a zero denominator score 0 and still count in the macro mean.
MetricsReport metrics_from_confusion(const ConfusionMatrix& c);
MetricsReport evaluate(const LabelVector& y_true, const LabelVector& y_pred, const ClassTaxonomy& taxonomy);

struct MicroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

MicroMetrics micro_metrics(const ConfusionMatrix& c);

struct FoldResult {
  SplitPlan plan;
  MetricsReport metrics;
  StageArtifact artifact;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct CvResult {
  std::vector<FoldResult> folds;
  MetricSummary accuracy;
  MetricSummary macro_precision;
  MetricSummary macro_recall;
  MetricSummary macro_f1;
};

/// Each fold refits the whole stage (imputer, normalizer, ranking, learner)
/// on its training rows only. Fold f trains with seed derive_seed(seed, f).
CvResult cross_validate(const Dataset& d, const StageSpec& spec, int k, std::uint64_t seed);

struct ComparisonRow {
  std::string algorithm;
  Stage stage = Stage::StageI;
  double accuracy = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double weighted_f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
};

ComparisonRow comparison_row(std::string algorithm, Stage stage, const MetricsReport& m);

enum class ReportFormat { Csv, Json, Text };

std::string_view to_string(ReportFormat format) noexcept;
std::optional<ReportFormat> parse_report_format(std::string_view text);

/// 100 * value with four decimals: 0.997491 -> "99.7491".
std::string format_percent(double value);

/// "DTC1", "DTC2", "DTC3".
std::string stage_label(Stage stage);

/// Rows sorted by stage, then accuracy descending (stable otherwise).
std::string emit_comparison(std::vector<ComparisonRow> rows, ReportFormat format);

Json metrics_to_json(const MetricsReport& m);
Json confusion_to_json(const ConfusionMatrix& c);
Json cv_summary_to_json(const CvResult& r);

/// One report document: per-class rows, then macro and weighted averages.
std::string emit_metrics(const MetricsReport& m, const ConfusionMatrix& c, ReportFormat format);

}  // namespace dtc
