#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtc/data.hpp"

namespace dtc {

enum class ScoreMethod { InfoGain, Fisher, ChiSquare };

std::string_view to_string(ScoreMethod method) noexcept;
std::optional<ScoreMethod> parse_score_method(std::string_view text);

struct FeatureScore {
  int feature_index = 0;
  std::string feature_name;
  double score = 0.0;  // +inf only for a zero-variance, perfectly separating Fisher feature
  ScoreMethod method = ScoreMethod::InfoGain;
};

/// Equal-frequency discretization of one feature. Bin b covers
/// [edges[b-1], edges[b]) with open ends, so a value maps to the number of
/// edges that are <= it.
struct BinningSpec {
  int n_bins = 10;  // requested
  std::vector<double> edges;

  int bin_count() const noexcept { return static_cast<int>(edges.size()) + 1; }
  int bin_of(double value) const;
};

[[noreturn]] void throw_length_mismatch();

/// Shannon entropy in bits of a label vector.
double entropy(const LabelVector& labels, int n_classes);
/// Entropy in bits of a (possibly weighted) class histogram.
double entropy_of_counts(const Vector& counts);

BinningSpec equal_frequency_bins_impl(const Vector& values, int n_bins);
Eigen::VectorXi assign_bins_impl(const BinningSpec& bins, const Vector& values);
double fisher_score_impl(const Vector& feature, const LabelVector& labels, int n_classes);

/// Interior cut points at the linear-interpolated (i / n_bins) quantiles,
/// duplicates and cuts at the minimum removed.
template <typename Derived>
BinningSpec equal_frequency_bins(const Eigen::MatrixBase<Derived>& values, int n_bins = 10) {
  return equal_frequency_bins_impl(values.template cast<double>().eval(), n_bins);
}

template <typename Derived>
Eigen::VectorXi assign_bins(const BinningSpec& bins, const Eigen::MatrixBase<Derived>& values) {
  return assign_bins_impl(bins, values.template cast<double>().eval());
}

/// bins x classes table of observed counts.
Matrix contingency_table(const Eigen::VectorXi& bin_ids, int n_bins, const LabelVector& labels,
                         int n_classes);

double information_gain_binned(const Eigen::VectorXi& bin_ids, int n_bins,
                               const LabelVector& labels, int n_classes);

/// Pearson statistic over the cells with nonzero expected count.
double chi_square_from_table(const Matrix& observed);
/// (non-empty rows - 1) * (non-empty columns - 1).
int chi_square_dof(const Matrix& observed);

template <typename Derived>
double information_gain(const Eigen::MatrixBase<Derived>& feature, const LabelVector& labels,
                        int n_classes, const BinningSpec& bins) {
  const auto ids = assign_bins(bins, feature);
  if (ids.size() != labels.size()) throw_length_mismatch();
  return information_gain_binned(ids, bins.bin_count(), labels, n_classes);
}

template <typename Derived>
double chi_square_stat(const Eigen::MatrixBase<Derived>& feature, const LabelVector& labels,
                       int n_classes, const BinningSpec& bins) {
  const auto ids = assign_bins(bins, feature);
  if (ids.size() != labels.size()) throw_length_mismatch();
  return chi_square_from_table(contingency_table(ids, bins.bin_count(), labels, n_classes));
}

/// Between-class over within-class scatter, population variances.
template <typename Derived>
double fisher_score(const Eigen::MatrixBase<Derived>& feature, const LabelVector& labels,
                    int n_classes) {
  return fisher_score_impl(feature.template cast<double>().eval(), labels, n_classes);
}

/// Scores every feature and sorts best first; ties keep column order.
std::vector<FeatureScore> rank_features(const Dataset& d, ScoreMethod method, int n_bins = 10);

std::vector<int> select_top_k(const std::vector<FeatureScore>& ranking, int k);

/// CSV with header rank,feature_name,method,score; infinity written as "inf".
std::string ranking_csv(const std::vector<FeatureScore>& ranking);

}  // namespace dtc
