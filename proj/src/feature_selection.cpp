#include "dtc/feature_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dtc/error.hpp"
#include "dtc/parallel.hpp"
#include "strings.hpp"

namespace dtc {

std::string_view to_string(ScoreMethod method) noexcept {
  switch (method) {
    case ScoreMethod::InfoGain: return "infogain";
    case ScoreMethod::Fisher: return "fisher";
    case ScoreMethod::ChiSquare: return "chisquare";
  }
  return "infogain";
}

std::optional<ScoreMethod> parse_score_method(std::string_view text) {
  const auto t = detail::lower(detail::trim(text));
  if (t == "infogain" || t == "ig" || t == "information_gain" || t == "info_gain") {
    return ScoreMethod::InfoGain;
  }
  if (t == "fisher" || t == "fisher_score") return ScoreMethod::Fisher;
  if (t == "chisquare" || t == "chi2" || t == "chi-square" || t == "chi_square") {
    return ScoreMethod::ChiSquare;
  }
  return std::nullopt;
}

void throw_length_mismatch() {
  throw Error(Errc::LengthMismatch, "feature and label vectors differ in length");
}

namespace {

void check_labels(const LabelVector& labels, int n_classes) {
  for (const int c : labels) {
    if (c < 0 || c >= n_classes) {
      throw Error(Errc::IndexOutOfRange, "label " + std::to_string(c) + " outside " +
                                             std::to_string(n_classes) + " classes");
    }
  }
}

Vector class_histogram(const LabelVector& labels, int n_classes) {
  check_labels(labels, n_classes);
  Vector counts = Vector::Zero(n_classes);
  for (const int c : labels) counts(c) += 1.0;
  return counts;
}

}  // namespace

int BinningSpec::bin_of(double value) const {
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

double entropy_of_counts(const Vector& counts) {
  const double total = counts.sum();
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (const double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

double entropy(const LabelVector& labels, int n_classes) {
  if (labels.size() == 0) throw Error(Errc::EmptyInput, "entropy of an empty label vector");
  return entropy_of_counts(class_histogram(labels, n_classes));
}

BinningSpec equal_frequency_bins_impl(const Vector& values, int n_bins) {
  if (values.size() == 0) throw Error(Errc::EmptyInput, "cannot bin an empty vector");
  if (n_bins < 1) throw Error(Errc::OutOfRange, "n_bins must be positive");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> uniq = sorted;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  BinningSpec spec;
  spec.n_bins = n_bins;
  const int effective = std::min<int>(n_bins, static_cast<int>(uniq.size()));
  const auto n = sorted.size();
  for (int i = 1; i < effective; ++i) {
    const double pos = static_cast<double>(i) / effective * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    const double cut = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    if (cut > sorted.front()) spec.edges.push_back(cut);
  }
  spec.edges.erase(std::unique(spec.edges.begin(), spec.edges.end()), spec.edges.end());
  return spec;
}

Eigen::VectorXi assign_bins_impl(const BinningSpec& bins, const Vector& values) {
  Eigen::VectorXi ids(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) ids(i) = bins.bin_of(values(i));
  return ids;
}

Matrix contingency_table(const Eigen::VectorXi& bin_ids, int n_bins, const LabelVector& labels,
                         int n_classes) {
  if (bin_ids.size() != labels.size()) throw_length_mismatch();
  check_labels(labels, n_classes);
  Matrix table = Matrix::Zero(n_bins, n_classes);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (bin_ids(i) < 0 || bin_ids(i) >= n_bins) {
      throw Error(Errc::IndexOutOfRange, "bin id " + std::to_string(bin_ids(i)));
    }
    table(bin_ids(i), labels(i)) += 1.0;
  }
  return table;
}

double information_gain_binned(const Eigen::VectorXi& bin_ids, int n_bins,
                               const LabelVector& labels, int n_classes) {
  if (labels.size() == 0) throw Error(Errc::EmptyInput, "information gain of empty input");
  const Matrix table = contingency_table(bin_ids, n_bins, labels, n_classes);
  const double n = static_cast<double>(labels.size());
  const double h_y = entropy_of_counts(table.colwise().sum().transpose());
  double conditional = 0.0;
  for (Eigen::Index b = 0; b < table.rows(); ++b) {
    const double n_b = table.row(b).sum();
    if (n_b > 0.0) conditional += n_b / n * entropy_of_counts(table.row(b).transpose());
  }
  // rounding can push a zero gain a hair below 0
  return std::max(0.0, h_y - conditional);
}

double chi_square_from_table(const Matrix& observed) {
  const double n = observed.sum();
  if (!(n > 0.0)) throw Error(Errc::EmptyInput, "chi-square of an empty table");
  const Vector rows = observed.rowwise().sum();
  const Eigen::RowVectorXd cols = observed.colwise().sum();
  double chi2 = 0.0;
  for (Eigen::Index i = 0; i < observed.rows(); ++i) {
    for (Eigen::Index j = 0; j < observed.cols(); ++j) {
      const double expected = rows(i) * cols(j) / n;
      if (expected > 0.0) {
        const double diff = observed(i, j) - expected;
        chi2 += diff * diff / expected;
      }
    }
  }
  return chi2;
}

int chi_square_dof(const Matrix& observed) {
  const auto rows = (observed.rowwise().sum().array() > 0.0).count();
  const auto cols = (observed.colwise().sum().array() > 0.0).count();
  return static_cast<int>(std::max<Eigen::Index>(rows - 1, 0) * std::max<Eigen::Index>(cols - 1, 0));
}

double fisher_score_impl(const Vector& feature, const LabelVector& labels, int n_classes) {
  if (feature.size() != labels.size()) throw_length_mismatch();
  const Vector counts = class_histogram(labels, n_classes);
  if ((counts.array() > 0.0).count() < 2) {
    throw Error(Errc::SingleClass, "Fisher score needs at least two classes present");
  }
  // Work relative to the first value so constant groups stay exactly constant.
  const double shift = feature(0);
  Vector sums = Vector::Zero(n_classes);
  Vector lo = Vector::Constant(n_classes, std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(n_classes, -std::numeric_limits<double>::infinity());
  double total = 0.0;
  for (Eigen::Index i = 0; i < feature.size(); ++i) {
    const int c = labels(i);
    const double d = feature(i) - shift;
    sums(c) += d;
    total += d;
    lo(c) = std::min(lo(c), feature(i));
    hi(c) = std::max(hi(c), feature(i));
  }
  Vector means(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    if (counts(c) == 0.0) continue;
    means(c) = lo(c) == hi(c) ? lo(c) - shift : sums(c) / counts(c);
  }
  const double mean = total / static_cast<double>(feature.size());

  double between = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    if (counts(c) > 0.0) between += counts(c) * (means(c) - mean) * (means(c) - mean);
  }
  double within = 0.0;
  for (Eigen::Index i = 0; i < feature.size(); ++i) {
    const int c = labels(i);
    if (lo(c) == hi(c)) continue;
    const double d = feature(i) - shift - means(c);
    within += d * d;
  }
  if (within == 0.0) return between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return between / within;
}

std::vector<FeatureScore> rank_features(const Dataset& d, ScoreMethod method, int n_bins) {
  if (d.has_missing()) throw Error(Errc::MaskedData, "rank_features needs imputed data");
  const int k = d.taxonomy.size();
  std::vector<FeatureScore> scores(static_cast<std::size_t>(d.n_features()));
  parallel_for(scores.size(), [&](std::size_t j) {
    const auto col = d.features.col(static_cast<Eigen::Index>(j));
    double score = 0.0;
    switch (method) {
      case ScoreMethod::Fisher:
        score = fisher_score(col, d.labels, k);
        break;
      case ScoreMethod::InfoGain:
        score = information_gain(col, d.labels, k, equal_frequency_bins(col, n_bins));
        break;
      case ScoreMethod::ChiSquare:
        score = chi_square_stat(col, d.labels, k, equal_frequency_bins(col, n_bins));
        break;
    }
    scores[j] = FeatureScore{static_cast<int>(j), d.feature_names[j], score, method};
  });
  std::stable_sort(scores.begin(), scores.end(),
                   [](const FeatureScore& a, const FeatureScore& b) { return a.score > b.score; });
  return scores;
}

std::vector<int> select_top_k(const std::vector<FeatureScore>& ranking, int k) {
  if (k < 1 || k > static_cast<int>(ranking.size())) {
    throw Error(Errc::OutOfRange, "k=" + std::to_string(k) + " outside [1, " +
                                      std::to_string(ranking.size()) + "]");
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(ranking[static_cast<std::size_t>(i)].feature_index);
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string ranking_csv(const std::vector<FeatureScore>& ranking) {
  std::ostringstream out;
  out << "rank,feature_name,method,score\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& s = ranking[i];
    out << (i + 1) << ',' << csv_field(s.feature_name) << ',' << to_string(s.method) << ','
        << (std::isinf(s.score) ? std::string("inf") : detail::format_real(s.score)) << '\n';
  }
  return out.str();
}

}  // namespace dtc
