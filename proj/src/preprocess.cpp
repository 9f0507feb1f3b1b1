#include <algorithm>
#include <cmath>

#include "dtc/data.hpp"
#include "dtc/error.hpp"
#include "strings.hpp"

namespace dtc {

namespace {

double median_of(std::vector<double>& values) {
  const auto n = values.size();
  const auto mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

void require_unmasked(const Dataset& d, const char* what) {
  if (d.has_missing()) {
    throw Error(Errc::MaskedData, std::string(what) + " needs imputed data; missing cells remain");
  }
}

}  // namespace

ImputationParams fit_imputer(const Dataset& d) {
  ImputationParams params;
  params.fill_values = Vector::Zero(d.n_features());
  std::vector<double> present;
  for (Eigen::Index j = 0; j < d.n_features(); ++j) {
    present.clear();
    for (Eigen::Index i = 0; i < d.n_samples(); ++i) {
      if (!d.missing_mask(i, j)) present.push_back(d.features(i, j));
    }
    if (!present.empty()) params.fill_values(j) = median_of(present);
  }
  return params;
}

Dataset apply_imputer(const Dataset& d, const ImputationParams& params) {
  if (params.fill_values.size() != d.n_features()) {
    throw Error(Errc::ShapeMismatch, "imputer fitted on " + std::to_string(params.fill_values.size()) +
                                         " features, data has " + std::to_string(d.n_features()));
  }
  Dataset out = d;
  for (Eigen::Index j = 0; j < d.n_features(); ++j) {
    for (Eigen::Index i = 0; i < d.n_samples(); ++i) {
      if (d.missing_mask(i, j)) out.features(i, j) = params.fill_values(j);
    }
  }
  out.missing_mask.setConstant(false);
  return out;
}

Dataset impute_missing(const Dataset& d, ImputeStrategy strategy) {
  if (!d.has_missing()) return d;
  if (strategy == ImputeStrategy::MedianPerFeature) return apply_imputer(d, fit_imputer(d));

  IndexList keep;
  for (Eigen::Index i = 0; i < d.n_samples(); ++i) {
    if (!d.missing_mask.row(i).any()) keep.push_back(static_cast<int>(i));
  }
  if (keep.empty()) throw Error(Errc::EmptyDataset, "every row has a missing cell");
  return subset_rows(d, keep);
}

Eigen::VectorXi missing_counts(const Dataset& d) {
  return d.missing_mask.cast<int>().colwise().sum().transpose();
}

std::string_view to_string(NormMethod method) noexcept {
  return method == NormMethod::MinMax ? "minmax" : "zscore";
}

std::optional<NormMethod> parse_norm_method(std::string_view text) {
  const auto t = detail::lower(detail::trim(text));
  if (t == "minmax" || t == "min-max" || t == "min_max") return NormMethod::MinMax;
  if (t == "zscore" || t == "z-score" || t == "z_score" || t == "standard") return NormMethod::ZScore;
  return std::nullopt;
}

NormalizationParams fit_normalizer(const Dataset& d, NormMethod method) {
  require_unmasked(d, "fit_normalizer");
  if (d.n_samples() == 0) throw Error(Errc::EmptyDataset, "cannot fit a normalizer on zero rows");
  NormalizationParams p;
  p.method = method;
  const auto& x = d.features;
  if (method == NormMethod::MinMax) {
    p.a = x.colwise().minCoeff().transpose();
    p.b = x.colwise().maxCoeff().transpose();
  } else {
    p.a = x.colwise().mean().transpose();
    const auto n = static_cast<double>(x.rows());
    p.b = ((x.rowwise() - p.a.transpose()).array().square().colwise().sum() / n).sqrt().transpose();
  }
  return p;
}

Matrix apply_normalizer(const Eigen::Ref<const Matrix>& x, const NormalizationParams& p) {
  if (p.a.size() != x.cols()) {
    throw Error(Errc::ShapeMismatch, "normalizer fitted on " + std::to_string(p.a.size()) +
                                         " features, data has " + std::to_string(x.cols()));
  }
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double scale = p.method == NormMethod::MinMax ? p.b(j) - p.a(j) : p.b(j);
    // constant features collapse to zero
    if (scale > 0.0) {
      out.col(j) = (x.col(j).array() - p.a(j)) / scale;
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

Dataset apply_normalizer(const Dataset& d, const NormalizationParams& p) {
  require_unmasked(d, "apply_normalizer");
  Dataset out = d;
  out.features = apply_normalizer(d.features, p);
  return out;
}

}  // namespace dtc
