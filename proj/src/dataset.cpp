#include <cmath>
#include <set>

#include "dtc/data.hpp"
#include "dtc/error.hpp"
#include "strings.hpp"

namespace dtc {

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::StageI: return "stage1";
    case Stage::StageII: return "stage2";
    case Stage::StageIII: return "stage3";
    case Stage::Custom: return "custom";
  }
  return "custom";
}

std::optional<Stage> parse_stage(std::string_view text) {
  const auto t = detail::lower(detail::trim(text));
  if (t == "1" || t == "i" || t == "stage1" || t == "stagei" || t == "dtc1") return Stage::StageI;
  if (t == "2" || t == "ii" || t == "stage2" || t == "stageii" || t == "dtc2") return Stage::StageII;
  if (t == "3" || t == "iii" || t == "stage3" || t == "stageiii" || t == "dtc3") return Stage::StageIII;
  if (t == "custom") return Stage::Custom;
  return std::nullopt;
}

int stage_index(Stage stage) {
  switch (stage) {
    case Stage::StageI: return 0;
    case Stage::StageII: return 1;
    case Stage::StageIII: return 2;
    case Stage::Custom: break;
  }
  throw Error(Errc::SpecMismatch, "custom taxonomy is not one of the three DTC stages");
}

ClassTaxonomy::ClassTaxonomy(Stage stage, std::vector<std::string> names)
    : stage_(stage), names_(std::move(names)) {
  if (names_.empty()) throw Error(Errc::Config, "taxonomy needs at least one class");
  std::set<std::string> folded;
  for (const auto& n : names_) {
    if (!folded.insert(detail::lower(n)).second) {
      throw Error(Errc::Config, "duplicate class name '" + n + "' in taxonomy");
    }
  }
}

ClassTaxonomy ClassTaxonomy::stage_one() { return {Stage::StageI, {"Benign", "Malicious"}}; }

ClassTaxonomy ClassTaxonomy::stage_two() {
  return {Stage::StageII, {"Tor", "Non-Tor", "VPN", "Non-VPN"}};
}

ClassTaxonomy ClassTaxonomy::stage_three() {
  return {Stage::StageIII,
          {"File transfer", "Audio stream", "P2P", "Browsing", "Video stream", "Chat", "Email",
           "VoIP"}};
}

ClassTaxonomy ClassTaxonomy::for_stage(Stage stage) {
  switch (stage) {
    case Stage::StageI: return stage_one();
    case Stage::StageII: return stage_two();
    case Stage::StageIII: return stage_three();
    case Stage::Custom: break;
  }
  throw Error(Errc::Config, "custom taxonomies need explicit class names");
}

ClassTaxonomy ClassTaxonomy::custom(std::vector<std::string> names) {
  return {Stage::Custom, std::move(names)};
}

const std::string& ClassTaxonomy::name(int index) const {
  if (index < 0 || index >= size()) {
    throw Error(Errc::IndexOutOfRange, "class index " + std::to_string(index) + " outside taxonomy");
  }
  return names_[static_cast<std::size_t>(index)];
}

std::optional<int> ClassTaxonomy::find(std::string_view name) const {
  const auto wanted = detail::trim(name);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (detail::iequals(names_[i], wanted)) return static_cast<int>(i);
  }
  return std::nullopt;
}

const std::vector<std::string>& default_missing_tokens() {
  static const std::vector<std::string> tokens{"NaN", "Infinity", "-Infinity", "inf", ""};
  return tokens;
}

Dataset make_dataset(Matrix features, LabelVector labels, ClassTaxonomy taxonomy,
                     std::vector<std::string> feature_names) {
  if (features.rows() != labels.size()) {
    throw Error(Errc::LengthMismatch, "feature rows and label count differ");
  }
  if (feature_names.empty()) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) feature_names.push_back("f" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(feature_names.size()) != features.cols()) {
    throw Error(Errc::LengthMismatch, "feature name count differs from column count");
  }
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) < 0 || labels(i) >= taxonomy.size()) {
      throw Error(Errc::IndexOutOfRange, "label index outside taxonomy at row " + std::to_string(i));
    }
  }
  Dataset d;
  d.missing_mask = MissingMask::Constant(features.rows(), features.cols(), false);
  d.features = std::move(features);
  d.labels = std::move(labels);
  d.taxonomy = std::move(taxonomy);
  d.feature_names = std::move(feature_names);
  return d;
}

namespace {

bool is_missing_token(std::string_view cell, const std::vector<std::string>& tokens) {
  const auto t = detail::trim(cell);
  for (const auto& token : tokens) {
    if (detail::iequals(t, token)) return true;
  }
  return false;
}

}  // namespace

std::optional<int> resolve_label(std::string_view raw, const ClassTaxonomy& taxonomy,
                                 const LabelAliases& aliases) {
  const auto cell = detail::trim(raw);
  for (const auto& [from, to] : aliases) {
    if (detail::iequals(detail::trim(from), cell)) return taxonomy.find(to);
  }
  return taxonomy.find(cell);
}

Dataset to_dataset(const RawTable& table, const std::vector<std::string>& feature_columns,
                   const std::string& label_column, const ClassTaxonomy& taxonomy,
                   const LabelAliases& label_aliases,
                   const std::vector<std::string>& missing_tokens) {
  auto require = [&](const std::string& name) {
    const auto idx = table.column(name);
    if (!idx) throw Error(Errc::UnknownColumn, "column '" + name + "' not in " + table.source_path);
    return *idx;
  };
  std::vector<int> cols;
  cols.reserve(feature_columns.size());
  for (const auto& name : feature_columns) cols.push_back(require(name));
  const int label_col = require(label_column);

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto f = static_cast<Eigen::Index>(cols.size());
  Dataset d;
  d.features = Matrix::Zero(n, f);
  d.missing_mask = MissingMask::Constant(n, f, false);
  d.labels.resize(n);
  d.taxonomy = taxonomy;
  for (const auto& name : feature_columns) d.feature_names.emplace_back(detail::trim(name));

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    // data rows are 1-based and follow the header line
    const auto row_number = std::to_string(i + 2);
    for (Eigen::Index j = 0; j < f; ++j) {
      const auto& cell = row[static_cast<std::size_t>(cols[static_cast<std::size_t>(j)])];
      if (is_missing_token(cell, missing_tokens)) {
        d.missing_mask(i, j) = true;
        continue;
      }
      const auto value = detail::parse_double(cell);
      if (!value) {
        throw Error(Errc::NonNumericCell, "row " + row_number + ", column '" +
                                              d.feature_names[static_cast<std::size_t>(j)] +
                                              "': '" + cell + "'");
      }
      if (!std::isfinite(*value)) {
        d.missing_mask(i, j) = true;
      } else {
        d.features(i, j) = *value;
      }
    }
    const auto& raw_label = row[static_cast<std::size_t>(label_col)];
    const auto label = resolve_label(raw_label, taxonomy, label_aliases);
    if (!label) {
      throw Error(Errc::UnknownLabel, "row " + row_number + ": '" + raw_label +
                                          "' is not a class of " +
                                          std::string(to_string(taxonomy.stage())));
    }
    d.labels(i) = *label;
  }
  if (n == 0) throw Error(Errc::EmptyDataset, table.source_path + " has no data rows");
  return d;
}

std::vector<std::string> numeric_columns(const RawTable& table,
                                         const std::vector<std::string>& exclude,
                                         const std::vector<std::string>& missing_tokens) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    const auto& name = table.header[j];
    if (std::find(exclude.begin(), exclude.end(), name) != exclude.end()) continue;
    bool numeric = true;
    for (const auto& row : table.rows) {
      if (!is_missing_token(row[j], missing_tokens) && !detail::parse_double(row[j])) {
        numeric = false;
        break;
      }
    }
    if (numeric) out.push_back(name);
  }
  return out;
}

std::vector<std::string> decode_labels(const Dataset& d) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(d.labels.size()));
  for (const int label : d.labels) out.push_back(d.taxonomy.name(label));
  return out;
}

Dataset subset_rows(const Dataset& d, std::span<const int> rows) {
  Dataset out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.features.resize(n, d.n_features());
  out.missing_mask.resize(n, d.n_features());
  out.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int r = rows[static_cast<std::size_t>(i)];
    if (r < 0 || r >= d.n_samples()) throw Error(Errc::IndexOutOfRange, "row index " + std::to_string(r));
    out.features.row(i) = d.features.row(r);
    out.missing_mask.row(i) = d.missing_mask.row(r);
    out.labels(i) = d.labels(r);
  }
  out.feature_names = d.feature_names;
  out.taxonomy = d.taxonomy;
  return out;
}

Dataset select_features(const Dataset& d, std::span<const int> columns) {
  Dataset out;
  const auto f = static_cast<Eigen::Index>(columns.size());
  out.features.resize(d.n_samples(), f);
  out.missing_mask.resize(d.n_samples(), f);
  for (Eigen::Index j = 0; j < f; ++j) {
    const int c = columns[static_cast<std::size_t>(j)];
    if (c < 0 || c >= d.n_features()) {
      throw Error(Errc::IndexOutOfRange, "feature index " + std::to_string(c));
    }
    out.features.col(j) = d.features.col(c);
    out.missing_mask.col(j) = d.missing_mask.col(c);
    out.feature_names.push_back(d.feature_names[static_cast<std::size_t>(c)]);
  }
  out.labels = d.labels;
  out.taxonomy = d.taxonomy;
  return out;
}

}  // namespace dtc
