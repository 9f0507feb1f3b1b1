#include "dtc/schema.hpp"

#include <algorithm>
#include <map>

#include "dtc/error.hpp"
#include "strings.hpp"

namespace dtc {

namespace {

constexpr std::string_view kLabelPrefix = "dtc_label_";

std::string stage_key(std::size_t s) { return "stage" + std::to_string(s + 1); }

std::string_view impute_name(PrepImpute m) {
  switch (m) {
    case PrepImpute::Median: return "median";
    case PrepImpute::DropRow: return "drop_row";
    case PrepImpute::None: return "none";
  }
  return "median";
}

}  // namespace

SchemaConfig schema_from_json(const Json& j) {
  try {
    if (!j.is_object()) throw Error(Errc::Config, "schema must be a JSON object");
    SchemaConfig s;
    if (j.contains("delimiter")) {
      const auto d = j.at("delimiter").get<std::string>();
      if (d.size() != 1) throw Error(Errc::Config, "delimiter must be a single character");
      s.delimiter = d[0];
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      if (f.is_string()) {
        if (f.get<std::string>() != "all_numeric") {
          throw Error(Errc::Config, "features must be \"all_numeric\" or a list of column names");
        }
      } else {
        s.features = f.get<std::vector<std::string>>();
        if (s.features->empty()) throw Error(Errc::Config, "feature list is empty");
      }
    }
    if (j.contains("stages")) {
      for (const auto& [key, value] : j.at("stages").items()) {
        const auto stage = parse_stage(key);
        if (!stage || *stage == Stage::Custom) throw Error(Errc::Config, "unknown stage key '" + key + "'");
        StageColumn col;
        col.label_column = value.at("label_column").get<std::string>();
        if (value.contains("aliases")) col.aliases = value.at("aliases").get<LabelAliases>();
        s.stages[static_cast<std::size_t>(stage_index(*stage))] = std::move(col);
      }
    }
    if (j.contains("missing_tokens")) s.missing_tokens = j.at("missing_tokens").get<std::vector<std::string>>();
    if (j.contains("impute")) {
      const auto text = detail::lower(j.at("impute").get<std::string>());
      if (text == "median") s.impute = PrepImpute::Median;
      else if (text == "drop_row") s.impute = PrepImpute::DropRow;
      else if (text == "none") s.impute = PrepImpute::None;
      else throw Error(Errc::Config, "unknown impute strategy '" + text + "' (valid: median, drop_row, none)");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Config, std::string("schema: ") + e.what());
  }
}

Json schema_to_json(const SchemaConfig& s) {
  Json stages = Json::object();
  for (std::size_t i = 0; i < 3; ++i) {
    if (!s.stages[i]) continue;
    stages[stage_key(i)] = Json{{"label_column", s.stages[i]->label_column}, {"aliases", s.stages[i]->aliases}};
  }
  return Json{{"delimiter", std::string(1, s.delimiter)},
              {"features", s.features ? Json(*s.features) : Json("all_numeric")},
              {"stages", stages},
              {"missing_tokens", s.missing_tokens},
              {"impute", impute_name(s.impute)}};
}

SchemaConfig load_schema(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::Config, "schema file not found: " + path.string());
  try {
    return schema_from_json(read_json_file(path));
  } catch (const Error& e) {
    if (e.code() == Errc::Schema || e.code() == Errc::Io) throw Error(Errc::Config, e.what());
    throw;
  }
}

std::string prepared_label_column(Stage stage) {
  return std::string(kLabelPrefix) + std::string(to_string(stage));
}

Dataset PreparedData::stage_dataset(Stage stage) const {
  const auto s = static_cast<std::size_t>(stage_index(stage));
  if (!labels[s]) throw Error(Errc::Config, "no labels configured for " + std::string(to_string(stage)));
  Dataset d;
  d.features = features;
  d.missing_mask = missing_mask;
  d.feature_names = feature_names;
  d.labels = *labels[s];
  d.taxonomy = ClassTaxonomy::for_stage(stage);
  return d;
}

namespace {

LabelVector encode_column(const RawTable& table, const std::string& column, const ClassTaxonomy& taxonomy,
                          const LabelAliases& aliases) {
  const auto col = table.column(column);
  if (!col) throw Error(Errc::UnknownColumn, "label column '" + column + "' not in " + table.source_path);
  LabelVector y(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& cell = table.rows[i][static_cast<std::size_t>(*col)];
    const auto idx = resolve_label(cell, taxonomy, aliases);
    if (!idx) {
      throw Error(Errc::UnknownLabel, table.source_path + " row " + std::to_string(i + 2) + ": label '" + cell +
                                          "' is not a " + std::string(to_string(taxonomy.stage())) + " class");
    }
    y(static_cast<Eigen::Index>(i)) = *idx;
  }
  return y;
}

}  // namespace

PreparedData prepare(const RawTable& table, const SchemaConfig& schema) {
  std::vector<std::string> label_columns;
  for (const auto& st : schema.stages) {
    if (st) label_columns.push_back(st->label_column);
  }
  if (label_columns.empty()) throw Error(Errc::Config, "schema configures no stage label columns");
  for (const auto& name : table.header) {
    if (name.rfind(kLabelPrefix, 0) == 0) label_columns.push_back(name);
  }

  const auto features =
      schema.features ? *schema.features : numeric_columns(table, label_columns, schema.missing_tokens);
  if (features.empty()) throw Error(Errc::Config, "no numeric feature columns in " + table.source_path);

  PreparedData p;
  p.rows_in = table.rows.size();
  std::size_t first = 0;
  while (!schema.stages[first]) ++first;
  const auto& st0 = *schema.stages[first];
  const Dataset base = to_dataset(table, features, st0.label_column, ClassTaxonomy::for_stage(static_cast<Stage>(first)),
                                  st0.aliases, schema.missing_tokens);
  for (std::size_t s = 0; s < 3; ++s) {
    if (!schema.stages[s]) continue;
    p.labels[s] = s == first ? base.labels
                             : encode_column(table, schema.stages[s]->label_column,
                                             ClassTaxonomy::for_stage(static_cast<Stage>(s)),
                                             schema.stages[s]->aliases);
  }
  p.feature_names = base.feature_names;
  p.imputed_counts = Eigen::VectorXi::Zero(base.n_features());

  switch (schema.impute) {
    case PrepImpute::None:
      p.features = base.features;
      p.missing_mask = base.missing_mask;
      break;
    case PrepImpute::Median: {
      p.imputed_counts = missing_counts(base);
      const Dataset imputed = impute_missing(base, ImputeStrategy::MedianPerFeature);
      p.features = imputed.features;
      p.missing_mask = imputed.missing_mask;
      break;
    }
    case PrepImpute::DropRow: {
      std::vector<int> keep;
      for (Eigen::Index i = 0; i < base.n_samples(); ++i) {
        if (!base.missing_mask.row(i).any()) keep.push_back(static_cast<int>(i));
      }
      if (keep.empty()) throw Error(Errc::EmptyDataset, "every row of " + table.source_path + " has a missing cell");
      p.features = base.features(keep, Eigen::all);
      p.missing_mask = MissingMask::Constant(static_cast<Eigen::Index>(keep.size()), base.n_features(), false);
      for (auto& y : p.labels) {
        if (y) y = LabelVector((*y)(keep));
      }
      p.dropped_rows = table.rows.size() - keep.size();
      break;
    }
  }
  return p;
}

std::string prepared_to_csv(const PreparedData& p) {
  std::string out;
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (const char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  for (std::size_t c = 0; c < p.feature_names.size(); ++c) out += (c ? "," : "") + field(p.feature_names[c]);
  for (std::size_t s = 0; s < 3; ++s) {
    if (p.labels[s]) out += "," + prepared_label_column(static_cast<Stage>(s));
  }
  out += '\n';
  std::array<ClassTaxonomy, 3> tax{ClassTaxonomy::stage_one(), ClassTaxonomy::stage_two(),
                                   ClassTaxonomy::stage_three()};
  for (Eigen::Index i = 0; i < p.features.rows(); ++i) {
    for (Eigen::Index c = 0; c < p.features.cols(); ++c) {
      if (c) out += ',';
      if (!p.missing_mask(i, c)) out += detail::format_real(p.features(i, c));
    }
    for (std::size_t s = 0; s < 3; ++s) {
      if (p.labels[s]) out += "," + field(tax[s].name((*p.labels[s])(i)));
    }
    out += '\n';
  }
  return out;
}

Json prep_manifest(const PreparedData& p, const std::string& source) {
  Json imputed = Json::object();
  for (std::size_t c = 0; c < p.feature_names.size(); ++c) {
    imputed[p.feature_names[c]] = p.imputed_counts(static_cast<Eigen::Index>(c));
  }
  Json histograms = Json::object();
  for (std::size_t s = 0; s < 3; ++s) {
    if (!p.labels[s]) continue;
    const auto tax = ClassTaxonomy::for_stage(static_cast<Stage>(s));
    std::vector<std::int64_t> counts(static_cast<std::size_t>(tax.size()), 0);
    for (Eigen::Index i = 0; i < p.labels[s]->size(); ++i) ++counts[static_cast<std::size_t>((*p.labels[s])(i))];
    Json h = Json::object();
    for (int k = 0; k < tax.size(); ++k) h[tax.name(k)] = counts[static_cast<std::size_t>(k)];
    histograms[stage_key(s)] = h;
  }
  return Json{{"source", source},
              {"rows_in", p.rows_in},
              {"rows", p.features.rows()},
              {"dropped_rows", p.dropped_rows},
              {"columns", p.features.cols()},
              {"feature_names", p.feature_names},
              {"imputed_cells", imputed},
              {"label_histogram", histograms}};
}

PreparedData load_prepared(const std::filesystem::path& path, const SchemaConfig* schema) {
  CsvOptions opts;
  if (schema) opts.delimiter = schema->delimiter;
  const RawTable table = load_flow_csv(path, opts);

  bool prepared = false;
  for (const auto& h : table.header) prepared = prepared || h.rfind(kLabelPrefix, 0) == 0;
  if (!prepared) {
    if (!schema) {
      throw Error(Errc::Config, path.string() + " has no dtc_label_* columns; pass a schema with --config");
    }
    SchemaConfig raw = *schema;
    raw.impute = PrepImpute::None;
    return prepare(table, raw);
  }

  SchemaConfig own;
  own.impute = PrepImpute::None;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto col = prepared_label_column(static_cast<Stage>(s));
    if (table.column(col)) own.stages[s] = StageColumn{col, {}};
  }
  std::vector<std::string> features;
  for (const auto& h : table.header) {
    if (h.rfind(kLabelPrefix, 0) != 0) features.push_back(h);
  }
  own.features = features;
  return prepare(table, own);
}

Dataset load_stage_dataset(const std::filesystem::path& path, Stage stage, const SchemaConfig* schema) {
  return load_prepared(path, schema).stage_dataset(stage);
}

}  // namespace dtc
