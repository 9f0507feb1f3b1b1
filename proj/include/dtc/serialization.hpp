#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dtc/data.hpp"
#include "dtc/error.hpp"
#include "dtc/learners.hpp"

namespace dtc {

using Json = nlohmann::json;

/// Version tag written into every model and pipeline document.
inline constexpr int kFormatVersion = 1;

Json taxonomy_to_json(const ClassTaxonomy& taxonomy);
ClassTaxonomy taxonomy_from_json(const Json& j);

Json tree_params_to_json(const TreeParams& p);
/// Missing keys keep their defaults.
TreeParams tree_params_from_json(const Json& j, TreeParams defaults = {});

Json learner_spec_to_json(const LearnerSpec& spec);
LearnerSpec learner_spec_from_json(const Json& j);

Json normalization_to_json(const NormalizationParams& p);
NormalizationParams normalization_from_json(const Json& j);

Json tree_to_json(const Tree& tree);
Tree tree_from_json(const Json& j, int n_classes);

Json model_to_json(const TrainedModel& m);
TrainedModel model_from_json(const Json& j);

void save_model(const TrainedModel& m, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// Parses a document; syntax errors and truncation become SchemaError.
Json parse_json_text(const std::string& text, const std::string& source);
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Runs fn and turns nlohmann type/key errors into SchemaError.
template <typename Fn>
auto with_schema_errors(const std::string& source, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Schema, source + ": " + e.what());
  }
}

}  // namespace dtc
