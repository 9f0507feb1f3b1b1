// dtc: command-line front end for the darknet traffic classifier toolkit.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dtc/error.hpp"
#include "dtc/evaluation.hpp"
#include "dtc/feature_selection.hpp"
#include "dtc/parallel.hpp"
#include "dtc/pipeline.hpp"
#include "dtc/schema.hpp"
#include "dtc/serialization.hpp"
#include "dtc/synthetic.hpp"

namespace fs = std::filesystem;
using namespace dtc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::Config:
    case Errc::UnknownColumn:
    case Errc::SpecMismatch:
    case Errc::KTooLarge:
    case Errc::OutOfRange:
      return kExitConfig;
    case Errc::WeakLearnerTooWeak:
    case Errc::NoUsableRound:
    case Errc::SingleClass:
    case Errc::EmptyNode:
      return kExitNumeric;
    default:
      return kExitInput;
  }
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

// Files written by the running command; removed again if it fails.
class Outputs {
 public:
  void set_dir(fs::path dir) { dir_ = std::move(dir); }
  const fs::path& dir() const { return dir_; }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path path = dir_ / name;
    for (fs::path p = path.parent_path(); !p.empty() && !fs::exists(p); p = p.parent_path()) {
      created_dirs_.push_back(p);
    }
    written_.push_back(path);
    write_text_file(path, text);
    std::cout << "wrote " << path.string() << '\n';
    return path;
  }

  void rollback() noexcept {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
    for (const auto& d : created_dirs_) {
      if (fs::is_directory(d, ec) && fs::is_empty(d, ec)) fs::remove(d, ec);
    }
    written_.clear();
    created_dirs_.clear();
  }

 private:
  fs::path dir_ = ".";
  std::vector<fs::path> written_;
  std::vector<fs::path> created_dirs_;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::string threads;
};

struct Context {
  Globals g;
  Json cfg = Json::object();
  fs::path cfg_dir = ".";
  Outputs outputs;
  ReportFormat format = ReportFormat::Csv;

  std::uint64_t seed() const {
    if (g.seed) return *g.seed;
    if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
    throw Error(Errc::Config, "--seed is required for this command (no clock-based default)");
  }

  // Flag value wins; otherwise a config path, resolved against the config file's directory.
  std::string path(const std::string& flag_value, const std::string& key) const {
    if (!flag_value.empty()) return flag_value;
    if (cfg.contains(key) && cfg.at(key).is_string()) {
      fs::path p = cfg.at(key).get<std::string>();
      return p.is_absolute() ? p.string() : (cfg_dir / p).lexically_normal().string();
    }
    return {};
  }

  std::string ext() const {
    switch (format) {
      case ReportFormat::Csv: return ".csv";
      case ReportFormat::Json: return ".json";
      case ReportFormat::Text: return ".txt";
    }
    return ".csv";
  }
};

void load_globals(Context& ctx) {
  if (!ctx.g.config.empty()) {
    const fs::path p = ctx.g.config;
    if (!fs::exists(p)) throw Error(Errc::Config, "config file not found: " + p.string());
    try {
      ctx.cfg = read_json_file(p);
    } catch (const Error& e) {
      throw Error(Errc::Config, e.what());
    }
    if (!ctx.cfg.is_object()) throw Error(Errc::Config, "config " + p.string() + " must be a JSON object");
    ctx.cfg_dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  }
  std::string out = ctx.path(ctx.g.out, "out");
  ctx.outputs.set_dir(out.empty() ? fs::path(".") : fs::path(out));

  std::string format = ctx.g.format;
  if (format.empty() && ctx.cfg.contains("format")) format = ctx.cfg.at("format").get<std::string>();
  if (format.empty()) format = "csv";
  const auto f = parse_report_format(format);
  if (!f) throw Error(Errc::Config, "unknown format '" + format + "' (valid: csv, json, text)");
  ctx.format = *f;

  std::string threads = ctx.g.threads;
  if (threads.empty() && ctx.cfg.contains("threads")) {
    const auto& t = ctx.cfg.at("threads");
    threads = t.is_string() ? t.get<std::string>() : std::to_string(t.get<int>());
  }
  if (threads.empty()) threads = "1";
  if (threads == "auto") {
    set_thread_count(0);
  } else {
    try {
      std::size_t used = 0;
      const int n = std::stoi(threads, &used);
      if (used != threads.size() || n < 1) throw std::invalid_argument("bad");
      set_thread_count(n);
    } catch (const std::exception&) {
      throw Error(Errc::Config, "--threads must be a positive integer or 'auto', got '" + threads + "'");
    }
  }
}

std::optional<SchemaConfig> schema_for(const Context& ctx, const std::string& flag) {
  const auto p = ctx.path(flag, "schema");
  if (!p.empty()) return load_schema(p);
  if (ctx.cfg.contains("schema") && ctx.cfg.at("schema").is_object()) return schema_from_json(ctx.cfg.at("schema"));
  return std::nullopt;
}

std::string require_path(const Context& ctx, const std::string& flag, const std::string& key, const char* what) {
  const auto p = ctx.path(flag, key);
  if (p.empty()) throw Error(Errc::Config, std::string("no ") + what + " given (flag or config key '" + key + "')");
  return p;
}

Stage parse_stage_arg(const std::string& text) {
  const auto s = parse_stage(text);
  if (!s || *s == Stage::Custom) throw Error(Errc::Config, "unknown stage '" + text + "' (valid: stage1, stage2, stage3)");
  return *s;
}

// Per-stage spec from config "stages.stageN", overlaid by flags.
struct SpecFlags {
  std::string learner;
  std::string select;
  int k = -1;
  int bins = -1;
  std::string norm;
};

StageSpec stage_spec_for(const Context& ctx, Stage stage, const SpecFlags& flags) {
  Json j = Json::object();
  const auto key = std::string(to_string(stage));
  if (ctx.cfg.contains("stages") && ctx.cfg.at("stages").contains(key)) j = ctx.cfg.at("stages").at(key);
  j["stage"] = key;
  StageSpec spec;
  try {
    spec = stage_spec_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Config, "stage spec " + key + ": " + e.what());
  }
  if (!flags.learner.empty()) {
    const auto kind = parse_learner_kind(flags.learner);
    if (!kind) {
      throw Error(Errc::Config, "unknown learner '" + flags.learner +
                                    "' (valid: decision_tree, random_forest, adaboost, gradient_boosting, naive_bayes, knn)");
    }
    spec.learner.kind = *kind;
  }
  if (!flags.select.empty()) {
    if (flags.select == "all") {
      spec.selection.method.reset();
    } else {
      const auto m = parse_score_method(flags.select);
      if (!m) throw Error(Errc::Config, "unknown selection method '" + flags.select + "' (valid: infogain, fisher, chisquare, all)");
      spec.selection.method = m;
    }
  }
  if (flags.k >= 0) spec.selection.k = flags.k;
  if (flags.bins > 0) spec.selection.n_bins = flags.bins;
  if (!flags.norm.empty()) {
    const auto n = parse_norm_method(flags.norm);
    if (!n) throw Error(Errc::Config, "unknown normalization '" + flags.norm + "' (valid: minmax, zscore)");
    spec.normalization = *n;
  }
  if (spec.selection.method && spec.selection.k <= 0) {
    throw Error(Errc::Config, "feature selection with " + std::string(to_string(*spec.selection.method)) +
                                  " needs k >= 1 (use selection 'all' to keep every feature)");
  }
  return spec;
}

void add_spec_flags(CLI::App* cmd, SpecFlags& f) {
  cmd->add_option("--learner", f.learner,
                  "decision_tree | random_forest | adaboost | gradient_boosting | naive_bayes | knn");
  cmd->add_option("--select", f.select, "Feature scorer: infogain | fisher | chisquare | all");
  cmd->add_option("--k", f.k, "Number of top-ranked features to keep");
  cmd->add_option("--bins", f.bins, "Equal-frequency bins for infogain/chisquare");
  cmd->add_option("--norm", f.norm, "minmax | zscore");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json timing_json(const std::map<std::string, double>& t) {
  Json j = Json::object();
  for (const auto& [k, v] : t) j[k + "_ms"] = v;
  return j;
}

// ---------------------------------------------------------------------------

struct PrepArgs {
  std::string input;
  std::string schema;
};

void cmd_prep(Context& ctx, const PrepArgs& a) {
  const auto schema = schema_for(ctx, a.schema);
  if (!schema) throw Error(Errc::Config, "prep needs a schema (--schema or config key 'schema')");
  const auto input = require_path(ctx, a.input, "data", "input CSV");
  auto t = Clock::now();
  const RawTable table = load_flow_csv(input, CsvOptions{schema->delimiter});
  const double load_ms = ms_since(t);
  t = Clock::now();
  const PreparedData p = prepare(table, *schema);
  const double prep_ms = ms_since(t);
  ctx.outputs.write("prepared.csv", prepared_to_csv(p));
  Json manifest = prep_manifest(p, input);
  manifest["schema"] = schema_to_json(*schema);
  manifest["timing"] = timing_json({{"load", load_ms}, {"prepare", prep_ms}});
  ctx.outputs.write("prepared.manifest.json", dump(manifest));
}

struct RankArgs {
  std::string data;
  std::string schema;
  std::string stage = "stage1";
  std::string method = "infogain";
  int bins = 10;
};

void cmd_rank(Context& ctx, const RankArgs& a) {
  std::vector<ScoreMethod> methods;
  if (a.method == "all") {
    methods = {ScoreMethod::InfoGain, ScoreMethod::Fisher, ScoreMethod::ChiSquare};
  } else {
    const auto m = parse_score_method(a.method);
    if (!m) throw Error(Errc::Config, "unknown method '" + a.method + "' (valid: infogain, fisher, chisquare, all)");
    methods = {*m};
  }
  const Stage stage = parse_stage_arg(a.stage);
  const auto schema = schema_for(ctx, a.schema);
  const auto data = require_path(ctx, a.data, "data", "dataset");
  Dataset d = load_stage_dataset(data, stage, schema ? &*schema : nullptr);
  if (d.has_missing()) d = impute_missing(d, ImputeStrategy::MedianPerFeature);
  for (const auto m : methods) {
    const auto ranking = rank_features(d, m, a.bins);
    ctx.outputs.write("ranking_" + std::string(to_string(m)) + "_" + std::string(to_string(stage)) + ".csv",
                      ranking_csv(ranking));
  }
}

struct TrainArgs {
  std::string data;
  std::string schema;
  std::string stage = "stage1";
  SpecFlags spec;
};

Json artifact_document(const StageSpec& spec, const StageArtifact& art, const std::vector<std::string>& input_names) {
  return Json{{"format_version", kFormatVersion},
              {"document", "stage_model"},
              {"spec", stage_spec_to_json(spec)},
              {"input_features", input_names},
              {"artifact", stage_artifact_to_json(art)}};
}

struct LoadedStage {
  StageSpec spec;
  StageArtifact artifact;
  std::vector<std::string> input_features;
};

LoadedStage load_stage_document(const fs::path& path) {
  const Json j = read_json_file(path);
  return with_schema_errors(path.string(), [&] {
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error(Errc::VersionMismatch, path.string() + ": format_version " + std::to_string(version) +
                                             ", expected " + std::to_string(kFormatVersion));
    }
    if (j.at("document").get<std::string>() != "stage_model") {
      throw Error(Errc::Schema, path.string() + " is not a stage model document");
    }
    LoadedStage s;
    s.spec = stage_spec_from_json(j.at("spec"));
    s.artifact = stage_artifact_from_json(j.at("artifact"));
    s.input_features = j.at("input_features").get<std::vector<std::string>>();
    return s;
  });
}

void cmd_train(Context& ctx, const TrainArgs& a) {
  const Stage stage = parse_stage_arg(a.stage);
  const StageSpec spec = stage_spec_for(ctx, stage, a.spec);
  const auto seed = ctx.seed();
  const auto schema = schema_for(ctx, a.schema);
  const auto data = require_path(ctx, a.data, "data", "dataset");

  auto t = Clock::now();
  const Dataset d = load_stage_dataset(data, stage, schema ? &*schema : nullptr);
  const double load_ms = ms_since(t);
  StageTiming timing;
  const StageArtifact art = train_stage(d, spec, seed, &timing);
  t = Clock::now();
  const auto report = evaluate(d.labels, art.predict(d), d.taxonomy);
  const double eval_ms = ms_since(t);

  ctx.outputs.write("model.json", dump(artifact_document(spec, art, d.feature_names)));
  std::vector<std::string> selected;
  for (const int f : art.feature_indices) selected.push_back(d.feature_names[static_cast<std::size_t>(f)]);
  Json manifest{{"command", "train"},
                {"seed", seed},
                {"data", data},
                {"stage", to_string(stage)},
                {"hyperparameters", stage_spec_to_json(spec)},
                {"n_samples", d.n_samples()},
                {"n_features", d.n_features()},
                {"selected_features", selected},
                {"training_accuracy", report.accuracy},
                {"timing", timing_json({{"load", load_ms},
                                        {"preprocess", timing.preprocess_ms},
                                        {"select", timing.select_ms},
                                        {"train", timing.fit_ms},
                                        {"eval", eval_ms}})}};
  ctx.outputs.write("train.manifest.json", dump(manifest));
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string schema;
};

void cmd_eval(Context& ctx, const EvalArgs& a) {
  const auto model_path = require_path(ctx, a.model, "model", "model file");
  const auto schema = schema_for(ctx, a.schema);
  const auto data = require_path(ctx, a.data, "data", "dataset");
  auto t = Clock::now();
  const LoadedStage m = load_stage_document(model_path);
  const Dataset d = load_stage_dataset(data, m.artifact.stage, schema ? &*schema : nullptr);
  const double load_ms = ms_since(t);
  if (d.n_features() != static_cast<Eigen::Index>(m.input_features.size())) {
    throw Error(Errc::ShapeMismatch, "model expects " + std::to_string(m.input_features.size()) +
                                         " feature columns, " + data + " has " + std::to_string(d.n_features()));
  }
  if (d.feature_names != m.input_features) {
    throw Error(Errc::ColumnMismatch, "feature columns of " + data + " differ from the model's training columns");
  }
  t = Clock::now();
  const auto c = confusion_matrix(d.labels, m.artifact.predict(d), d.taxonomy);
  const auto report = metrics_from_confusion(c);
  const double eval_ms = ms_since(t);
  ctx.outputs.write("metrics" + ctx.ext(), emit_metrics(report, c, ctx.format));
  Json manifest{{"command", "eval"},
                {"model", model_path},
                {"data", data},
                {"stage", to_string(m.artifact.stage)},
                {"n_samples", d.n_samples()},
                {"accuracy", report.accuracy},
                {"timing", timing_json({{"load", load_ms}, {"eval", eval_ms}})}};
  ctx.outputs.write("eval.manifest.json", dump(manifest));
}

struct CvArgs {
  std::string data;
  std::string schema;
  std::string stage = "stage1";
  int folds = 0;
  SpecFlags spec;
};

void cmd_cv(Context& ctx, const CvArgs& a) {
  const Stage stage = parse_stage_arg(a.stage);
  const StageSpec spec = stage_spec_for(ctx, stage, a.spec);
  const auto seed = ctx.seed();
  int k = a.folds;
  if (k == 0) k = ctx.cfg.value("folds", 5);
  if (k < 2) throw Error(Errc::Config, "--folds must be at least 2");
  const auto schema = schema_for(ctx, a.schema);
  const auto data = require_path(ctx, a.data, "data", "dataset");
  auto t = Clock::now();
  const Dataset d = load_stage_dataset(data, stage, schema ? &*schema : nullptr);
  const double load_ms = ms_since(t);
  t = Clock::now();
  const CvResult r = cross_validate(d, spec, k, seed);
  const double cv_ms = ms_since(t);
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    const auto& fold = r.folds[f];
    const Dataset test_rows = subset_rows(d, fold.plan.test_indices);
    const auto c = confusion_matrix(test_rows.labels, fold.artifact.predict(test_rows), d.taxonomy);
    ctx.outputs.write("cv/fold_" + std::to_string(f + 1) + ctx.ext(), emit_metrics(fold.metrics, c, ctx.format));
  }
  Json summary = cv_summary_to_json(r);
  summary["stage"] = to_string(stage);
  summary["seed"] = seed;
  summary["hyperparameters"] = stage_spec_to_json(spec);
  ctx.outputs.write("cv/summary.json", dump(summary));
  Json manifest{{"command", "cv"}, {"seed", seed}, {"data", data}, {"folds", k},
                {"timing", timing_json({{"load", load_ms}, {"cross_validate", cv_ms}})}};
  ctx.outputs.write("cv.manifest.json", dump(manifest));
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineArgs {
  std::string data;
  std::string schema;
  std::string routing;
  std::string gate;
  SpecFlags spec;
  // eval only
  std::string pipeline;
  std::string learners;
  double test_fraction = -1.0;
};

Routing routing_for(const Context& ctx, const std::string& flag) {
  std::string text = flag;
  if (text.empty()) text = ctx.cfg.value("routing", std::string("cascade"));
  const auto r = parse_routing(text);
  if (!r) throw Error(Errc::Config, "unknown routing '" + text + "' (valid: independent, cascade)");
  return *r;
}

std::string gate_for(const Context& ctx, const std::string& flag) {
  return flag.empty() ? ctx.cfg.value("cascade_gate", std::string("Malicious")) : flag;
}

std::array<StageSpec, 3> specs_for(const Context& ctx, const SpecFlags& flags) {
  return {stage_spec_for(ctx, Stage::StageI, flags), stage_spec_for(ctx, Stage::StageII, flags),
          stage_spec_for(ctx, Stage::StageIII, flags)};
}

std::array<Dataset, 3> stage_datasets(const PreparedData& p) {
  return {p.stage_dataset(Stage::StageI), p.stage_dataset(Stage::StageII), p.stage_dataset(Stage::StageIII)};
}

void cmd_pipeline_train(Context& ctx, const PipelineArgs& a) {
  const auto specs = specs_for(ctx, a.spec);
  const auto routing = routing_for(ctx, a.routing);
  const auto gate = gate_for(ctx, a.gate);
  const auto seed = ctx.seed();
  const auto schema = schema_for(ctx, a.schema);
  const auto data = require_path(ctx, a.data, "data", "dataset");
  auto t = Clock::now();
  const PreparedData p = load_prepared(data, schema ? &*schema : nullptr);
  const auto datasets = stage_datasets(p);
  const double load_ms = ms_since(t);
  t = Clock::now();
  const PipelineModel model = train_pipeline(datasets, specs, routing, seed, gate);
  const double train_ms = ms_since(t);
  ctx.outputs.write("pipeline.json", dump(pipeline_to_json(model)));
  Json stages = Json::array();
  for (std::size_t s = 0; s < 3; ++s) stages.push_back(stage_spec_to_json(specs[s]));
  Json manifest{{"command", "pipeline train"}, {"seed", seed}, {"data", data}, {"routing", to_string(routing)},
                {"cascade_gate", model.cascade_gate}, {"n_samples", p.features.rows()}, {"hyperparameters", stages},
                {"timing", timing_json({{"load", load_ms}, {"train", train_ms}})}};
  ctx.outputs.write("pipeline.manifest.json", dump(manifest));
}

struct PipelineEvalResult {
  std::vector<ComparisonRow> independent;
  std::vector<ComparisonRow> cascade;
  Json paths = Json::object();
};

// Stage-wise metrics in both routing modes plus cascade path counts. In
// cascade mode stages II and III are scored on the rows the gate lets through.
void evaluate_pipeline(const PipelineModel& model, const std::array<Dataset, 3>& test, const std::string& name,
                       PipelineEvalResult& out) {
  // Each stage imputes with its own training medians.
  std::array<LabelVector, 3> pred;
  for (std::size_t s = 0; s < 3; ++s) pred[s] = model.stages[s].predict(test[s]);
  const std::size_t first = out.independent.size();
  for (std::size_t s = 0; s < 3; ++s) {
    out.independent.push_back(comparison_row(name, static_cast<Stage>(s), evaluate(test[s].labels, pred[s], test[s].taxonomy)));
  }

  const int gate = *model.stages[0].model.taxonomy.find(model.cascade_gate);
  std::vector<int> routed;
  for (Eigen::Index i = 0; i < pred[0].size(); ++i) {
    if (pred[0](i) == gate) routed.push_back(static_cast<int>(i));
  }
  out.cascade.push_back(out.independent[first]);
  for (std::size_t s = 1; s < 3; ++s) {
    ComparisonRow row;
    if (routed.empty()) {
      row = comparison_row(name, static_cast<Stage>(s), MetricsReport{});
    } else {
      const LabelVector y = test[s].labels(routed);
      const LabelVector p = pred[s](routed);
      row = comparison_row(name, static_cast<Stage>(s), evaluate(y, p, test[s].taxonomy));
    }
    out.cascade.push_back(row);
  }

  std::map<std::string, std::int64_t> counts;
  for (Eigen::Index i = 0; i < pred[0].size(); ++i) {
    RoutedPrediction r;
    r.stage1 = model.stages[0].model.taxonomy.name(pred[0](i));
    if (pred[0](i) == gate) {
      r.stage2 = model.stages[1].model.taxonomy.name(pred[1](i));
      r.stage3 = model.stages[2].model.taxonomy.name(pred[2](i));
    }
    ++counts[path_label(r)];
  }
  out.paths[name] = counts;
}

std::vector<LearnerSpec> sweep_learners(const Context& ctx, const std::string& flag) {
  std::vector<LearnerSpec> out;
  auto add_kind = [&](const std::string& text) {
    const auto kind = parse_learner_kind(text);
    if (!kind) {
      throw Error(Errc::Config, "unknown learner '" + text +
                                    "' (valid: decision_tree, random_forest, adaboost, gradient_boosting, naive_bayes, knn)");
    }
    LearnerSpec s;
    s.kind = *kind;
    out.push_back(s);
  };
  if (!flag.empty()) {
    std::stringstream ss(flag);
    for (std::string item; std::getline(ss, item, ',');) add_kind(item);
  } else if (ctx.cfg.contains("learners")) {
    for (const auto& item : ctx.cfg.at("learners")) {
      if (item.is_string()) {
        add_kind(item.get<std::string>());
      } else {
        try {
          out.push_back(learner_spec_from_json(item));
        } catch (const nlohmann::json::exception& e) {
          throw Error(Errc::Config, std::string("learners entry: ") + e.what());
        }
      }
    }
  } else {
    for (const char* k : {"decision_tree", "random_forest", "adaboost", "gradient_boosting", "naive_bayes", "knn"}) {
      add_kind(k);
    }
  }
  if (out.empty()) throw Error(Errc::Config, "learner list is empty");
  return out;
}

void write_pipeline_reports(Context& ctx, const PipelineEvalResult& r) {
  ctx.outputs.write("comparison" + ctx.ext(), emit_comparison(r.independent, ctx.format));
  ctx.outputs.write("comparison_cascade" + ctx.ext(), emit_comparison(r.cascade, ctx.format));
  ctx.outputs.write("paths.json", dump(r.paths));
}

void cmd_pipeline_eval(Context& ctx, const PipelineArgs& a) {
  const auto schema = schema_for(ctx, a.schema);
  const auto data = require_path(ctx, a.data, "data", "dataset");
  const auto pipeline_path = ctx.path(a.pipeline, "pipeline");

  if (!pipeline_path.empty()) {
    auto t = Clock::now();
    const PipelineModel model = load_pipeline(pipeline_path);
    const PreparedData p = load_prepared(data, schema ? &*schema : nullptr);
    if (p.feature_names != model.feature_names) {
      throw Error(p.feature_names.size() != model.feature_names.size() ? Errc::ShapeMismatch : Errc::ColumnMismatch,
                  "pipeline expects " + std::to_string(model.feature_names.size()) + " feature columns, " + data +
                      " has " + std::to_string(p.feature_names.size()));
    }
    const auto test = stage_datasets(p);
    const double load_ms = ms_since(t);
    t = Clock::now();
    PipelineEvalResult r;
    std::string name(display_name(model.specs[0].learner.kind));
    for (std::size_t s = 1; s < 3; ++s) {
      if (model.specs[s].learner.kind != model.specs[0].learner.kind) {
        name = "pipeline";
        break;
      }
    }
    evaluate_pipeline(model, test, name, r);
    // Rows carry each stage's own learner name.
    for (std::size_t s = 0; s < 3; ++s) {
      r.independent[s].algorithm = std::string(display_name(model.specs[s].learner.kind));
      r.cascade[s].algorithm = r.independent[s].algorithm;
    }
    const double eval_ms = ms_since(t);
    write_pipeline_reports(ctx, r);
    Json manifest{{"command", "pipeline eval"}, {"pipeline", pipeline_path}, {"data", data},
                  {"n_samples", p.features.rows()},
                  {"timing", timing_json({{"load", load_ms}, {"eval", eval_ms}})}};
    ctx.outputs.write("pipeline_eval.manifest.json", dump(manifest));
    return;
  }

  // Sweep: every learner at every stage on one stratified hold-out split.
  const auto seed = ctx.seed();
  const auto learners = sweep_learners(ctx, a.learners);
  auto base_specs = specs_for(ctx, a.spec);
  const auto gate = gate_for(ctx, a.gate);
  double fraction = a.test_fraction;
  if (fraction < 0.0) fraction = ctx.cfg.value("test_fraction", 0.2);
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error(Errc::Config, "--test-fraction must lie in (0, 1)");

  auto t = Clock::now();
  const PreparedData p = load_prepared(data, schema ? &*schema : nullptr);
  const auto all = stage_datasets(p);
  const double load_ms = ms_since(t);
  // Stratify on the finest labels so every stage III class appears on both sides.
  const SplitPlan plan = stratified_split(all[2], fraction, seed);
  std::array<Dataset, 3> train_sets, test_sets;
  for (std::size_t s = 0; s < 3; ++s) {
    train_sets[s] = subset_rows(all[s], plan.train_indices);
    test_sets[s] = subset_rows(all[s], plan.test_indices);
  }

  PipelineEvalResult r;
  Json timing = Json::object();
  timing["load_ms"] = load_ms;
  for (const auto& learner : learners) {
    std::array<StageSpec, 3> specs = base_specs;
    for (auto& s : specs) s.learner = learner;
    const std::string name(display_name(learner.kind));
    t = Clock::now();
    const PipelineModel model = train_pipeline(train_sets, specs, Routing::Cascade, seed, gate);
    const double train_ms = ms_since(t);
    t = Clock::now();
    evaluate_pipeline(model, test_sets, name, r);
    timing[std::string(to_string(learner.kind))] = Json{{"train_ms", train_ms}, {"eval_ms", ms_since(t)}};
  }
  write_pipeline_reports(ctx, r);
  Json names = Json::array();
  for (const auto& l : learners) names.push_back(learner_spec_to_json(l));
  Json manifest{{"command", "pipeline eval"}, {"mode", "sweep"}, {"seed", seed}, {"data", data},
                {"test_fraction", fraction}, {"n_train", plan.train_indices.size()},
                {"n_test", plan.test_indices.size()}, {"learners", names}, {"timing", timing}};
  ctx.outputs.write("pipeline_eval.manifest.json", dump(manifest));
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> inputs;
};

std::vector<ComparisonRow> read_comparison(const std::string& path) {
  std::vector<ComparisonRow> rows;
  auto stage_of = [&](const std::string& label) {
    for (const auto s : {Stage::StageI, Stage::StageII, Stage::StageIII}) {
      if (stage_label(s) == label) return s;
    }
    throw Error(Errc::Format, path + ": unknown stage label '" + label + "'");
  };
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    const Json j = parse_json_text(text, path);
    with_schema_errors(path, [&] {
      for (const auto& item : j) {
        ComparisonRow r;
        r.algorithm = item.at("algorithm").get<std::string>();
        r.stage = stage_of(item.at("stage").get<std::string>());
        r.accuracy = item.at("accuracy").get<double>() / 100.0;
        r.f1 = item.at("f1").get<double>() / 100.0;
        r.precision = item.at("precision").get<double>() / 100.0;
        r.recall = item.at("recall").get<double>() / 100.0;
        r.weighted_f1 = item.value("weighted_f1", 0.0) / 100.0;
        r.weighted_precision = item.value("weighted_precision", 0.0) / 100.0;
        r.weighted_recall = item.value("weighted_recall", 0.0) / 100.0;
        rows.push_back(r);
      }
      return 0;
    });
    return rows;
  }
  const RawTable t = parse_flow_csv(text, path);
  const std::vector<std::string> need{"algorithm", "stage", "accuracy", "f1", "precision", "recall"};
  std::vector<int> idx;
  for (const auto& n : need) {
    const auto c = t.column(n);
    if (!c) throw Error(Errc::Format, path + ": missing column '" + n + "'");
    idx.push_back(*c);
  }
  for (const auto& cells : t.rows) {
    auto num = [&](int c) { return std::stod(cells[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])]) / 100.0; };
    ComparisonRow r;
    r.algorithm = cells[static_cast<std::size_t>(idx[0])];
    r.stage = stage_of(cells[static_cast<std::size_t>(idx[1])]);
    r.accuracy = num(2);
    r.f1 = num(3);
    r.precision = num(4);
    r.recall = num(5);
    rows.push_back(r);
  }
  return rows;
}

void cmd_report(Context& ctx, const ReportArgs& a) {
  if (a.inputs.empty()) throw Error(Errc::Config, "report needs at least one comparison file");
  std::vector<ComparisonRow> rows;
  for (const auto& in : a.inputs) {
    auto part = read_comparison(in);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const auto doc = emit_comparison(rows, ctx.format);
  ctx.outputs.write("report" + ctx.ext(), doc);
  std::cout << doc;
}

struct SynthArgs {
  int rows = 5000;
  double missing = 0.0;
};

void cmd_synth(Context& ctx, const SynthArgs& a) {
  SyntheticParams params;
  params.n_rows = a.rows;
  params.missing_fraction = a.missing;
  const auto seed = ctx.seed();
  auto t = Clock::now();
  const PreparedData p = make_synthetic(params, seed);
  const double gen_ms = ms_since(t);
  ctx.outputs.write("synthetic.csv", prepared_to_csv(p));
  Json manifest = prep_manifest(p, "synthetic");
  manifest["seed"] = seed;
  manifest["missing_fraction"] = a.missing;
  manifest["timing"] = timing_json({{"generate", gen_ms}});
  ctx.outputs.write("synthetic.manifest.json", dump(manifest));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multistage darknet traffic classifier: data prep, feature ranking, training and evaluation"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  Context ctx;
  std::uint64_t seed_value = 0;
  app.add_option("--config", ctx.g.config, "JSON run config (paths inside resolve against its directory)");
  auto* seed_opt = app.add_option("--seed", seed_value, "Master seed (required for training and splits)");
  app.add_option("--out", ctx.g.out, "Output directory (default: current directory)");
  app.add_option("--format", ctx.g.format, "Report format: csv | json | text (default csv)");
  app.add_option("--threads", ctx.g.threads, "Worker threads: n | auto (default 1)");

  auto sub = [&](CLI::App* parent, const char* name, const char* help) {
    auto* c = parent->add_subcommand(name, help);
    c->fallthrough();
    c->option_defaults()->always_capture_default();
    return c;
  };

  PrepArgs prep;
  auto* c_prep = sub(&app, "prep", "Clean a raw flow CSV into a prepared dataset plus manifest");
  c_prep->add_option("--input", prep.input, "Raw CSV (config key 'data')");
  c_prep->add_option("--schema", prep.schema, "Schema JSON (config key 'schema')");

  RankArgs rank;
  auto* c_rank = sub(&app, "rank", "Rank features of one stage");
  c_rank->add_option("--data", rank.data, "Prepared CSV, or raw CSV with --schema");
  c_rank->add_option("--schema", rank.schema, "Schema JSON for raw input");
  c_rank->add_option("--stage", rank.stage, "stage1 | stage2 | stage3");
  c_rank->add_option("--method", rank.method, "infogain | fisher | chisquare | all");
  c_rank->add_option("--bins", rank.bins, "Equal-frequency bins for infogain/chisquare");

  TrainArgs train;
  auto* c_train = sub(&app, "train", "Train one stage model");
  c_train->add_option("--data", train.data, "Prepared CSV, or raw CSV with --schema");
  c_train->add_option("--schema", train.schema, "Schema JSON for raw input");
  c_train->add_option("--stage", train.stage, "stage1 | stage2 | stage3");
  add_spec_flags(c_train, train.spec);

  EvalArgs eval;
  auto* c_eval = sub(&app, "eval", "Evaluate a stage model on a dataset");
  c_eval->add_option("--model", eval.model, "model.json written by train");
  c_eval->add_option("--data", eval.data, "Prepared CSV, or raw CSV with --schema");
  c_eval->add_option("--schema", eval.schema, "Schema JSON for raw input");

  CvArgs cv;
  auto* c_cv = sub(&app, "cv", "Stratified k-fold cross-validation of one stage");
  c_cv->add_option("--data", cv.data, "Prepared CSV, or raw CSV with --schema");
  c_cv->add_option("--schema", cv.schema, "Schema JSON for raw input");
  c_cv->add_option("--stage", cv.stage, "stage1 | stage2 | stage3");
  c_cv->add_option("--folds", cv.folds, "Number of folds (0 = config 'folds' or 5)");
  add_spec_flags(c_cv, cv.spec);

  auto* c_pipe = sub(&app, "pipeline", "Three-stage classifier");
  c_pipe->require_subcommand(1);
  PipelineArgs ptrain;
  auto* c_ptrain = sub(c_pipe, "train", "Train all three stages");
  c_ptrain->add_option("--data", ptrain.data, "Dataset with all three stage labels");
  c_ptrain->add_option("--schema", ptrain.schema, "Schema JSON for raw input");
  c_ptrain->add_option("--routing", ptrain.routing, "independent | cascade (default cascade)");
  c_ptrain->add_option("--gate", ptrain.gate, "Stage I class that opens stages II and III (default Malicious)");
  add_spec_flags(c_ptrain, ptrain.spec);

  PipelineArgs peval;
  auto* c_peval = sub(c_pipe, "eval", "Evaluate a saved pipeline, or sweep learners over a hold-out split");
  c_peval->add_option("--data", peval.data, "Dataset with all three stage labels");
  c_peval->add_option("--schema", peval.schema, "Schema JSON for raw input");
  c_peval->add_option("--pipeline", peval.pipeline, "pipeline.json; omit to run the learner sweep");
  c_peval->add_option("--learners", peval.learners, "Comma-separated learner kinds for the sweep (default: all six)");
  c_peval->add_option("--test-fraction", peval.test_fraction, "Hold-out share for the sweep (default 0.2)");
  c_peval->add_option("--gate", peval.gate, "Stage I class that opens stages II and III (default Malicious)");
  add_spec_flags(c_peval, peval.spec);

  ReportArgs report;
  auto* c_report = sub(&app, "report", "Merge comparison tables and re-emit them");
  c_report->add_option("inputs", report.inputs, "Comparison files (csv or json)")->required();

  SynthArgs synth;
  auto* c_synth = sub(&app, "synth", "Write the seeded hierarchical synthetic dataset");
  c_synth->add_option("--rows", synth.rows, "Number of rows");
  c_synth->add_option("--missing", synth.missing, "Share of cells blanked out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count() > 0) ctx.g.seed = seed_value;

  try {
    load_globals(ctx);
    if (c_prep->parsed()) cmd_prep(ctx, prep);
    else if (c_rank->parsed()) cmd_rank(ctx, rank);
    else if (c_train->parsed()) cmd_train(ctx, train);
    else if (c_eval->parsed()) cmd_eval(ctx, eval);
    else if (c_cv->parsed()) cmd_cv(ctx, cv);
    else if (c_ptrain->parsed()) cmd_pipeline_train(ctx, ptrain);
    else if (c_peval->parsed()) cmd_pipeline_eval(ctx, peval);
    else if (c_report->parsed()) cmd_report(ctx, report);
    else if (c_synth->parsed()) cmd_synth(ctx, synth);
    return kExitOk;
  } catch (const Error& e) {
    ctx.outputs.rollback();
    std::cerr << "dtc: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    ctx.outputs.rollback();
    std::cerr << "dtc: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    ctx.outputs.rollback();
    std::cerr << "dtc: " << e.what() << '\n';
    return kExitInput;
  }
}
