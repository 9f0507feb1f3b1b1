#include "dtc/serialization.hpp"

#include <fstream>
#include <sstream>

#include "dtc/error.hpp"

namespace dtc {

namespace {

Json vector_to_json(const Vector& v) { return Json(std::vector<double>(v.begin(), v.end())); }

Vector vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto row = j.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(Errc::Schema, "ragged matrix row");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

Json node_to_json(const Tree& tree, int idx) {
  const auto& node = tree.nodes[static_cast<std::size_t>(idx)];
  if (!node.is_leaf()) {
    return Json{{"feature", node.feature},
                {"threshold", node.threshold},
                {"left", node_to_json(tree, node.left)},
                {"right", node_to_json(tree, node.right)}};
  }
  if (tree.n_classes == 0) return Json{{"value", node.value}};
  return Json{{"class_counts", std::vector<int>(node.class_counts.begin(), node.class_counts.end())},
              {"class_weights", vector_to_json(node.class_weights)},
              {"predicted_class", node.predicted_class}};
}

int node_from_json(const Json& j, Tree& tree) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("feature")) {
    const int feature = j.at("feature").get<int>();
    const double threshold = j.at("threshold").get<double>();
    if (feature < 0) throw Error(Errc::Schema, "negative feature index in tree");
    const int left = node_from_json(j.at("left"), tree);
    const int right = node_from_json(j.at("right"), tree);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return id;
  }
  auto& node = tree.nodes[static_cast<std::size_t>(id)];
  if (tree.n_classes == 0) {
    node.value = j.at("value").get<double>();
    return id;
  }
  const auto counts = j.at("class_counts").get<std::vector<int>>();
  node.class_counts = Eigen::Map<const Eigen::VectorXi>(counts.data(), static_cast<Eigen::Index>(counts.size()));
  node.class_weights = vector_from_json(j.at("class_weights"));
  node.predicted_class = j.at("predicted_class").get<int>();
  if (node.class_weights.size() != tree.n_classes || node.class_counts.size() != tree.n_classes ||
      node.predicted_class < 0 || node.predicted_class >= tree.n_classes) {
    throw Error(Errc::Schema, "leaf histogram does not match the class count");
  }
  return id;
}

std::string_view criterion_name(Criterion c) { return c == Criterion::Gini ? "gini" : "entropy"; }

}  // namespace

Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::Schema, source + ": " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json read_json_file(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(Errc::Io, "write failure on " + path.string());
}

Json taxonomy_to_json(const ClassTaxonomy& taxonomy) {
  return Json{{"stage", to_string(taxonomy.stage())}, {"names", taxonomy.names()}};
}

ClassTaxonomy taxonomy_from_json(const Json& j) {
  const auto stage = parse_stage(j.at("stage").get<std::string>());
  if (!stage) throw Error(Errc::Schema, "unknown taxonomy stage");
  auto names = j.at("names").get<std::vector<std::string>>();
  if (*stage == Stage::Custom) return ClassTaxonomy::custom(std::move(names));
  auto taxonomy = ClassTaxonomy::for_stage(*stage);
  if (taxonomy.names() != names) throw Error(Errc::Schema, "taxonomy names differ from the stage's class list");
  return taxonomy;
}

Json tree_params_to_json(const TreeParams& p) {
  return Json{{"max_depth", p.max_depth ? Json(*p.max_depth) : Json(nullptr)},
              {"min_samples_split", p.min_samples_split},
              {"min_samples_leaf", p.min_samples_leaf},
              {"criterion", criterion_name(p.criterion)},
              {"balanced_class_weight", p.balanced_class_weight}};
}

TreeParams tree_params_from_json(const Json& j, TreeParams p) {
  if (j.contains("max_depth")) {
    const auto& v = j.at("max_depth");
    p.max_depth = v.is_null() ? std::nullopt : std::optional<int>(v.get<int>());
  }
  if (j.contains("min_samples_split")) p.min_samples_split = j.at("min_samples_split").get<int>();
  if (j.contains("min_samples_leaf")) p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  if (j.contains("criterion")) {
    const auto c = j.at("criterion").get<std::string>();
    if (c == "gini") {
      p.criterion = Criterion::Gini;
    } else if (c == "entropy") {
      p.criterion = Criterion::Entropy;
    } else {
      throw Error(Errc::Config, "criterion must be gini or entropy, got '" + c + "'");
    }
  }
  if (j.contains("balanced_class_weight")) p.balanced_class_weight = j.at("balanced_class_weight").get<bool>();
  return p;
}

Json learner_spec_to_json(const LearnerSpec& spec) {
  return Json{
      {"kind", to_string(spec.kind)},
      {"tree", tree_params_to_json(spec.tree)},
      {"forest",
       {{"n_trees", spec.forest.n_trees},
        {"max_features", spec.forest.max_features ? Json(*spec.forest.max_features) : Json(nullptr)},
        {"bootstrap", spec.forest.bootstrap}}},
      {"adaboost", {{"n_rounds", spec.adaboost.n_rounds}, {"weak", tree_params_to_json(spec.adaboost.weak)}}},
      {"gradient_boosting",
       {{"n_stages", spec.gradient_boosting.n_stages},
        {"learning_rate", spec.gradient_boosting.learning_rate},
        {"max_depth", spec.gradient_boosting.max_depth}}},
      {"knn", {{"k", spec.knn.k}}},
  };
}

LearnerSpec learner_spec_from_json(const Json& j) {
  LearnerSpec spec;
  const auto kind_text = j.at("kind").get<std::string>();
  const auto kind = parse_learner_kind(kind_text);
  if (!kind) {
    throw Error(Errc::Config, "unknown learner '" + kind_text +
                                  "' (valid: decision_tree, random_forest, adaboost, gradient_boosting, "
                                  "naive_bayes, knn)");
  }
  spec.kind = *kind;
  if (j.contains("tree")) spec.tree = tree_params_from_json(j.at("tree"));
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    if (f.contains("n_trees")) spec.forest.n_trees = f.at("n_trees").get<int>();
    if (f.contains("max_features")) {
      spec.forest.max_features =
          f.at("max_features").is_null() ? std::nullopt : std::optional<int>(f.at("max_features").get<int>());
    }
    if (f.contains("bootstrap")) spec.forest.bootstrap = f.at("bootstrap").get<bool>();
  }
  if (j.contains("adaboost")) {
    const auto& a = j.at("adaboost");
    if (a.contains("n_rounds")) spec.adaboost.n_rounds = a.at("n_rounds").get<int>();
    if (a.contains("weak")) spec.adaboost.weak = tree_params_from_json(a.at("weak"), spec.adaboost.weak);
  }
  if (j.contains("gradient_boosting")) {
    const auto& g = j.at("gradient_boosting");
    if (g.contains("n_stages")) spec.gradient_boosting.n_stages = g.at("n_stages").get<int>();
    if (g.contains("learning_rate")) spec.gradient_boosting.learning_rate = g.at("learning_rate").get<double>();
    if (g.contains("max_depth")) spec.gradient_boosting.max_depth = g.at("max_depth").get<int>();
  }
  if (j.contains("knn") && j.at("knn").contains("k")) spec.knn.k = j.at("knn").at("k").get<int>();
  return spec;
}

Json normalization_to_json(const NormalizationParams& p) {
  return Json{{"method", to_string(p.method)}, {"a", vector_to_json(p.a)}, {"b", vector_to_json(p.b)}};
}

NormalizationParams normalization_from_json(const Json& j) {
  NormalizationParams p;
  const auto method = parse_norm_method(j.at("method").get<std::string>());
  if (!method) throw Error(Errc::Schema, "unknown normalization method");
  p.method = *method;
  p.a = vector_from_json(j.at("a"));
  p.b = vector_from_json(j.at("b"));
  if (p.a.size() != p.b.size()) throw Error(Errc::Schema, "normalizer parameter lengths differ");
  return p;
}

Json tree_to_json(const Tree& tree) {
  if (tree.nodes.empty()) throw Error(Errc::Schema, "cannot serialize an empty tree");
  return node_to_json(tree, 0);
}

Tree tree_from_json(const Json& j, int n_classes) {
  Tree tree;
  tree.n_classes = n_classes;
  node_from_json(j, tree);
  return tree;
}

Json model_to_json(const TrainedModel& m) {
  Json body = std::visit(
      [](const auto& model) -> Json {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, DecisionTreeModel>) {
          return Json{{"tree", tree_to_json(model.tree)}};
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          Json trees = Json::array();
          for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
          return Json{{"n_features_per_split", model.n_features_per_split}, {"seed", model.seed}, {"trees", trees}};
        } else if constexpr (std::is_same_v<T, AdaBoostModel>) {
          Json stumps = Json::array();
          for (std::size_t t = 0; t < model.stumps.size(); ++t) {
            stumps.push_back(Json{{"alpha", model.alphas[t]},
                                  {"error", model.round_errors[t]},
                                  {"tree", tree_to_json(model.stumps[t])}});
          }
          return Json{{"n_classes", model.n_classes}, {"stumps", stumps}};
        } else if constexpr (std::is_same_v<T, GradBoostModel>) {
          Json stages = Json::array();
          for (const auto& stage : model.stages) {
            Json trees = Json::array();
            for (const auto& t : stage) trees.push_back(tree_to_json(t));
            stages.push_back(trees);
          }
          return Json{{"learning_rate", model.learning_rate},
                      {"init_scores", vector_to_json(model.init_scores)},
                      {"stages", stages}};
        } else if constexpr (std::is_same_v<T, NaiveBayesModel>) {
          return Json{{"class_priors", vector_to_json(model.class_priors)},
                      {"means", matrix_to_json(model.means)},
                      {"variances", matrix_to_json(model.variances)}};
        } else {
          return Json{{"k", model.k},
                      {"train_x", matrix_to_json(model.train_x)},
                      {"train_y", std::vector<int>(model.train_y.begin(), model.train_y.end())}};
        }
      },
      m.model);

  return Json{{"format_version", kFormatVersion},
              {"kind", to_string(m.spec.kind)},
              {"hyperparameters", learner_spec_to_json(m.spec)},
              {"taxonomy", taxonomy_to_json(m.taxonomy)},
              {"feature_subset", m.feature_subset},
              {"feature_names", m.feature_names},
              {"model", std::move(body)}};
}

TrainedModel model_from_json(const Json& j) {
  return with_schema_errors("model", [&] {
    if (!j.is_object()) throw Error(Errc::Schema, "model document must be an object");
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error(Errc::VersionMismatch, "model format_version " + std::to_string(version) + ", expected " +
                                             std::to_string(kFormatVersion));
    }
    TrainedModel m;
    m.spec = learner_spec_from_json(j.at("hyperparameters"));
    const auto kind = parse_learner_kind(j.at("kind").get<std::string>());
    if (!kind || *kind != m.spec.kind) throw Error(Errc::Schema, "kind tag disagrees with hyperparameters");
    m.taxonomy = taxonomy_from_json(j.at("taxonomy"));
    m.feature_subset = j.at("feature_subset").get<std::vector<int>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const int k = m.taxonomy.size();
    const auto width = static_cast<Eigen::Index>(m.feature_subset.size());
    const auto& body = j.at("model");

    switch (m.spec.kind) {
      case LearnerKind::DecisionTree:
        m.model = DecisionTreeModel{tree_from_json(body.at("tree"), k)};
        break;
      case LearnerKind::RandomForest: {
        ForestModel f;
        f.n_features_per_split = body.at("n_features_per_split").get<int>();
        f.seed = body.at("seed").get<std::uint64_t>();
        for (const auto& t : body.at("trees")) f.trees.push_back(tree_from_json(t, k));
        if (f.trees.empty()) throw Error(Errc::Schema, "forest without trees");
        m.model = std::move(f);
        break;
      }
      case LearnerKind::AdaBoost: {
        AdaBoostModel a;
        a.n_classes = body.at("n_classes").get<int>();
        for (const auto& s : body.at("stumps")) {
          a.alphas.push_back(s.at("alpha").get<double>());
          a.round_errors.push_back(s.at("error").get<double>());
          a.stumps.push_back(tree_from_json(s.at("tree"), k));
        }
        if (a.stumps.empty()) throw Error(Errc::Schema, "AdaBoost model without rounds");
        m.model = std::move(a);
        break;
      }
      case LearnerKind::GradientBoosting: {
        GradBoostModel g;
        g.learning_rate = body.at("learning_rate").get<double>();
        g.init_scores = vector_from_json(body.at("init_scores"));
        if (g.init_scores.size() != k) throw Error(Errc::Schema, "init_scores length differs from class count");
        for (const auto& stage : body.at("stages")) {
          std::vector<Tree> trees;
          for (const auto& t : stage) trees.push_back(tree_from_json(t, 0));
          if (static_cast<int>(trees.size()) != k) throw Error(Errc::Schema, "stage must hold one tree per class");
          g.stages.push_back(std::move(trees));
        }
        m.model = std::move(g);
        break;
      }
      case LearnerKind::GaussianNB: {
        NaiveBayesModel nb;
        nb.class_priors = vector_from_json(body.at("class_priors"));
        nb.means = matrix_from_json(body.at("means"), width);
        nb.variances = matrix_from_json(body.at("variances"), width);
        if (nb.class_priors.size() != k || nb.means.rows() != k || nb.variances.rows() != k) {
          throw Error(Errc::Schema, "naive Bayes tables do not match the class count");
        }
        m.model = std::move(nb);
        break;
      }
      case LearnerKind::Knn: {
        KnnModel knn;
        knn.k = body.at("k").get<int>();
        knn.train_x = matrix_from_json(body.at("train_x"), width);
        const auto y = body.at("train_y").get<std::vector<int>>();
        knn.train_y = Eigen::Map<const LabelVector>(y.data(), static_cast<Eigen::Index>(y.size()));
        if (knn.train_y.size() != knn.train_x.rows() || knn.k < 1 || knn.k > knn.train_x.rows()) {
          throw Error(Errc::Schema, "inconsistent KNN training store");
        }
        m.model = std::move(knn);
        break;
      }
    }
    return m;
  });
}

void save_model(const TrainedModel& m, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(m).dump(1) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

}  // namespace dtc
