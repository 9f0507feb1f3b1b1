#include "dtc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dtc/error.hpp"
#include "dtc/parallel.hpp"
#include "dtc/random.hpp"
#include "strings.hpp"

namespace dtc {

ConfusionMatrix confusion_matrix(const LabelVector& y_true, const LabelVector& y_pred,
                                 const ClassTaxonomy& taxonomy) {
  if (y_true.size() != y_pred.size()) {
    throw Error(Errc::LengthMismatch, "y_true has " + std::to_string(y_true.size()) + " labels, y_pred has " +
                                          std::to_string(y_pred.size()));
  }
  const int k = taxonomy.size();
  ConfusionMatrix c;
  c.taxonomy = taxonomy;
  c.counts.setZero(k, k);
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    const int t = y_true(i);
    const int p = y_pred(i);
    if (t < 0 || t >= k || p < 0 || p >= k) {
      throw Error(Errc::IndexOutOfRange, "label pair (" + std::to_string(t) + ", " + std::to_string(p) +
                                             ") at position " + std::to_string(i) + " outside " +
                                             std::to_string(k) + " classes");
    }
    ++c.counts(t, p);
  }
  return c;
}

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport metrics_from_confusion(const ConfusionMatrix& c) {
  const std::int64_t total = c.total();
  if (total <= 0) throw Error(Errc::EmptyMatrix, "confusion matrix has no samples");
  const auto k = c.counts.rows();
  MetricsReport m;
  m.taxonomy = c.taxonomy;
  m.accuracy = ratio(c.counts.trace(), total);
  m.precision.resize(k);
  m.recall.resize(k);
  m.f1.resize(k);
  m.support.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const std::int64_t tp = c.counts(j, j);
    const std::int64_t predicted = c.counts.col(j).sum();
    const std::int64_t actual = c.counts.row(j).sum();
    m.precision(j) = ratio(tp, predicted);
    m.recall(j) = ratio(tp, actual);
    const double pr = m.precision(j) + m.recall(j);
    m.f1(j) = pr > 0.0 ? 2.0 * m.precision(j) * m.recall(j) / pr : 0.0;
    m.support(j) = actual;
  }
  m.macro_precision = m.precision.mean();
  m.macro_recall = m.recall.mean();
  m.macro_f1 = m.f1.mean();
  const Vector w = m.support.cast<double>() / static_cast<double>(total);
  m.weighted_precision = w.dot(m.precision);
  m.weighted_recall = w.dot(m.recall);
  m.weighted_f1 = w.dot(m.f1);
  return m;
}

MetricsReport evaluate(const LabelVector& y_true, const LabelVector& y_pred, const ClassTaxonomy& taxonomy) {
  return metrics_from_confusion(confusion_matrix(y_true, y_pred, taxonomy));
}

MicroMetrics micro_metrics(const ConfusionMatrix& c) {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  for (Eigen::Index j = 0; j < c.counts.rows(); ++j) {
    tp += c.counts(j, j);
    fp += c.counts.col(j).sum() - c.counts(j, j);
    fn += c.counts.row(j).sum() - c.counts(j, j);
  }
  MicroMetrics m;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

namespace {

MetricSummary summarize(const std::vector<FoldResult>& folds, double MetricsReport::*field) {
  MetricSummary s;
  if (folds.empty()) return s;
  double sum = 0.0;
  for (const auto& f : folds) sum += f.metrics.*field;
  s.mean = sum / static_cast<double>(folds.size());
  double sq = 0.0;
  for (const auto& f : folds) sq += (f.metrics.*field - s.mean) * (f.metrics.*field - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(folds.size()));
  return s;
}

}  // namespace

CvResult cross_validate(const Dataset& d, const StageSpec& spec, int k, std::uint64_t seed) {
  const auto plans = kfold(d, k, seed);
  CvResult out;
  out.folds.resize(plans.size());
  parallel_for(plans.size(), [&](std::size_t f) {
    const Dataset train_rows = subset_rows(d, plans[f].train_indices);
    const Dataset test_rows = subset_rows(d, plans[f].test_indices);
    auto& fold = out.folds[f];
    fold.plan = plans[f];
    fold.artifact = train_stage(train_rows, spec, derive_seed(seed, f));
    fold.metrics = evaluate(test_rows.labels, fold.artifact.predict(test_rows), d.taxonomy);
  });
  out.accuracy = summarize(out.folds, &MetricsReport::accuracy);
  out.macro_precision = summarize(out.folds, &MetricsReport::macro_precision);
  out.macro_recall = summarize(out.folds, &MetricsReport::macro_recall);
  out.macro_f1 = summarize(out.folds, &MetricsReport::macro_f1);
  return out;
}

ComparisonRow comparison_row(std::string algorithm, Stage stage, const MetricsReport& m) {
  ComparisonRow r;
  r.algorithm = std::move(algorithm);
  r.stage = stage;
  r.accuracy = m.accuracy;
  r.f1 = m.macro_f1;
  r.precision = m.macro_precision;
  r.recall = m.macro_recall;
  r.weighted_f1 = m.weighted_f1;
  r.weighted_precision = m.weighted_precision;
  r.weighted_recall = m.weighted_recall;
  return r;
}

std::string_view to_string(ReportFormat format) noexcept {
  switch (format) {
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Json: return "json";
    case ReportFormat::Text: return "text";
  }
  return "csv";
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  const auto t = detail::lower(detail::trim(text));
  if (t == "csv") return ReportFormat::Csv;
  if (t == "json") return ReportFormat::Json;
  if (t == "text" || t == "txt") return ReportFormat::Text;
  return std::nullopt;
}

std::string format_percent(double value) { return detail::format_fixed(100.0 * value, 4); }

std::string stage_label(Stage stage) {
  switch (stage) {
    case Stage::StageI: return "DTC1";
    case Stage::StageII: return "DTC2";
    case Stage::StageIII: return "DTC3";
    case Stage::Custom: return "custom";
  }
  return "custom";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string pad(const std::string& s, std::size_t width, bool right) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

}  // namespace

std::string emit_comparison(std::vector<ComparisonRow> rows, ReportFormat format) {
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.stage != b.stage) return a.stage < b.stage;
    return a.accuracy > b.accuracy;
  });

  if (format == ReportFormat::Json) {
    Json doc = Json::array();
    for (const auto& r : rows) {
      // Percentages go through the same 4-decimal rendering as the other formats.
      auto pct = [](double v) { return std::stod(format_percent(v)); };
      doc.push_back(Json{{"algorithm", r.algorithm},
                         {"stage", stage_label(r.stage)},
                         {"accuracy", pct(r.accuracy)},
                         {"f1", pct(r.f1)},
                         {"precision", pct(r.precision)},
                         {"recall", pct(r.recall)},
                         {"weighted_f1", pct(r.weighted_f1)},
                         {"weighted_precision", pct(r.weighted_precision)},
                         {"weighted_recall", pct(r.weighted_recall)}});
    }
    return doc.dump(2) + "\n";
  }

  const std::vector<std::string> header{"algorithm", "stage", "accuracy", "f1", "precision", "recall"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.algorithm, stage_label(r.stage), format_percent(r.accuracy), format_percent(r.f1),
                     format_percent(r.precision), format_percent(r.recall)});
  }

  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_field(row[c]);
      out << '\n';
    }
    return out.str();
  }

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& row) {
    std::string text;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) text += "  ";
      text += pad(row[c], width[c], c >= 2);
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out << text << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (const auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : cells) line(row);
  return out.str();
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Json metrics_to_json(const MetricsReport& m) {
  Json per_class = Json::array();
  for (int j = 0; j < m.taxonomy.size(); ++j) {
    per_class.push_back(Json{{"class", m.taxonomy.name(j)},
                             {"precision", m.precision(j)},
                             {"recall", m.recall(j)},
                             {"f1", m.f1(j)},
                             {"support", m.support(j)}});
  }
  return Json{{"accuracy", m.accuracy},
              {"macro", {{"precision", m.macro_precision}, {"recall", m.macro_recall}, {"f1", m.macro_f1}}},
              {"weighted", {{"precision", m.weighted_precision}, {"recall", m.weighted_recall}, {"f1", m.weighted_f1}}},
              {"per_class", per_class},
              {"precision", to_std(m.precision)},
              {"recall", to_std(m.recall)},
              {"f1", to_std(m.f1)}};
}

Json confusion_to_json(const ConfusionMatrix& c) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < c.counts.rows(); ++i) {
    std::vector<std::int64_t> row(static_cast<std::size_t>(c.counts.cols()));
    for (Eigen::Index j = 0; j < c.counts.cols(); ++j) row[static_cast<std::size_t>(j)] = c.counts(i, j);
    rows.push_back(row);
  }
  return Json{{"classes", c.taxonomy.names()}, {"counts", rows}};
}

Json cv_summary_to_json(const CvResult& r) {
  auto summary = [](const MetricSummary& s) { return Json{{"mean", s.mean}, {"stddev", s.stddev}}; };
  return Json{{"folds", r.folds.size()},
              {"accuracy", summary(r.accuracy)},
              {"macro_precision", summary(r.macro_precision)},
              {"macro_recall", summary(r.macro_recall)},
              {"macro_f1", summary(r.macro_f1)}};
}

std::string emit_metrics(const MetricsReport& m, const ConfusionMatrix& c, ReportFormat format) {
  if (format == ReportFormat::Json) {
    Json doc = metrics_to_json(m);
    doc["confusion"] = confusion_to_json(c);
    return doc.dump(2) + "\n";
  }
  std::vector<std::vector<std::string>> rows;
  for (int j = 0; j < m.taxonomy.size(); ++j) {
    rows.push_back({m.taxonomy.name(j), detail::format_fixed(m.precision(j), 6), detail::format_fixed(m.recall(j), 6),
                    detail::format_fixed(m.f1(j), 6), std::to_string(m.support(j))});
  }
  const auto total = std::to_string(c.total());
  rows.push_back({"macro", detail::format_fixed(m.macro_precision, 6), detail::format_fixed(m.macro_recall, 6),
                  detail::format_fixed(m.macro_f1, 6), total});
  rows.push_back({"weighted", detail::format_fixed(m.weighted_precision, 6),
                  detail::format_fixed(m.weighted_recall, 6), detail::format_fixed(m.weighted_f1, 6), total});
  const std::vector<std::string> header{"class", "precision", "recall", "f1", "support"};

  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    out << "class,precision,recall,f1,support\n";
    for (const auto& r : rows) out << csv_field(r[0]) << ',' << r[1] << ',' << r[2] << ',' << r[3] << ',' << r[4] << '\n';
    out << "accuracy," << detail::format_fixed(m.accuracy, 6) << ",,," << total << '\n';
    return out.str();
  }
  std::size_t name_w = header[0].size();
  for (const auto& r : rows) name_w = std::max(name_w, r[0].size());
  out << "accuracy " << detail::format_fixed(m.accuracy, 6) << " (" << total << " samples)\n\n";
  out << pad(header[0], name_w, false);
  for (std::size_t i = 1; i < header.size(); ++i) out << "  " << pad(header[i], 9, true);
  out << '\n';
  for (const auto& r : rows) {
    out << pad(r[0], name_w, false);
    for (std::size_t i = 1; i < r.size(); ++i) out << "  " << pad(r[i], 9, true);
    out << '\n';
  }
  return out.str();
}

}  // namespace dtc
