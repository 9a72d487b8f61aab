#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clustermodel/data.hpp"
#include "clustermodel/error.hpp"
#include "clustermodel/pipeline.hpp"

namespace cmodel {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON encoding. Field names are part of the report file format.

inline void to_json(json& j, const ConfusionMatrix& cm) {
  j = json::array();
  for (std::size_t a = 0; a < cm.classes(); ++a) {
    json row = json::array();
    for (std::size_t p = 0; p < cm.classes(); ++p) row.push_back(cm.at(a, p));
    j.push_back(std::move(row));
  }
}

inline void from_json(const json& j, ConfusionMatrix& cm) {
  cm = ConfusionMatrix::from_rows(j.get<std::vector<std::vector<std::size_t>>>());
}

inline void to_json(json& j, const MetricsRecord& m) {
  j = json{{"accuracy", m.accuracy},   {"precision", m.precision}, {"recall", m.recall},
           {"f1", m.f1},               {"support", m.support},     {"f1_mode", to_string(m.f1_mode)},
           {"f1_avg", m.f1_avg},       {"kappa", m.kappa},         {"confusion", m.confusion}};
}

inline void from_json(const json& j, MetricsRecord& m) {
  j.at("accuracy").get_to(m.accuracy);
  j.at("precision").get_to(m.precision);
  j.at("recall").get_to(m.recall);
  j.at("f1").get_to(m.f1);
  j.at("support").get_to(m.support);
  m.f1_mode = parse_f1_mode(j.at("f1_mode").get<std::string>());
  j.at("f1_avg").get_to(m.f1_avg);
  j.at("kappa").get_to(m.kappa);
  j.at("confusion").get_to(m.confusion);
}

inline void to_json(json& j, const MetricsCell& c) {
  j = json{{"metrics", c.metrics ? json(*c.metrics) : json(nullptr)}, {"error", c.error}};
}

inline void from_json(const json& j, MetricsCell& c) {
  if (j.at("metrics").is_null()) c.metrics.reset();
  else c.metrics = j.at("metrics").get<MetricsRecord>();
  j.at("error").get_to(c.error);
}

inline void to_json(json& j, const TTestResult& r) {
  j = json{{"n", r.n},
           {"mean_a", r.mean_a},
           {"mean_b", r.mean_b},
           {"var_a", r.var_a},
           {"var_b", r.var_b},
           {"pearson_r", r.pearson_r ? json(*r.pearson_r) : json(nullptr)},
           {"hypothesized_difference", r.hypothesized_difference},
           {"df", r.df},
           {"t_stat", r.t_stat},
           {"p_one_tail", r.p_one_tail},
           {"p_two_tail", r.p_two_tail},
           {"alpha", r.alpha},
           {"t_crit_one", r.t_crit_one},
           {"t_crit_two", r.t_crit_two}};
}

inline void from_json(const json& j, TTestResult& r) {
  j.at("n").get_to(r.n);
  j.at("mean_a").get_to(r.mean_a);
  j.at("mean_b").get_to(r.mean_b);
  j.at("var_a").get_to(r.var_a);
  j.at("var_b").get_to(r.var_b);
  if (j.at("pearson_r").is_null()) r.pearson_r.reset();
  else r.pearson_r = j.at("pearson_r").get<double>();
  j.at("hypothesized_difference").get_to(r.hypothesized_difference);
  j.at("df").get_to(r.df);
  j.at("t_stat").get_to(r.t_stat);
  j.at("p_one_tail").get_to(r.p_one_tail);
  j.at("p_two_tail").get_to(r.p_two_tail);
  j.at("alpha").get_to(r.alpha);
  j.at("t_crit_one").get_to(r.t_crit_one);
  j.at("t_crit_two").get_to(r.t_crit_two);
}

inline void to_json(json& j, const ClassifierSpec& s) {
  j = json{{"kind", to_string(s.kind)}, {"hyperparameters", s.hyperparameters}, {"seed", s.seed}};
}

inline void from_json(const json& j, ClassifierSpec& s) {
  s.kind = parse_classifier_kind(j.at("kind").get<std::string>());
  j.at("hyperparameters").get_to(s.hyperparameters);
  j.at("seed").get_to(s.seed);
}

inline void to_json(json& j, const ExperimentConfig& c) {
  std::vector<std::string> variants;
  for (auto v : c.variants) variants.emplace_back(to_string(v));
  j = json{{"input", c.input_path},
           {"label_column", c.label_column},
           {"k", c.k},
           {"classifiers", c.classifiers},
           {"folds", c.folds},
           {"seed", c.seed},
           {"variants", variants},
           {"pca_variance", c.pca_variance},
           {"f1_mode", to_string(c.f1_mode)},
           {"alpha", c.alpha},
           {"missing", c.missing == MissingPolicy::reject ? "reject" : "impute_mode"},
           {"kmeans_max_iter", c.kmeans_max_iter}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
  j.at("input").get_to(c.input_path);
  j.at("label_column").get_to(c.label_column);
  j.at("k").get_to(c.k);
  j.at("classifiers").get_to(c.classifiers);
  j.at("folds").get_to(c.folds);
  j.at("seed").get_to(c.seed);
  c.variants.clear();
  for (const auto& v : j.at("variants")) c.variants.push_back(parse_variant(v.get<std::string>()));
  j.at("pca_variance").get_to(c.pca_variance);
  c.f1_mode = parse_f1_mode(j.at("f1_mode").get<std::string>());
  j.at("alpha").get_to(c.alpha);
  c.missing = j.at("missing").get<std::string>() == "reject" ? MissingPolicy::reject
                                                             : MissingPolicy::impute_mode;
  j.at("kmeans_max_iter").get_to(c.kmeans_max_iter);
}

inline void to_json(json& j, const ClusterModelResult& r) {
  json best = json::array();
  for (const auto& b : r.best_cluster) best.push_back(b ? json(*b) : json(nullptr));
  std::vector<bool> degenerate(r.degenerate.begin(), r.degenerate.end());
  j = json{{"k", r.k},
           {"attributes", r.attributes},
           {"attribute_cluster", r.attribute_cluster},
           {"label_cluster", r.label_cluster ? json(*r.label_cluster) : json(nullptr)},
           {"headline_cluster", r.headline_cluster ? json(*r.headline_cluster) : json(nullptr)},
           {"cluster_attributes", r.cluster_attributes},
           {"degenerate", degenerate},
           {"objective", r.objective},
           {"iterations", r.iterations},
           {"per_cluster", r.per_cluster},
           {"headline", r.headline},
           {"best_cluster", best}};
}

inline void from_json(const json& j, ClusterModelResult& r) {
  j.at("k").get_to(r.k);
  j.at("attributes").get_to(r.attributes);
  j.at("attribute_cluster").get_to(r.attribute_cluster);
  if (j.at("label_cluster").is_null()) r.label_cluster.reset();
  else r.label_cluster = j.at("label_cluster").get<std::size_t>();
  if (j.at("headline_cluster").is_null()) r.headline_cluster.reset();
  else r.headline_cluster = j.at("headline_cluster").get<std::size_t>();
  j.at("cluster_attributes").get_to(r.cluster_attributes);
  r.degenerate = j.at("degenerate").get<std::vector<bool>>();
  j.at("objective").get_to(r.objective);
  j.at("iterations").get_to(r.iterations);
  j.at("per_cluster").get_to(r.per_cluster);
  j.at("headline").get_to(r.headline);
  r.best_cluster.clear();
  for (const auto& b : j.at("best_cluster"))
    r.best_cluster.push_back(b.is_null() ? std::nullopt
                                         : std::optional<std::size_t>(b.get<std::size_t>()));
}

inline void to_json(json& j, const TTestEntry& e) {
  j = json{{"metric", e.metric},
           {"a", to_string(e.a)},
           {"b", to_string(e.b)},
           {"classifiers", e.classifiers},
           {"column_a", e.column_a},
           {"column_b", e.column_b},
           {"result", e.result ? json(*e.result) : json(nullptr)},
           {"error", e.error}};
}

inline void from_json(const json& j, TTestEntry& e) {
  j.at("metric").get_to(e.metric);
  e.a = parse_variant(j.at("a").get<std::string>());
  e.b = parse_variant(j.at("b").get<std::string>());
  j.at("classifiers").get_to(e.classifiers);
  j.at("column_a").get_to(e.column_a);
  j.at("column_b").get_to(e.column_b);
  if (j.at("result").is_null()) e.result.reset();
  else e.result = j.at("result").get<TTestResult>();
  j.at("error").get_to(e.error);
}

inline void to_json(json& j, const ExperimentReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json cell = c.cell;
    cell["variant"] = to_string(c.variant);
    cell["classifier"] = c.classifier;
    cells.push_back(std::move(cell));
  }
  j = json{{"config", r.config},
           {"classifiers", r.classifiers},
           {"cells", cells},
           {"cluster", r.cluster ? json(*r.cluster) : json(nullptr)},
           {"ttests", r.ttests}};
}

inline void from_json(const json& j, ExperimentReport& r) {
  j.at("config").get_to(r.config);
  j.at("classifiers").get_to(r.classifiers);
  r.cells.clear();
  for (const auto& c : j.at("cells"))
    r.cells.push_back({parse_variant(c.at("variant").get<std::string>()),
                       c.at("classifier").get<std::string>(), c.get<MetricsCell>()});
  if (j.at("cluster").is_null()) r.cluster.reset();
  else r.cluster = j.at("cluster").get<ClusterModelResult>();
  j.at("ttests").get_to(r.ttests);
}

inline std::string report_to_json_string(const ExperimentReport& r) {
  return json(r).dump(2) + "\n";
}

inline ExperimentReport report_from_json_string(const std::string& text) {
  try {
    return json::parse(text).get<ExperimentReport>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  }
}

inline ExperimentReport read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json_string(ss.str());
}

// ---------------------------------------------------------------------------
// CSV grids

enum class ReportMetric { f1, kappa };

// Table-shaped grid: one row per classifier, one column per variant. Cells
// without a result are written as NA. Values are never rounded or clamped.
inline std::string report_grid_csv(const ExperimentReport& r, ReportMetric metric) {
  std::ostringstream out;
  out << "classifier";
  for (auto v : r.config.variants) out << ',' << to_string(v);
  out << '\n';
  for (const auto& name : r.classifiers) {
    out << csv::quote(name);
    for (auto v : r.config.variants) {
      const auto* cell = r.find(v, name);
      out << ',';
      if (!cell || !cell->ok()) {
        out << "NA";
        continue;
      }
      out << csv::format_number(metric == ReportMetric::f1 ? cell->metrics->f1_avg
                                                          : cell->metrics->kappa);
    }
    out << '\n';
  }
  return out.str();
}

// "out/report.csv" -> "out/report_kappa.csv"
inline std::string kappa_grid_path(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "_kappa.csv";
  return path.substr(0, dot) + "_kappa" + path.substr(dot);
}

enum class ReportFormat { json, csv };

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace detail

// json: the full nested report at `path`.
// csv: the F1 grid at `path` and the kappa grid next to it (kappa_grid_path).
inline void emit_report(const ExperimentReport& r, ReportFormat format, const std::string& path) {
  if (format == ReportFormat::json) {
    detail::write_text(path, report_to_json_string(r));
    return;
  }
  detail::write_text(path, report_grid_csv(r, ReportMetric::f1));
  detail::write_text(kappa_grid_path(path), report_grid_csv(r, ReportMetric::kappa));
}

// ---------------------------------------------------------------------------
// t-test tables

inline std::string format_ttest_table(const TTestEntry& e) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  constexpr std::size_t label_w = 30, col_w = 18;
  std::ostringstream out;
  out << "t-Test: Paired Two Sample for Means (" << e.metric << ": " << to_string(e.a) << " vs "
      << to_string(e.b) << ")\n";
  if (!e.result) {
    out << "  not available: " << e.error << "\n";
    return out.str();
  }
  const auto& r = *e.result;
  auto row = [&](const std::string& label, const std::string& a, const std::string& b = "") {
    out << pad(label, label_w) << pad(a, col_w) << b << '\n';
  };
  row("", std::string(to_string(e.a)), std::string(to_string(e.b)));
  row("Mean", num(r.mean_a), num(r.mean_b));
  row("Variance", num(r.var_a), num(r.var_b));
  row("Observations", std::to_string(r.n), std::to_string(r.n));
  row("Pearson Correlation", r.pearson_r ? num(*r.pearson_r) : "undefined");
  row("Hypothesized Mean Difference", num(r.hypothesized_difference));
  row("df", std::to_string(r.df));
  row("t Stat", num(r.t_stat));
  row("P(T<=t) one-tail", num(r.p_one_tail));
  row("t Critical one-tail", num(r.t_crit_one));
  row("P(T<=t) two-tail", num(r.p_two_tail));
  row("t Critical two-tail", num(r.t_crit_two));
  return out.str();
}

inline std::string format_ttest_tables(const ExperimentReport& r, std::string_view metric) {
  std::string out;
  for (const auto& e : r.ttests) {
    if (e.metric != metric) continue;
    if (!out.empty()) out += '\n';
    out += format_ttest_table(e);
  }
  return out;
}

}  // namespace cmodel
