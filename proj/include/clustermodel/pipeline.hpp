#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clustermodel/classifiers.hpp"
#include "clustermodel/clustering.hpp"
#include "clustermodel/data.hpp"
#include "clustermodel/error.hpp"
#include "clustermodel/evaluation.hpp"
#include "clustermodel/pca.hpp"
#include "clustermodel/stats.hpp"

namespace cmodel {

enum class Variant { raw, pca, cluster };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::raw: return "raw";
    case Variant::pca: return "pca";
    case Variant::cluster: return "cluster";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "raw") return Variant::raw;
  if (s == "pca") return Variant::pca;
  if (s == "cluster") return Variant::cluster;
  throw ParameterError("unknown variant '" + std::string(s) + "'");
}

struct ExperimentConfig {
  std::string input_path;
  std::string label_column;
  std::size_t k = 2;  // attribute clusters
  std::vector<ClassifierSpec> classifiers;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::vector<Variant> variants{Variant::raw, Variant::pca, Variant::cluster};
  double pca_variance = 0.95;
  F1Mode f1_mode = F1Mode::weighted;
  double alpha = 0.05;
  MissingPolicy missing = MissingPolicy::reject;
  std::size_t kmeans_max_iter = 100;

  void validate() const {
    if (variants.empty()) throw ParameterError("config: no variants selected");
    if (classifiers.empty()) throw ParameterError("config: no classifiers selected");
    if (folds < 2) throw ParameterError("config: folds must be at least 2");
    if (k < 1) throw ParameterError("config: k must be at least 1");
    if (!(pca_variance > 0.0 && pca_variance <= 1.0))
      throw ParameterError("config: pca variance must lie in (0,1]");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("config: alpha must lie in (0,1)");
    for (const auto& s : classifiers) s.validate();
  }

  bool has(Variant v) const {
    return std::find(variants.begin(), variants.end(), v) != variants.end();
  }
};

// Display names for the configured classifiers: the kind name, with "#2",
// "#3"... appended when a kind appears more than once.
inline std::vector<std::string> classifier_labels(const std::vector<ClassifierSpec>& specs) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    std::string name(to_string(specs[i].kind));
    std::size_t seen = 0;
    for (std::size_t j = 0; j < i; ++j)
      if (specs[j].kind == specs[i].kind) ++seen;
    if (seen > 0) name += "#" + std::to_string(seen + 1);
    out.push_back(std::move(name));
  }
  return out;
}

// Outcome of one (dataset, classifier) evaluation. Exactly one of
// `metrics` / `error` is meaningful.
struct MetricsCell {
  std::optional<MetricsRecord> metrics;
  std::string error;

  bool ok() const noexcept { return metrics.has_value(); }
  friend bool operator==(const MetricsCell&, const MetricsCell&) = default;
};

struct ClusterModelResult {
  std::size_t k = 0;
  std::vector<std::string> attributes;               // original attribute names
  std::vector<std::size_t> attribute_cluster;        // cluster id per attribute
  std::optional<std::size_t> label_cluster;
  std::optional<std::size_t> headline_cluster;       // label cluster, or nearest non-empty one
  std::vector<std::vector<std::string>> cluster_attributes;
  std::vector<bool> degenerate;                      // cluster left with no attributes
  double objective = 0.0;
  std::size_t iterations = 0;
  std::vector<std::vector<MetricsCell>> per_cluster;  // [cluster][classifier]
  std::vector<MetricsCell> headline;                  // headline cluster, per classifier
  std::vector<std::optional<std::size_t>> best_cluster;  // highest F1 cluster, per classifier

  friend bool operator==(const ClusterModelResult&, const ClusterModelResult&) = default;
};

namespace detail {

inline MetricsCell evaluate_cell(const LabeledDataset& ds, const ClassifierSpec& spec,
                                 const Folds& folds, F1Mode mode,
                                 const FoldPreprocessor& preproc = {}) {
  MetricsCell cell;
  try {
    cell.metrics = compute_metrics(cross_validate(ds, spec, folds, preproc), mode);
  } catch (const Error& e) {
    cell.error = e.what();
  }
  return cell;
}

inline FoldPreprocessor pca_preprocessor(double variance) {
  return [variance](const LabeledDataset& train_set) -> FittedTransform {
    auto model = fit_pca(train_set.matrix, variance);
    return [model = std::move(model)](const DataMatrix& m) { return project(model, m); };
  };
}

}  // namespace detail

// The attribute-clustering pipeline on one dataset:
//   1. append the class codes as one more column and min-max scale globally
//   2. transpose, so each attribute (and the class) is a point
//   3. k-means with Jaccard distance over those points
//   4-6. drop the class point, split the original columns by cluster
//   7-8. cross-validate every classifier on every cluster dataset
// The headline score per classifier is the cluster the class landed in. When
// the class point ends up alone in its cluster, the headline moves to the
// non-empty cluster whose centroid is nearest to the class point.
inline ClusterModelResult run_cluster_model(const LabeledDataset& dataset,
                                            const ExperimentConfig& config, const Folds& folds) {
  const auto& m = dataset.matrix;
  if (config.k > m.cols())
    throw ParameterError("cluster model: k=" + std::to_string(config.k) + " exceeds " +
                         std::to_string(m.cols()) + " attributes");

  std::vector<double> values;
  values.reserve(m.rows() * (m.cols() + 1));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    values.insert(values.end(), row.begin(), row.end());
    values.push_back(static_cast<double>(dataset.labels[r]));
  }
  auto names = m.col_names();
  names.push_back(dataset.label_name);
  const DataMatrix with_label(m.rows(), m.cols() + 1, std::move(values), std::move(names));

  const DataMatrix rd1 = transpose(min_max_scale(with_label));
  const auto clustered = kmeans(rd1, config.k, config.seed, {config.kmeans_max_iter});
  const auto attrs = detach_point(clustered, m.cols());
  const auto partition = split_by_cluster(dataset, attrs);

  ClusterModelResult out;
  out.k = config.k;
  out.attributes = m.col_names();
  out.attribute_cluster = attrs.assignment;
  out.label_cluster = attrs.label_cluster;
  out.objective = clustered.objective;
  out.iterations = clustered.iterations;
  for (std::size_t j = 0; j < config.k; ++j) {
    const auto& cluster_ds = partition.clusters[j];
    out.cluster_attributes.push_back(cluster_ds.matrix.col_names());
    out.degenerate.push_back(cluster_ds.matrix.cols() == 0);
    std::vector<MetricsCell> cells;
    for (const auto& spec : config.classifiers) {
      if (out.degenerate.back())
        cells.push_back({std::nullopt, "degenerate cluster: no attributes"});
      else
        cells.push_back(detail::evaluate_cell(cluster_ds, spec, folds, config.f1_mode));
    }
    out.per_cluster.push_back(std::move(cells));
  }

  out.headline_cluster = out.label_cluster;
  if (out.degenerate[*out.label_cluster]) {
    const auto label_point = rd1.row(m.cols());
    double nearest = 0.0;
    out.headline_cluster.reset();
    for (std::size_t j = 0; j < config.k; ++j) {
      if (out.degenerate[j]) continue;
      const double d = jaccard_distance(label_point, clustered.centroids[j]);
      if (!out.headline_cluster || d < nearest) {
        out.headline_cluster = j;
        nearest = d;
      }
    }
  }

  for (std::size_t c = 0; c < config.classifiers.size(); ++c) {
    out.headline.push_back(out.per_cluster[*out.headline_cluster][c]);
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < config.k; ++j) {
      const auto& cell = out.per_cluster[j][c];
      if (cell.ok() && (!best || cell.metrics->f1_avg > out.per_cluster[*best][c].metrics->f1_avg))
        best = j;
    }
    out.best_cluster.push_back(best);
  }
  return out;
}

inline ClusterModelResult run_cluster_model(const LabeledDataset& dataset,
                                            const ExperimentConfig& config) {
  return run_cluster_model(dataset, config,
                           stratified_folds(dataset, config.folds, config.seed));
}

struct ReportCell {
  Variant variant = Variant::raw;
  std::string classifier;
  MetricsCell cell;

  friend bool operator==(const ReportCell&, const ReportCell&) = default;
};

struct TTestEntry {
  std::string metric;  // "f1" or "kappa"
  Variant a = Variant::raw;
  Variant b = Variant::cluster;
  std::vector<std::string> classifiers;  // rows that had a value in both columns
  std::vector<double> column_a, column_b;
  std::optional<TTestResult> result;
  std::string error;

  friend bool operator==(const TTestEntry&, const TTestEntry&) = default;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::string> classifiers;
  std::vector<ReportCell> cells;  // variant-major, in configured order
  std::optional<ClusterModelResult> cluster;
  std::vector<TTestEntry> ttests;

  const MetricsCell* find(Variant v, std::string_view classifier) const {
    for (const auto& c : cells)
      if (c.variant == v && c.classifier == classifier) return &c.cell;
    return nullptr;
  }
};

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto spec_eq = [](const ClassifierSpec& x, const ClassifierSpec& y) {
    return x.kind == y.kind && x.hyperparameters == y.hyperparameters && x.seed == y.seed;
  };
  return a.input_path == b.input_path && a.label_column == b.label_column && a.k == b.k &&
         a.folds == b.folds && a.seed == b.seed && a.variants == b.variants &&
         a.pca_variance == b.pca_variance && a.f1_mode == b.f1_mode && a.alpha == b.alpha &&
         a.missing == b.missing && a.kmeans_max_iter == b.kmeans_max_iter &&
         std::equal(a.classifiers.begin(), a.classifiers.end(), b.classifiers.begin(),
                    b.classifiers.end(), spec_eq);
}

inline bool operator==(const ExperimentReport& a, const ExperimentReport& b) {
  return a.config == b.config && a.classifiers == b.classifiers && a.cells == b.cells &&
         a.cluster == b.cluster && a.ttests == b.ttests;
}

// Paired t-tests between variant columns, in the order raw-vs-cluster,
// pca-vs-cluster, raw-vs-pca, each on F1 then kappa.
inline std::vector<TTestEntry> variant_ttests(const ExperimentReport& report) {
  static constexpr std::pair<Variant, Variant> pairs[] = {
      {Variant::raw, Variant::cluster}, {Variant::pca, Variant::cluster}, {Variant::raw, Variant::pca}};
  std::vector<TTestEntry> out;
  for (const auto& [va, vb] : pairs) {
    if (!report.config.has(va) || !report.config.has(vb)) continue;
    for (const char* metric : {"f1", "kappa"}) {
      TTestEntry e;
      e.metric = metric;
      e.a = va;
      e.b = vb;
      for (const auto& name : report.classifiers) {
        const auto* ca = report.find(va, name);
        const auto* cb = report.find(vb, name);
        if (!ca || !cb || !ca->ok() || !cb->ok()) continue;
        e.classifiers.push_back(name);
        const bool f1 = e.metric == "f1";
        e.column_a.push_back(f1 ? ca->metrics->f1_avg : ca->metrics->kappa);
        e.column_b.push_back(f1 ? cb->metrics->f1_avg : cb->metrics->kappa);
      }
      if (e.column_a.size() < 2) {
        e.error = "fewer than two classifiers with results in both variants";
      } else {
        try {
          e.result = paired_t_test(e.column_a, e.column_b, report.config.alpha);
        } catch (const Error& err) {
          e.error = err.what();
        }
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

// Runs every configured variant for every classifier over one shared set of
// stratified folds, then the variant t-tests.
inline ExperimentReport run_experiment(const LabeledDataset& dataset,
                                       const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  report.classifiers = classifier_labels(config.classifiers);
  const Folds folds = stratified_folds(dataset, config.folds, config.seed);

  for (Variant v : config.variants) {
    switch (v) {
      case Variant::raw:
      case Variant::pca: {
        FoldPreprocessor pre;
        if (v == Variant::pca) pre = detail::pca_preprocessor(config.pca_variance);
        for (std::size_t c = 0; c < config.classifiers.size(); ++c)
          report.cells.push_back({v, report.classifiers[c],
                                  detail::evaluate_cell(dataset, config.classifiers[c], folds,
                                                        config.f1_mode, pre)});
        break;
      }
      case Variant::cluster: {
        try {
          report.cluster = run_cluster_model(dataset, config, folds);
          for (std::size_t c = 0; c < config.classifiers.size(); ++c)
            report.cells.push_back({v, report.classifiers[c], report.cluster->headline[c]});
        } catch (const Error& e) {
          for (std::size_t c = 0; c < config.classifiers.size(); ++c)
            report.cells.push_back({v, report.classifiers[c], {std::nullopt, e.what()}});
        }
        break;
      }
    }
  }
  report.ttests = variant_ttests(report);
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto dataset = load_csv(config.input_path, config.label_column, config.missing);
  return run_experiment(dataset, config);
}

}  // namespace cmodel
