// Command-line front end: run experiments, print t-test tables, write
// synthetic datasets.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clustermodel/clustermodel.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// "knn.k=7" -> (knn, k, 7)
void apply_param(std::vector<cmodel::ClassifierSpec>& specs, const std::string& text) {
  const auto dot = text.find('.');
  const auto eq = text.find('=');
  if (dot == std::string::npos || eq == std::string::npos || eq < dot)
    throw cmodel::ParameterError("--param expects kind.name=value, got '" + text + "'");
  const auto kind = cmodel::parse_classifier_kind(text.substr(0, dot));
  const auto name = text.substr(dot + 1, eq - dot - 1);
  double value = 0.0;
  try {
    value = std::stod(text.substr(eq + 1));
  } catch (const std::exception&) {
    throw cmodel::ParameterError("--param value is not a number: '" + text + "'");
  }
  bool used = false;
  for (auto& s : specs)
    if (s.kind == kind) {
      s.hyperparameters[name] = value;
      used = true;
    }
  if (!used) throw cmodel::ParameterError("--param for a classifier not selected: '" + text + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute-clustering preprocessing and classifier comparison"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Cross-validate classifiers on raw / PCA / cluster variants");
  std::string input, label_col, classifiers = "knn,naive_bayes_kernel,decision_tree,perceptron,mlp,linear_svm,logistic_regression,lda";
  std::string variants = "raw,pca,cluster", f1_mode = "weighted", out_path, format = "json",
              missing = "reject";
  std::size_t k = 2, folds = 10, max_iter = 100;
  std::uint64_t seed = 0;
  double pca_variance = 0.95, alpha = 0.05;
  std::vector<std::string> params;
  run->add_option("--input", input, "Input CSV")->required();
  run->add_option("--label-col", label_col, "Name of the class column")->required();
  run->add_option("--k", k, "Number of attribute clusters")->capture_default_str();
  run->add_option("--classifiers", classifiers, "Comma-separated classifier kinds")
      ->capture_default_str();
  run->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
  run->add_option("--seed", seed, "Seed for folds, clustering and learners")->capture_default_str();
  run->add_option("--variants", variants, "Comma-separated subset of raw,pca,cluster")
      ->capture_default_str();
  run->add_option("--pca-variance", pca_variance, "Variance fraction kept by PCA")
      ->capture_default_str();
  run->add_option("--f1-mode", f1_mode, "weighted|macro")
      ->check(CLI::IsMember({"weighted", "macro"}))
      ->capture_default_str();
  run->add_option("--alpha", alpha, "Significance level for t-tests")->capture_default_str();
  run->add_option("--missing", missing, "reject|impute")
      ->check(CLI::IsMember({"reject", "impute"}))
      ->capture_default_str();
  run->add_option("--max-iter", max_iter, "k-means iteration cap")->capture_default_str();
  run->add_option("--param", params, "Hyperparameter override kind.name=value (repeatable)");
  run->add_option("--out", out_path, "Output path")->required();
  run->add_option("--format", format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  // compare
  auto* compare = app.add_subcommand("compare", "Print t-test tables from a JSON report");
  std::string report_path, metric = "f1";
  compare->add_option("--report", report_path, "JSON report written by `run`")->required();
  compare->add_option("--metric", metric, "f1|kappa")
      ->check(CLI::IsMember({"f1", "kappa"}))
      ->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Write a planted-structure dataset as CSV");
  cmodel::SyntheticConfig syn;
  std::string synth_out;
  synth->add_option("--instances", syn.n_instances)->capture_default_str();
  synth->add_option("--groups", syn.n_groups)->capture_default_str();
  synth->add_option("--attrs-per-group", syn.attrs_per_group)->capture_default_str();
  synth->add_option("--noise-attrs", syn.noise_attrs)->capture_default_str();
  synth->add_option("--imbalance", syn.imbalance, "Majority-class share")->capture_default_str();
  synth->add_option("--seed", syn.seed)->capture_default_str();
  synth->add_option("--out", synth_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      cmodel::ExperimentConfig cfg;
      cfg.input_path = input;
      cfg.label_column = label_col;
      cfg.k = k;
      cfg.folds = folds;
      cfg.seed = seed;
      cfg.pca_variance = pca_variance;
      cfg.alpha = alpha;
      cfg.f1_mode = cmodel::parse_f1_mode(f1_mode);
      cfg.missing = missing == "reject" ? cmodel::MissingPolicy::reject
                                        : cmodel::MissingPolicy::impute_mode;
      cfg.kmeans_max_iter = max_iter;
      cfg.variants.clear();
      for (const auto& v : split_list(variants)) cfg.variants.push_back(cmodel::parse_variant(v));
      for (const auto& c : split_list(classifiers))
        cfg.classifiers.push_back({cmodel::parse_classifier_kind(c), {}, seed});
      for (const auto& p : params) apply_param(cfg.classifiers, p);
      cfg.validate();

      const auto report = cmodel::run_experiment(cfg);
      cmodel::emit_report(report,
                          format == "json" ? cmodel::ReportFormat::json : cmodel::ReportFormat::csv,
                          out_path);
      std::cout << cmodel::report_grid_csv(report, cmodel::ReportMetric::f1);
    } else if (*compare) {
      const auto report = cmodel::read_report(report_path);
      const auto text = cmodel::format_ttest_tables(report, metric);
      if (text.empty()) {
        std::cerr << "report contains no " << metric << " t-tests (needs two or more variants)\n";
        return kData;
      }
      std::cout << text;
    } else if (*synth) {
      cmodel::write_csv(cmodel::generate_synthetic(syn), synth_out);
    }
  } catch (const cmodel::ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const cmodel::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const cmodel::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
