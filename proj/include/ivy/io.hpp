// File formats: dataset CSV (header y,x,w1..wm, values -1/+1 or 0/1 with the
// encoding flag), ground-truth sidecar CSV, and versioned JSON for models,
// reports, and run configuration. Numbers are printed with round-trip
// precision so outputs diff cleanly.
#pragma once

#include "ivy/core.hpp"
#include "ivy/datagen.hpp"
#include "ivy/structlearn.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ivy {

void write_dataset_csv(const std::string& path, const Dataset& data, bool zero_one = false);
Dataset read_dataset_csv(const std::string& path, bool zero_one = false);

// Custom data-generating processes as JSON: priors, valid groups (either
// {"accuracies": [...]} or {"z_coupling": [...], "pair_coupling": [[...]]}),
// invalid accuracies, noise count, and the x/y tables.
void write_spec_json(const std::string& path, const SyntheticSpec& spec);
SyntheticSpec read_spec_json(const std::string& path);

// Plain matrix dump (one CSV row per matrix row, round-trip precision).
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix);

// Sidecar columns z,c,valid_mask; the mask bitstring is carried on the first
// row only. Kept in a separate file so the pipeline cannot consume it.
void write_truth_csv(const std::string& path, const SampleResult& sample);

struct FittedModel {
  CandidateGraph graph;
  Model model;
  Hyperparams hyper;
  bool selection_qualified = true;
  Diagnostics diagnostics;
};

void write_model_json(const std::string& path, const FittedModel& fitted);
FittedModel read_model_json(const std::string& path);

void write_reports_json(const std::string& path, const std::vector<EffectReport>& reports,
                        const Diagnostics& diagnostics);

struct RunConfig {
  std::uint64_t seed = 0;
  int replicates = 1000;
  double prior_z = 0.5;
  int xi = 2;
  long n = 100000;
  std::string preset_name;
  std::string spec_path;    // custom generating process (overrides preset)
  std::string dump_prefix;  // fit: write <prefix>.S.csv/.L.csv/.ell.csv
  std::string input;        // dataset csv
  std::string model_path;   // fitted model json
  std::string out;          // command output path
  std::string truth_out;    // ground-truth sidecar path (generate)
  std::vector<std::string> methods{"ivy"};
  bool zero_one = false;
  bool reuse_structure = true;
  bool unbiased_moment = false;
  std::optional<double> lambda, gamma, t1, t2;  // all four given: skip model selection
  std::vector<double> lambda_grid, gamma_grid;  // empty: defaults
  // evaluate
  std::string eval_kind;  // auc | calibration | scaling | robustness
  int datasets = 200;
  int seeds = 10;
  std::vector<long> n_list;
  std::vector<double> accuracies;
  // power
  double power_n = 10000.0;
  double power_p1 = 0.5;
  double power_alpha = 0.0;
  double power_beta = 0.0;
  double power_level = 0.05;
};

RunConfig read_config_json(const std::string& path);

}  // namespace ivy
