// Declarative synthetic data-generating processes over binary variables
// (latent z, confounder c, candidates w, risk factor x, outcome y), with an
// exact joint-enumeration oracle for small models and streaming sampling for
// large n. Presets reproduce the library's reference experiments.
#pragma once

#include "ivy/core.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ivy {

// One group of valid candidates. Either conditionally independent members,
// each agreeing with z at its own accuracy, or a dependent clique whose
// conditional P(w_C | z) is the Ising family
//   P(w_C | z) ∝ exp( sum_j alpha_j w_j z + sum_{i<j} beta_ij w_i w_j ).
struct CliqueGroup {
  bool dependent = false;
  std::vector<double> accuracies;  // independent case: P(w_j = z) per member
  Eigen::VectorXd z_coupling;      // dependent case: alpha_j
  Eigen::MatrixXd pair_coupling;   // dependent case: beta_ij, symmetric, zero diagonal

  int size() const {
    return dependent ? static_cast<int>(z_coupling.size())
                     : static_cast<int>(accuracies.size());
  }

  static CliqueGroup independent(std::vector<double> accs);
  static CliqueGroup clique(Eigen::VectorXd z_coupling, Eigen::MatrixXd pair_coupling);
};

// Full data-generating process. Candidate order: valid groups in order, then
// confounder-tied invalid candidates, then pure-noise candidates.
//
// x_table and y_table hold P(x=1 | z,c) and P(y=1 | x,c) indexed by
// table_index(first, c).
struct SyntheticSpec {
  double prior_z = 0.5;
  // P(c = 1 | z = +1) and P(c = 1 | z = -1). Equal values make c independent
  // of z with that marginal.
  double c_given_z_pos = 0.5;
  double c_given_z_neg = 0.5;
  std::vector<CliqueGroup> valid_groups;
  std::vector<double> invalid_accuracies;  // P(w_k = c)
  int noise_count = 0;
  std::array<double, 4> x_table{0.5, 0.5, 0.5, 0.5};
  std::array<double, 4> y_table{0.5, 0.5, 0.5, 0.5};

  int valid_count() const;
  int total_candidates() const;
  double prior_c() const;  // marginal P(c = 1)
  std::vector<bool> valid_mask() const;
  CandidateGraph true_graph() const;  // ground-truth validity and clique edges
  void check() const;                 // throws on invariant violations
};

inline int table_index(int first_pm, int c_pm) {
  return ((first_pm > 0) ? 2 : 0) | ((c_pm > 0) ? 1 : 0);
}

struct SampleResult {
  Dataset data;
  BinVector z;
  BinVector c;
  std::vector<bool> valid;  // per candidate
};

// Draws n joint samples; deterministic given (spec, n, seed) and independent
// of evaluation order (per-sample streams).
SampleResult sample(const SyntheticSpec& spec, long n, std::uint64_t seed);

// Exact joint over (z, c, w_0..w_{m-1}, x, y). State bits: bit v set means
// variable v equals +1; variable order is z, c, candidates, x, y.
struct ExactDistribution {
  int m = 0;
  int n_vars = 0;
  std::vector<double> prob;  // size 2^n_vars

  int var_z() const { return 0; }
  int var_c() const { return 1; }
  int var_w(int j) const { return 2 + j; }
  int var_x() const { return 2 + m; }
  int var_y() const { return 3 + m; }

  // E[prod of the named ±1 variables].
  double expectation(const std::vector<int>& vars) const;
  double p_positive(int var) const;               // P(var = +1)
  double p_given(int var, int cond, int cond_sign) const;  // P(var=+1 | cond=sign)
};

// Brute-force oracle; throws kTooManyVariables above 22 total variables.
ExactDistribution enumerate_joint(const SyntheticSpec& spec);

struct ExactMoments {
  Eigen::VectorXd mu;   // E[w_j z], all candidates
  Eigen::MatrixXd O;    // E[w w^T]
  double beta_zx = 0.0;  // population logistic slope of x on z
  double beta_zy = 0.0;  // population logistic slope of y on z
};

ExactMoments exact_moments(const ExactDistribution& dist);

// Named experiment presets. Accepted names: null_fig5a, effect_fig5b,
// varying_accuracy, dependency_clique, calibration_null, and invalid_z:<acc>
// (e.g. "invalid_z:0.55").
SyntheticSpec preset(const std::string& name);
SyntheticSpec invalid_z_preset(double w9_accuracy);

// The conditional table P(w_C | z) of a group, size 2^|C|, lexicographic
// (bit k set <=> member k = +1). Shared by the sampler and the enumerator.
Eigen::VectorXd group_conditional(const CliqueGroup& group, int z_sign);

}  // namespace ivy
