// Estimation phase: univariate logistic regressions, the Wald ratio,
// probabilistic summary sampling, the half-split replicate protocol, and the
// normal-approximation power estimator.
#pragma once

#include "ivy/core.hpp"
#include "ivy/rng.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ivy {

struct LogisticFit {
  double intercept = 0.0;
  double slope = 0.0;
  bool converged = false;
  int iterations = 0;
  bool separated = false;  // |slope| capped at the separation bound
};

inline constexpr double kSlopeCap = 30.0;

// Maximum-likelihood intercept + slope of P(target=1 | covariate) by IRLS.
// Both vectors are ±1; complete or quasi-separation caps the slope at ±30.
LogisticFit logistic_fit(const BinVector& target, const BinVector& covariate);
LogisticFit logistic_fit(const BinVector& target, const BinVector& covariate,
                         const std::vector<int>& rows);

// fit_y.slope / fit_x.slope; throws kWeakDenominator below beta_min.
double wald_ratio(const LogisticFit& fit_y, const LogisticFit& fit_x, double beta_min = 1e-3);

// Entry i is +1 with probability p[i], as a pure function of (seed, i).
BinVector sample_summary(const Eigen::VectorXd& p, std::uint64_t seed);

struct EstimateOptions {
  int replicates = 1000;
  std::uint64_t seed = 0;
  double prior_z = 0.5;
  double beta_min = 1e-3;
  bool unbiased_moment = false;
};

// Produces per-evaluation-row P(summary = +1): fitted on the training half,
// evaluated on the estimation half.
using Summarizer = std::function<Eigen::VectorXd(
    const Dataset& data, const std::vector<int>& train_rows,
    const std::vector<int>& eval_rows, Diagnostics& diags)>;

// The replicate's random half split: (train, eval). Deterministic in
// (n, seed, replicate).
std::pair<std::vector<int>, std::vector<int>> replicate_split(Eigen::Index n,
                                                              std::uint64_t seed, int replicate);

// Half-split replicate engine: per replicate, rows are shuffled and split,
// the summarizer is fitted on one half and a ±1 summary is sampled on the
// other, and the Wald ratio of the two logistic fits is recorded. Replicates
// hitting weak denominators or fit failures are dropped with a diagnostic.
EffectReport estimate_with_summary(const Dataset& data, const Summarizer& summarizer,
                                   const std::string& method, const EstimateOptions& options);

// The structure (valid set and cliques) is taken as given; parameters and
// clique conditionals are re-learned on each replicate's training half.
EffectReport estimate_effect(const Dataset& data, const CandidateGraph& graph,
                             const EstimateOptions& options);

// Statistical power of the Wald estimator at significance `level`:
// 1 - Phi(zeta_{level/2} - sqrt(n p1 p0) |alpha_xy| |beta_zx|).
double power(double n, double p1, double p0, double alpha_xy, double beta_zx, double level);

double normal_cdf(double x);
double normal_quantile(double p);  // inverse of normal_cdf

}  // namespace ivy
