// Evaluation protocols: valid/invalid classification AUC, confidence
// interval calibration over repeated null datasets, parameter-error scaling
// curves, and the invalid-summary robustness sweep.
#pragma once

#include "ivy/core.hpp"
#include "ivy/datagen.hpp"
#include "ivy/structlearn.hpp"

#include <optional>
#include <vector>

namespace ivy {

// Mann-Whitney: fraction of (positive, negative) pairs ordered correctly,
// ties counted 1/2. Throws kSingleClass unless both classes are present.
double auc(const std::vector<double>& scores, const std::vector<bool>& labels);

// Generates data from the spec, runs structure learning, and scores
// candidates by |Sigma ell| against ground-truth validity. Model selection
// with the default grids when hyper is not given.
double validity_auc(const SyntheticSpec& spec, long n, std::optional<Hyperparams> hyper,
                    int xi, std::uint64_t seed, Diagnostics* diags = nullptr);

struct CalibrationResult {
  double coverage = 0.0;
  int datasets = 0;
  int failures = 0;  // datasets where the pipeline failed (counted uncovered)
};

// Fraction of generated null datasets whose 95% CI covers 0.
CalibrationResult calibration(const SyntheticSpec& spec, int datasets, long n, int replicates,
                              std::uint64_t seed);

struct ScalingPoint {
  long n = 0;
  double mean_error = 0.0;
  std::vector<double> errors;  // per seed
};

// || mu_hat - mu* || per sample size, averaged over seeds. Uses the spec's
// true graph; with misspecify_ci the dependency edges are ignored so every
// pair is treated as conditionally independent.
std::vector<ScalingPoint> scaling_curve(const SyntheticSpec& spec, const std::vector<long>& ns,
                                        int seeds, std::uint64_t seed,
                                        bool misspecify_ci = false);

struct SweepPoint {
  double accuracy = 0.0;
  EffectReport ivy;
  EffectReport uas;
  EffectReport was;
};

// Ivy vs allele scores on the invalid-summary presets across accuracies.
std::vector<SweepPoint> robustness_sweep(const std::vector<double>& accuracies, long n,
                                         int replicates, std::uint64_t seed);

}  // namespace ivy
