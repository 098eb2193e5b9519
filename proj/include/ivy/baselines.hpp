// Allele-score baselines (unweighted and weighted) and the raw observational
// association, all feeding the same half-split replicate protocol.
#pragma once

#include "ivy/core.hpp"
#include "ivy/effect.hpp"

#include <vector>

namespace ivy {

enum class ScoreMap { kMinMax, kLogistic };

// Row sums min-max normalized into [0,1]; constant scores map to 0.5. The
// logistic map (sigmoid of the standardized score) is available behind the
// flag but has no reference default.
Eigen::VectorXd uas_summary(const BinMatrix& W, ScoreMap map = ScoreMap::kMinMax);
Eigen::VectorXd uas_summary(const BinMatrix& W, const std::vector<int>& rows,
                            ScoreMap map = ScoreMap::kMinMax);

// Multivariable logistic regression of x on all candidates, fitted on the
// training rows (IRLS with ridge 1e-6, coefficients capped at ±30), fitted
// probabilities evaluated on eval_rows.
Eigen::VectorXd was_summary(const Dataset& data, const std::vector<int>& train_rows,
                            const std::vector<int>& eval_rows, Diagnostics* diags = nullptr);

// The weighted score's fitted coefficients: intercept first, then one weight
// per candidate.
Eigen::VectorXd was_weights(const Dataset& data, const std::vector<int>& train_rows,
                            Diagnostics* diags = nullptr);

EffectReport uas_effect(const Dataset& data, const EstimateOptions& options);
EffectReport was_effect(const Dataset& data, const EstimateOptions& options);

// Logistic slope of y on x per replicate half; a proxy for the confounded
// association.
EffectReport association(const Dataset& data, const EstimateOptions& options);

}  // namespace ivy
