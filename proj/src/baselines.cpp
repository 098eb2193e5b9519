#include "ivy/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ivy {

namespace {

constexpr double kRidge = 1e-6;


double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

Eigen::VectorXd map_scores(Eigen::VectorXd raw, ScoreMap map) {
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  if (hi == lo) return Eigen::VectorXd::Constant(raw.size(), 0.5);
  if (map == ScoreMap::kMinMax) return (raw.array() - lo) / (hi - lo);
  // logistic link on the standardized score
  const double mean = raw.mean();
  const double sd = std::sqrt((raw.array() - mean).square().sum() /
                              static_cast<double>(raw.size()));
  return raw.unaryExpr([&](double s) { return sigmoid((s - mean) / sd); });
}

}  // namespace

Eigen::VectorXd uas_summary(const BinMatrix& W, ScoreMap map) {
  Eigen::VectorXd raw(W.rows());
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    raw[i] = static_cast<double>(W.row(i).cast<int>().sum());
  return map_scores(std::move(raw), map);
}

Eigen::VectorXd uas_summary(const BinMatrix& W, const std::vector<int>& rows, ScoreMap map) {
  Eigen::VectorXd raw(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    raw[static_cast<Eigen::Index>(i)] = static_cast<double>(W.row(rows[i]).cast<int>().sum());
  return map_scores(std::move(raw), map);
}

Eigen::VectorXd was_weights(const Dataset& data, const std::vector<int>& train_rows,
                            Diagnostics* diags) {
  const auto m = data.m();
  if (static_cast<Eigen::Index>(train_rows.size()) < m + 2)
    throw Error(ErrorCode::kInvalidArgument, "weighted score needs at least m + 2 training rows");

  const auto nt = static_cast<Eigen::Index>(train_rows.size());
  Eigen::MatrixXd design(nt, m + 1);
  Eigen::VectorXd ones(nt);
  for (Eigen::Index r = 0; r < nt; ++r) {
    design(r, 0) = 1.0;
    for (Eigen::Index j = 0; j < m; ++j)
      design(r, j + 1) = static_cast<double>(data.W(train_rows[static_cast<std::size_t>(r)], j));
    ones[r] = data.x[train_rows[static_cast<std::size_t>(r)]] > 0 ? 1.0 : 0.0;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m + 1);
  constexpr int kMaxIter = 120;
  constexpr double kTol = 1e-8;
  bool capped = false;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd mu(nt), w(nt);
    for (Eigen::Index r = 0; r < nt; ++r) {
      mu[r] = sigmoid(eta[r]);
      w[r] = std::max(mu[r] * (1.0 - mu[r]), 1e-12);
    }
    const Eigen::MatrixXd weighted = design.transpose() * w.asDiagonal() * design +
                                     kRidge * Eigen::MatrixXd::Identity(m + 1, m + 1);
    const Eigen::VectorXd grad = design.transpose() * (ones - mu) - kRidge * beta;
    const Eigen::VectorXd step = weighted.ldlt().solve(grad);
    beta += step;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      if (std::abs(beta[j]) > kSlopeCap) {
        beta[j] = beta[j] > 0 ? kSlopeCap : -kSlopeCap;
        capped = true;
      }
    if (step.cwiseAbs().maxCoeff() <= kTol) break;
  }
  if (capped && diags) diags->push_back("Separation: weighted-score coefficients capped at 30");
  return beta;
}

Eigen::VectorXd was_summary(const Dataset& data, const std::vector<int>& train_rows,
                            const std::vector<int>& eval_rows, Diagnostics* diags) {
  const Eigen::VectorXd beta = was_weights(data, train_rows, diags);
  const auto m = data.m();
  Eigen::VectorXd p(static_cast<Eigen::Index>(eval_rows.size()));
  for (std::size_t i = 0; i < eval_rows.size(); ++i) {
    double t = beta[0];
    for (Eigen::Index j = 0; j < m; ++j)
      t += beta[j + 1] * static_cast<double>(data.W(eval_rows[i], j));
    p[static_cast<Eigen::Index>(i)] = sigmoid(t);
  }
  return p;
}

EffectReport uas_effect(const Dataset& data, const EstimateOptions& options) {
  const Summarizer summarizer = [](const Dataset& d, const std::vector<int>&,
                                   const std::vector<int>& eval, Diagnostics&) {
    return uas_summary(d.W, eval);
  };
  return estimate_with_summary(data, summarizer, "uas", options);
}

EffectReport was_effect(const Dataset& data, const EstimateOptions& options) {
  const Summarizer summarizer = [](const Dataset& d, const std::vector<int>& train,
                                   const std::vector<int>& eval, Diagnostics& local) {
    return was_summary(d, train, eval, &local);
  };
  return estimate_with_summary(data, summarizer, "was", options);
}

EffectReport association(const Dataset& data, const EstimateOptions& options) {
  if (options.replicates < 1)
    throw Error(ErrorCode::kInvalidArgument, "replicates must be >= 1");
  if (data.n() < 4) throw Error(ErrorCode::kInvalidArgument, "need at least 4 samples");

  std::vector<double> slopes;
  long failed = 0;
  // Same half-split protocol as the summary methods, fitted on the
  // estimation half for comparability.
  for (int r = 0; r < options.replicates; ++r) {
    const auto [train, eval] = replicate_split(data.n(), options.seed, r);
    (void)train;
    try {
      slopes.push_back(logistic_fit(data.y, data.x, eval).slope);
    } catch (const Error&) {
      ++failed;
    }
  }
  Diagnostics diags;
  if (failed > 0)
    diags.push_back("ReplicateFailed: dropped " + std::to_string(failed) + " replicates");
  if (slopes.empty())
    throw Error(ErrorCode::kAllReplicatesFailed, "all association replicates failed");
  return make_report("association", std::move(slopes), data.n(), std::move(diags));
}

}  // namespace ivy
