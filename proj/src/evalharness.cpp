#include "ivy/evalharness.hpp"

#include "ivy/baselines.hpp"
#include "ivy/effect.hpp"
#include "ivy/paramlearn.hpp"
#include "ivy/rng.hpp"

#include <algorithm>
#include <cmath>

namespace ivy {

namespace {

std::uint64_t harness_seed(std::uint64_t seed, std::uint64_t index) {
  return detail::mix64(detail::mix64(detail::mix64(seed) +
                                     static_cast<std::uint64_t>(RngDomain::kHarness)) +
                       index);
}

// Structure learning with model selection over the default grids.
CandidateGraph learn_structure_selected(const BinMatrix& W, int xi, Diagnostics* diags) {
  const ModelSelection sel =
      select_model(W, default_lambda_grid(W.rows(), W.cols()), default_gamma_grid(), xi, diags);
  return structure_learn(W, sel.selected, diags);
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorCode::kShapeMismatch, "auc inputs disagree in length");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i)
    (labels[i] ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty())
    throw Error(ErrorCode::kSingleClass, "auc requires both classes present");

  double correct = 0.0;
  for (double p : pos)
    for (double q : neg) {
      if (p > q)
        correct += 1.0;
      else if (p == q)
        correct += 0.5;
    }
  return correct / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double validity_auc(const SyntheticSpec& spec, long n, std::optional<Hyperparams> hyper,
                    int xi, std::uint64_t seed, Diagnostics* diags) {
  if (spec.valid_count() == 0 ||
      spec.total_candidates() == spec.valid_count())
    throw Error(ErrorCode::kSingleClass, "spec needs both valid and invalid candidates");

  const SampleResult sr = sample(spec, n, seed);
  Eigen::VectorXd scores;
  if (hyper) {
    Diagnostics local;
    const Eigen::MatrixXd sigma = sample_covariance(sr.data.W, &local);
    const DecompositionResult dec = decompose(sigma, hyper->lambda, hyper->gamma);
    scores = (sigma * dec.ell).cwiseAbs();
  } else {
    const ModelSelection sel = select_model(
        sr.data.W, default_lambda_grid(n, sr.data.m()), default_gamma_grid(), xi, diags);
    scores = sel.scores;
  }

  std::vector<double> s(scores.data(), scores.data() + scores.size());
  return auc(s, sr.valid);
}

CalibrationResult calibration(const SyntheticSpec& spec, int datasets, long n, int replicates,
                              std::uint64_t seed) {
  CalibrationResult out;
  out.datasets = datasets;
  int covered = 0;
  for (int d = 0; d < datasets; ++d) {
    const std::uint64_t dseed = harness_seed(seed, static_cast<std::uint64_t>(d));
    try {
      const SampleResult sr = sample(spec, n, dseed);
      Diagnostics diags;
      const CandidateGraph graph = learn_structure_selected(sr.data.W, 2, &diags);
      EstimateOptions opts;
      opts.replicates = replicates;
      opts.seed = dseed + 1;
      const EffectReport report = estimate_effect(sr.data, graph, opts);
      if (report.ci_low <= 0.0 && 0.0 <= report.ci_high) ++covered;
    } catch (const Error&) {
      ++out.failures;  // no interval; counts as uncovered
    }
  }
  out.coverage = static_cast<double>(covered) / static_cast<double>(datasets);
  return out;
}

std::vector<ScalingPoint> scaling_curve(const SyntheticSpec& spec, const std::vector<long>& ns,
                                        int seeds, std::uint64_t seed, bool misspecify_ci) {
  CandidateGraph graph = spec.true_graph();
  if (misspecify_ci) graph = CandidateGraph::from_edges(graph.valid, {});

  const ExactMoments truth = exact_moments(enumerate_joint(spec));
  Eigen::VectorXd mu_star(static_cast<Eigen::Index>(graph.valid.size()));
  for (std::size_t i = 0; i < graph.valid.size(); ++i)
    mu_star[static_cast<Eigen::Index>(i)] = truth.mu[graph.valid[i]];

  std::vector<ScalingPoint> out;
  for (long n : ns) {
    ScalingPoint point;
    point.n = n;
    for (int s = 0; s < seeds; ++s) {
      const SampleResult sr =
          sample(spec, n, harness_seed(seed, static_cast<std::uint64_t>(s)));
      const Model model = param_learn(sr.data.W, graph);
      point.errors.push_back((model.mu - mu_star).norm());
    }
    point.mean_error = 0.0;
    for (double e : point.errors) point.mean_error += e;
    point.mean_error /= static_cast<double>(point.errors.size());
    out.push_back(std::move(point));
  }
  return out;
}

std::vector<SweepPoint> robustness_sweep(const std::vector<double>& accuracies, long n,
                                         int replicates, std::uint64_t seed) {
  std::vector<SweepPoint> out;
  for (std::size_t a = 0; a < accuracies.size(); ++a) {
    const SyntheticSpec spec = invalid_z_preset(accuracies[a]);
    const std::uint64_t aseed = harness_seed(seed, a);
    const Dataset data = orient_candidates(sample(spec, n, aseed).data).data;

    Diagnostics diags;
    const CandidateGraph graph = learn_structure_selected(data.W, 2, &diags);
    EstimateOptions opts;
    opts.replicates = replicates;
    opts.seed = aseed + 1;

    SweepPoint point;
    point.accuracy = accuracies[a];
    point.ivy = estimate_effect(data, graph, opts);
    point.uas = uas_effect(data, opts);
    point.was = was_effect(data, opts);
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace ivy
