#include "ivy/effect.hpp"

#include "ivy/paramlearn.hpp"
#include "ivy/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ivy {

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Cell counts of the 2x2 layout: positives[c] counts target=+1 among rows
// with covariate sign c, totals[c] all rows with that sign (index 0: -1).
struct Cells {
  double positives[2] = {0.0, 0.0};
  double totals[2] = {0.0, 0.0};
};

LogisticFit fit_cells(const Cells& cells) {
  if (cells.totals[0] == 0.0 || cells.totals[1] == 0.0)
    throw Error(ErrorCode::kConstantCovariate, "covariate has zero variance");

  LogisticFit fit;
  double b0 = 0.0, b1 = 0.0;
  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 100;
  for (int iter = 1; iter <= kMaxIter; ++iter) {
    // Newton step on the aggregated likelihood; the design has two distinct
    // rows, (1,-1) and (1,+1).
    double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (int ci = 0; ci < 2; ++ci) {
      const double c = ci == 0 ? -1.0 : 1.0;
      const double mu = sigmoid(b0 + b1 * c);
      const double r = cells.positives[ci] - cells.totals[ci] * mu;
      const double w = cells.totals[ci] * mu * (1.0 - mu);
      g0 += r;
      g1 += r * c;
      h00 += w;
      h01 += w * c;
      h11 += w;  // c^2 = 1
    }
    const double det = h00 * h11 - h01 * h01;
    if (det <= 0.0 || !std::isfinite(det)) break;
    const double d0 = (h11 * g0 - h01 * g1) / det;
    const double d1 = (h00 * g1 - h01 * g0) / det;
    b0 += d0;
    b1 += d1;
    fit.iterations = iter;
    if (std::abs(b1) > kSlopeCap) {
      b1 = b1 > 0.0 ? kSlopeCap : -kSlopeCap;
      fit.separated = true;
      fit.converged = true;
      break;
    }
    if (std::max(std::abs(d0), std::abs(d1)) <= kTol) {
      fit.converged = true;
      break;
    }
  }
  fit.intercept = b0;
  fit.slope = b1;
  return fit;
}

Cells count_cells(const BinVector& target, const BinVector& covariate,
                  const std::vector<int>* rows) {
  Cells cells;
  auto add = [&](Eigen::Index i) {
    const int ci = covariate[i] > 0 ? 1 : 0;
    cells.totals[ci] += 1.0;
    if (target[i] > 0) cells.positives[ci] += 1.0;
  };
  if (rows) {
    for (int r : *rows) add(r);
  } else {
    for (Eigen::Index i = 0; i < target.size(); ++i) add(i);
  }
  return cells;
}

std::uint64_t derive_seed(std::uint64_t seed, RngDomain domain, std::uint64_t index) {
  return detail::mix64(detail::mix64(detail::mix64(seed) + static_cast<std::uint64_t>(domain)) +
                       index);
}

}  // namespace

LogisticFit logistic_fit(const BinVector& target, const BinVector& covariate) {
  if (target.size() != covariate.size())
    throw Error(ErrorCode::kShapeMismatch, "logistic_fit length mismatch");
  if (target.size() < 4)
    throw Error(ErrorCode::kInvalidArgument, "logistic_fit needs at least 4 samples");
  return fit_cells(count_cells(target, covariate, nullptr));
}

LogisticFit logistic_fit(const BinVector& target, const BinVector& covariate,
                         const std::vector<int>& rows) {
  if (rows.size() < 4)
    throw Error(ErrorCode::kInvalidArgument, "logistic_fit needs at least 4 samples");
  return fit_cells(count_cells(target, covariate, &rows));
}

double wald_ratio(const LogisticFit& fit_y, const LogisticFit& fit_x, double beta_min) {
  if (std::abs(fit_x.slope) < beta_min) {
    std::ostringstream msg;
    msg << "denominator slope " << fit_x.slope << " below " << beta_min;
    throw Error(ErrorCode::kWeakDenominator, msg.str());
  }
  return fit_y.slope / fit_x.slope;
}

BinVector sample_summary(const Eigen::VectorXd& p, std::uint64_t seed) {
  BinVector out(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i)
    out[i] = indexed_uniform(seed, RngDomain::kSummary, static_cast<std::uint64_t>(i)) < p[i]
                 ? 1
                 : -1;
  return out;
}

std::pair<std::vector<int>, std::vector<int>> replicate_split(Eigen::Index n,
                                                              std::uint64_t seed, int replicate) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  RngStream stream(seed, RngDomain::kShuffle, static_cast<std::uint64_t>(replicate));
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(stream.next_below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  const auto half = static_cast<std::size_t>(n / 2);
  std::vector<int> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<int> eval(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
  return {std::move(train), std::move(eval)};
}

namespace {

BinVector gather(const BinVector& v, const std::vector<int>& rows) {
  BinVector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[rows[i]];
  return out;
}

}  // namespace

EffectReport estimate_with_summary(const Dataset& data, const Summarizer& summarizer,
                                   const std::string& method, const EstimateOptions& options) {
  if (options.replicates < 1)
    throw Error(ErrorCode::kInvalidArgument, "replicates must be >= 1");
  if (data.n() < 4) throw Error(ErrorCode::kInvalidArgument, "need at least 4 samples");

  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(options.replicates));
  long weak = 0, failed = 0, separated = 0;
  Diagnostics diags;

  for (int r = 0; r < options.replicates; ++r) {
    const auto [train, eval] = replicate_split(data.n(), options.seed, r);
    Diagnostics local;
    try {
      const Eigen::VectorXd p = summarizer(data, train, eval, local);
      const BinVector zhat = sample_summary(
          p, derive_seed(options.seed, RngDomain::kReplicate, static_cast<std::uint64_t>(r)));
      const BinVector x_eval = gather(data.x, eval);
      const BinVector y_eval = gather(data.y, eval);
      const LogisticFit fx = logistic_fit(x_eval, zhat);
      const LogisticFit fy = logistic_fit(y_eval, zhat);
      if (fx.separated || fy.separated) ++separated;
      ratios.push_back(wald_ratio(fy, fx, options.beta_min));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kWeakDenominator)
        ++weak;
      else
        ++failed;
    }
  }

  if (weak > 0)
    diags.push_back("WeakDenominator: dropped " + std::to_string(weak) + " of " +
                    std::to_string(options.replicates) + " replicates");
  if (failed > 0)
    diags.push_back("ReplicateFailed: dropped " + std::to_string(failed) + " replicates");
  if (separated > 0)
    diags.push_back("Separation: slope capped in " + std::to_string(separated) + " replicates");
  if (ratios.empty())
    throw Error(ErrorCode::kAllReplicatesFailed,
                "all " + std::to_string(options.replicates) + " replicates failed for " + method);
  return make_report(method, std::move(ratios), data.n(), std::move(diags));
}

EffectReport estimate_effect(const Dataset& data, const CandidateGraph& graph,
                             const EstimateOptions& options) {
  if (!graph.valid.empty() && graph.valid.back() >= data.m())
    throw Error(ErrorCode::kShapeMismatch,
                "model refers to candidate " + std::to_string(graph.valid.back()) +
                    " but the dataset has only " + std::to_string(data.m()));
  bool has_real_clique = false;
  for (const auto& c : graph.cliques)
    if (c.size() > 1) has_real_clique = true;

  ParamLearnOptions plopts;
  plopts.prior_z = options.prior_z;
  plopts.unbiased_moment = options.unbiased_moment;

  long total_sign_violations = 0;
  const Summarizer ivy_summary = [&](const Dataset& d, const std::vector<int>& train,
                                     const std::vector<int>& eval, Diagnostics& local) {
    Model model = param_learn_rows(d.W, train, graph, plopts, &local);
    total_sign_violations += model.sign_violations;
    if (has_real_clique) fit_clique_params(model, graph, MomentMatchOptions{}, &local);
    return posteriors(d.W, eval, model);
  };

  EffectReport report = estimate_with_summary(data, ivy_summary, "ivy", options);
  if (total_sign_violations > 0)
    report.diagnostics.push_back("SignViolations: " + std::to_string(total_sign_violations) +
                                 " frustrated constraints across replicates");
  return report;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "normal quantile needs p in (0,1)");
  // Acklam's rational approximation, polished with two Newton steps.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    const double err = normal_cdf(x) - p;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf <= 0.0) break;
    x -= err / pdf;
  }
  return x;
}

double power(double n, double p1, double p0, double alpha_xy, double beta_zx, double level) {
  if (!(n > 0.0)) throw Error(ErrorCode::kInvalidArgument, "power needs n > 0");
  if (!(p0 >= 0.0 && p1 >= 0.0 && std::abs(p0 + p1 - 1.0) <= 1e-12))
    throw Error(ErrorCode::kInvalidArgument, "power needs p0 + p1 = 1");
  if (!(level > 0.0 && level < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "power needs level in (0,1)");

  const double shift = std::sqrt(n * p1 * p0) * std::abs(alpha_xy) * std::abs(beta_zx);
  // Phi(-zeta_{d}) = d by definition, so a zero shift gives exactly level/2.
  if (shift == 0.0) return level / 2.0;
  const double zeta = normal_quantile(1.0 - level / 2.0);
  return normal_cdf(shift - zeta);
}

}  // namespace ivy
