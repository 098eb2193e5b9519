#include "ivy/structlearn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ivy {

namespace {

constexpr double kRatioFloor = 1e-12;   // denominator floor for score ratios
constexpr double kTauQualify = 10.0;    // gap ratio required by the selection score
constexpr int kMaxBacktracks = 60;

// W^T W accumulated in double over row blocks; large datasets stay int8.
Eigen::MatrixXd gram_blocked(const BinMatrix& W) {
  const Eigen::Index n = W.rows(), m = W.cols();
  constexpr Eigen::Index kBlock = 8192;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, n - start);
    const Eigen::MatrixXd block = W.middleRows(start, rows).cast<double>();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
  }
  return gram.selfadjointView<Eigen::Lower>();
}

double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& M, double t) {
  return M.unaryExpr([t](double v) { return soft(v, t); });
}

// Prox of t * (trace + PSD indicator): eigenvalues shrink by t and clamp at 0.
Eigen::MatrixXd psd_trace_prox(const Eigen::MatrixXd& M, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  Eigen::VectorXd d = eig.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = std::max(d[i] - t, 0.0);
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double objective(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& S,
                 const Eigen::MatrixXd& L, double lambda, double gamma) {
  const Eigen::MatrixXd A = S - L;
  const double smooth = 0.5 * (A * sigma * A).trace() - A.trace();
  return smooth + lambda * (gamma * S.cwiseAbs().sum() + L.trace());
}

std::vector<Eigen::Index> nonconstant_columns(const BinMatrix& W, Diagnostics* diags) {
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    const std::int8_t first = W(0, j);
    bool constant = true;
    for (Eigen::Index i = 1; i < W.rows(); ++i)
      if (W(i, j) != first) {
        constant = false;
        break;
      }
    if (constant) {
      if (diags)
        diags->push_back("DegenerateColumn: candidate " + std::to_string(j) +
                         " is constant; treated as invalid");
    } else {
      kept.push_back(j);
    }
  }
  return kept;
}

Eigen::MatrixXd covariance_of_columns(const BinMatrix& W, const std::vector<Eigen::Index>& cols) {
  const Eigen::Index n = W.rows();
  const auto k = static_cast<Eigen::Index>(cols.size());
  BinMatrix sub(n, k);
  for (Eigen::Index j = 0; j < k; ++j) sub.col(j) = W.col(cols[static_cast<std::size_t>(j)]);
  Eigen::MatrixXd second = gram_blocked(sub) / static_cast<double>(n);
  Eigen::VectorXd mean(k);
  for (Eigen::Index j = 0; j < k; ++j)
    mean[j] = sub.col(j).cast<double>().sum() / static_cast<double>(n);
  return second - mean * mean.transpose();
}

}  // namespace

Eigen::MatrixXd sample_covariance(const BinMatrix& W, Diagnostics* diags) {
  const Eigen::Index n = W.rows(), m = W.cols();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "sample covariance requires n >= 2");
  Eigen::MatrixXd second = gram_blocked(W) / static_cast<double>(n);
  Eigen::VectorXd mean(m);
  for (Eigen::Index j = 0; j < m; ++j)
    mean[j] = W.col(j).cast<double>().sum() / static_cast<double>(n);
  Eigen::MatrixXd sigma = second - mean * mean.transpose();
  if (diags) {
    for (Eigen::Index j = 0; j < m; ++j)
      if (sigma(j, j) <= 0.0)
        diags->push_back("DegenerateColumn: candidate " + std::to_string(j) +
                         " has zero variance");
  }
  return sigma;
}

DecompositionResult decompose(const Eigen::MatrixXd& sigma, double lambda, double gamma,
                              const DecomposeOptions& options) {
  const Eigen::Index m = sigma.rows();
  if (sigma.cols() != m) throw Error(ErrorCode::kShapeMismatch, "sigma must be square");
  if (!sigma.allFinite())
    throw Error(ErrorCode::kNonFiniteObjective, "covariance contains non-finite entries");
  if (!(lambda > 0.0) || !(gamma > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "lambda and gamma must be positive");

  DecompositionResult res;
  res.S = Eigen::MatrixXd::Identity(m, m);
  res.L = Eigen::MatrixXd::Zero(m, m);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sig_eig(sigma, Eigen::EigenvaluesOnly);
  const double spectral =
      std::max(std::abs(sig_eig.eigenvalues().minCoeff()), std::abs(sig_eig.eigenvalues().maxCoeff()));
  const double eta0 = 1.0 / std::max(spectral, 1e-12);

  double obj = objective(sigma, res.S, res.L, lambda, gamma);
  if (!std::isfinite(obj))
    throw Error(ErrorCode::kNonFiniteObjective, "objective non-finite at the initial iterate");
  res.objective_trace.push_back(obj);
  res.feasibility_slack.push_back(min_eigenvalue(res.S - res.L) - options.eps_pd);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::MatrixXd A = res.S - res.L;
    Eigen::MatrixXd grad = 0.5 * (sigma * A + A * sigma);
    grad.diagonal().array() -= 1.0;
    grad = 0.5 * (grad + grad.transpose()).eval();  // keep exact symmetry

    double eta = eta0;
    bool accepted = false;
    Eigen::MatrixXd s_new, l_new;
    double obj_new = 0.0, slack = 0.0;
    for (int bt = 0; bt <= kMaxBacktracks; ++bt) {
      s_new = soft_threshold(res.S - eta * grad, eta * lambda * gamma);
      l_new = psd_trace_prox(res.L + eta * grad, eta * lambda);
      const double min_ev = min_eigenvalue(s_new - l_new);
      obj_new = objective(sigma, s_new, l_new, lambda, gamma);
      if (std::isfinite(obj_new) && min_ev >= options.eps_pd - 1e-9 &&
          obj_new <= obj + 1e-12 * (1.0 + std::abs(obj))) {
        accepted = true;
        slack = min_ev - options.eps_pd;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;  // feasible boundary stall; keep the last iterate

    res.S = std::move(s_new);
    res.L = std::move(l_new);
    res.objective_trace.push_back(obj_new);
    res.feasibility_slack.push_back(slack);
    res.iterations = iter + 1;
    const bool small_change = std::abs(obj - obj_new) <= options.tol * (1.0 + std::abs(obj_new));
    obj = obj_new;
    if (small_change) {
      res.converged = true;
      break;
    }
  }

  res.ell = rank_one_factor(res.L);
  return res;
}

Eigen::VectorXd rank_one_factor(const Eigen::MatrixXd& L) {
  const Eigen::Index m = L.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L);
  const double top = eig.eigenvalues()[m - 1];
  if (top <= 0.0) return Eigen::VectorXd::Zero(m);
  Eigen::VectorXd ell = std::sqrt(top) * eig.eigenvectors().col(m - 1);
  Eigen::Index lead = 0;
  ell.cwiseAbs().maxCoeff(&lead);
  if (ell[lead] < 0.0) ell = -ell;
  return ell;
}

CandidateGraph structure_learn(const BinMatrix& W, const Hyperparams& hyper, Diagnostics* diags,
                               DecompositionResult* decomposition) {
  const std::vector<Eigen::Index> kept = nonconstant_columns(W, diags);
  if (kept.size() < 3)
    throw Error(ErrorCode::kTooFewValid,
                "only " + std::to_string(kept.size()) + " usable candidates; need at least 3");

  const Eigen::MatrixXd sigma = covariance_of_columns(W, kept);
  const DecompositionResult dec = decompose(sigma, hyper.lambda, hyper.gamma);
  if (!dec.converged && diags)
    diags->push_back("NotConverged: decomposition stopped after " +
                     std::to_string(dec.iterations) + " iterations");
  if (decomposition) *decomposition = dec;

  const Eigen::VectorXd scores = (sigma * dec.ell).cwiseAbs();
  std::vector<int> valid;
  std::vector<Eigen::Index> valid_local;
  for (Eigen::Index j = 0; j < scores.size(); ++j)
    if (scores[j] >= hyper.t1) {
      valid.push_back(static_cast<int>(kept[static_cast<std::size_t>(j)]));
      valid_local.push_back(j);
    }
  if (valid.size() < 3)
    throw Error(ErrorCode::kTooFewValid, "validity threshold keeps " +
                                             std::to_string(valid.size()) +
                                             " candidates; need at least 3");

  std::vector<std::pair<int, int>> edges;
  for (std::size_t b = 0; b < valid_local.size(); ++b)
    for (std::size_t a = 0; a < b; ++a)
      if (std::abs(dec.S(valid_local[a], valid_local[b])) >= hyper.t2)
        edges.emplace_back(valid[a], valid[b]);

  return CandidateGraph::from_edges(std::move(valid), std::move(edges));
}

ModelSelection select_model(const BinMatrix& W, const std::vector<double>& lambdas,
                            const std::vector<double>& gammas, int xi, Diagnostics* diags) {
  if (lambdas.empty() || gammas.empty())
    throw Error(ErrorCode::kInvalidArgument, "hyperparameter grids must be non-empty");
  if (xi != 2 && xi != 3) throw Error(ErrorCode::kInvalidArgument, "xi must be 2 or 3");

  const Eigen::Index m = W.cols();
  const std::vector<Eigen::Index> kept = nonconstant_columns(W, nullptr);
  if (kept.size() < 3)
    throw Error(ErrorCode::kTooFewValid,
                "only " + std::to_string(kept.size()) + " usable candidates; need at least 3");
  const Eigen::MatrixXd sigma = covariance_of_columns(W, kept);
  const auto k_count = static_cast<Eigen::Index>(kept.size());
  const double noise_floor =
      std::sqrt(static_cast<double>(m) / static_cast<double>(W.rows()));

  struct Candidate {
    double lambda = 0.0, gamma = 0.0;
    double tau = 0.0;
    int below = 0;
    double log_score = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd scores;    // kept-local
    Eigen::MatrixXd S;
  };

  Candidate best_qualified, best_any;
  bool have_qualified = false, have_any = false;

  for (double lambda : lambdas) {
    for (double gamma : gammas) {
      const DecompositionResult dec = decompose(sigma, lambda, gamma);
      Candidate cand;
      cand.lambda = lambda;
      cand.gamma = gamma;
      cand.scores = (sigma * dec.ell).cwiseAbs();
      cand.S = dec.S;

      const ScoreGap gap =
          score_gap(std::vector<double>(cand.scores.data(), cand.scores.data() + k_count),
                    noise_floor);
      cand.tau = gap.tau;
      cand.below = gap.below;
      if (gap.tau > kTauQualify)
        cand.log_score =
            std::log(std::log(gap.tau)) + static_cast<double>(m - gap.below);

      if (!have_any || cand.tau > best_any.tau) {
        best_any = cand;
        have_any = true;
      }
      if (gap.tau > kTauQualify &&
          (!have_qualified || cand.log_score > best_qualified.log_score)) {
        best_qualified = cand;
        have_qualified = true;
      }
    }
  }
  (void)have_any;

  ModelSelection out;
  out.qualified = have_qualified;
  const Candidate& winner = have_qualified ? best_qualified : best_any;
  out.tau = winner.tau;
  out.gap_index = winner.below;
  out.selected.lambda = winner.lambda;
  out.selected.gamma = winner.gamma;

  std::vector<double> ascending(winner.scores.data(), winner.scores.data() + k_count);
  std::sort(ascending.begin(), ascending.end());

  if (have_qualified) {
    // T1 sits at descending index xi*(above-gap count), clamped into the
    // above-gap block, so the cut never dips below the detected gap.
    const int above = static_cast<int>(k_count) - winner.below;
    const int pos = std::min(xi * above, above);  // 1-based from the top
    out.selected.t1 = ascending[static_cast<std::size_t>(static_cast<int>(k_count) - pos)];
  } else {
    if (diags)
      diags->push_back(
          "NoQualifyingModel: no hyperparameter pair produced a score gap above 10; "
          "keeping all candidates");
    out.selected.t1 = 0.0;
  }

  // T2 from the Tukey fence over |S| off-diagonals within the valid set.
  // Sparse-component entries carry sampling noise of order sqrt(m/n); an
  // outlier below that scale is lasso-surviving noise, not a dependency, so
  // the fence threshold must also clear the noise floor.
  std::vector<Eigen::Index> valid_local;
  for (Eigen::Index j = 0; j < k_count; ++j)
    if (winner.scores[j] >= out.selected.t1) valid_local.push_back(j);
  std::vector<double> entries;
  for (std::size_t b = 0; b < valid_local.size(); ++b)
    for (std::size_t a = 0; a < b; ++a)
      entries.push_back(std::abs(winner.S(valid_local[a], valid_local[b])));
  out.selected.t2 = tukey_fence_threshold(std::move(entries), noise_floor);

  out.scores = Eigen::VectorXd::Zero(m);
  for (Eigen::Index j = 0; j < k_count; ++j)
    out.scores[kept[static_cast<std::size_t>(j)]] = winner.scores[j];
  return out;
}

std::vector<double> default_lambda_grid(Eigen::Index n, Eigen::Index m) {
  const double scale = std::sqrt(static_cast<double>(m) / static_cast<double>(n));
  return {0.01 * scale, 0.05 * scale, 0.1 * scale, 0.5 * scale};
}

std::vector<double> default_gamma_grid() { return {0.125, 0.25, 0.5, 1.0}; }

ScoreGap score_gap(std::vector<double> scores, double denominator_floor) {
  std::sort(scores.begin(), scores.end());
  const double floor = std::max(denominator_floor, kRatioFloor);
  ScoreGap gap;
  for (std::size_t k = 0; k + 1 < scores.size(); ++k) {
    const double ratio = scores[k + 1] / std::max(scores[k], floor);
    if (ratio > gap.tau) {
      gap.tau = ratio;
      gap.below = static_cast<int>(k) + 1;
    }
  }
  return gap;
}

double tukey_fence_threshold(std::vector<double> values, double min_value) {
  if (values.empty()) return std::numeric_limits<double>::infinity();
  std::sort(values.begin(), values.end());
  const double q1 = quantile_sorted(values, 0.25);
  const double q3 = quantile_sorted(values, 0.75);
  const double fence = q3 + 1.5 * (q3 - q1);
  for (double v : values)
    if (v > fence && v >= min_value) return v;  // smallest qualifying outlier
  return std::numeric_limits<double>::infinity();
}

}  // namespace ivy
