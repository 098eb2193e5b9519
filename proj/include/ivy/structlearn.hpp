// Valid-candidate and dependency learning: decompose the sample covariance's
// inverse structure into sparse + rank-one parts, threshold the rank-one
// scores for validity and the sparse entries for edges, with score-based
// model selection over a hyperparameter grid.
#pragma once

#include "ivy/core.hpp"

#include <optional>
#include <vector>

namespace ivy {

struct Hyperparams {
  double lambda = 0.1;  // penalty weight, > 0
  double gamma = 1.0;   // sparsity / rank trade-off, > 0
  double t1 = 0.0;      // validity threshold, >= 0
  double t2 = 0.0;      // edge threshold, >= 0 (+inf means no edges)
};

struct DecomposeOptions {
  double eps_pd = 1e-6;    // enforced S - L >= eps_pd * I
  double tol = 1e-6;       // relative objective-change stopping rule
  int max_iter = 5000;
};

struct DecompositionResult {
  Eigen::MatrixXd S;                      // sparse component
  Eigen::MatrixXd L;                      // PSD component (rank penalized)
  Eigen::VectorXd ell;                    // rank-one factor of L
  std::vector<double> objective_trace;    // accepted iterates, non-increasing
  std::vector<double> feasibility_slack;  // min eig(S - L) - eps_pd per iterate
  bool converged = false;
  int iterations = 0;
};

// Sigma = (1/n) sum w w^T - wbar wbar^T. Columns with zero variance are
// reported into diags.
Eigen::MatrixXd sample_covariance(const BinMatrix& W, Diagnostics* diags = nullptr);

// Minimizes 0.5 tr(A Sigma A) - tr(A) + lambda (gamma |S|_1 + tr L) over
// L >= 0, S - L >= eps_pd I, with A = S - L, by proximal gradient steps with
// backtracking. Soft-thresholding covers all entries of S including the
// diagonal; the prox of the nuclear penalty on the PSD cone shrinks
// eigenvalues toward zero and clamps negatives.
DecompositionResult decompose(const Eigen::MatrixXd& sigma, double lambda, double gamma,
                              const DecomposeOptions& options = {});

// sqrt(max(lambda_1, 0)) * v_1 for the top eigenpair, sign fixed so the
// largest-magnitude entry is positive.
Eigen::VectorXd rank_one_factor(const Eigen::MatrixXd& L);

// Lines 1-5: covariance, decomposition, validity scores |Sigma ell| >= t1,
// edges |S_ij| >= t2, connected-component cliques. Constant columns are
// dropped before decomposition and marked invalid. Throws kTooFewValid when
// fewer than 3 candidates survive. When `decomposition` is given it receives
// the solver output (indexed by the kept, non-constant columns) for
// debugging dumps.
CandidateGraph structure_learn(const BinMatrix& W, const Hyperparams& hyper,
                               Diagnostics* diags = nullptr,
                               DecompositionResult* decomposition = nullptr);

struct ModelSelection {
  Hyperparams selected;
  double tau = 0.0;          // largest consecutive score ratio of the winner
  int gap_index = 0;         // elements below the gap in the sorted scores
  bool qualified = false;    // some grid point reached tau > 10
  Eigen::VectorXd scores;    // validity scores of the winning model (full m)
};

// Score-based selection over the (lambda, gamma) grid; picks thresholds T1
// from the score gap (xi rule) and T2 from a Tukey fence over |S| entries
// within the valid set (+inf when no outlier exists).
ModelSelection select_model(const BinMatrix& W, const std::vector<double>& lambdas,
                            const std::vector<double>& gammas, int xi,
                            Diagnostics* diags = nullptr);

std::vector<double> default_lambda_grid(Eigen::Index n, Eigen::Index m);
std::vector<double> default_gamma_grid();

struct ScoreGap {
  double tau = 0.0;  // largest consecutive ratio in the ascending sort
  int below = 0;     // elements below that gap
};

// Sorts the scores ascending and finds the widest consecutive ratio.
// Denominators are floored at denominator_floor (ratios between scores below
// the sampling-noise scale are meaningless; model selection passes
// sqrt(m/n)).
ScoreGap score_gap(std::vector<double> scores, double denominator_floor = 1e-12);

// Q3 + 1.5 IQR fence; returns the smallest outlier at or above min_value,
// or +inf when none.
double tukey_fence_threshold(std::vector<double> values, double min_value = 0.0);

}  // namespace ivy
