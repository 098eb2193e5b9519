// Mean-parameter recovery: estimate E[w_j z] for the valid candidates from
// observed second moments via the log-moment linear system over
// conditionally independent pairs, then recover signs by propagation.
#pragma once

#include "ivy/core.hpp"

#include <utility>
#include <vector>

namespace ivy {

struct MomentSystem {
  std::vector<std::pair<int, int>> pairs;    // used pairs, indices local to the valid set
  Eigen::MatrixXd M;                         // |pairs| x |V|, two ones per row
  Eigen::VectorXd q;                         // log(O_ij^2) per used pair
  std::vector<std::pair<int, int>> dropped;  // pairs excluded for |O_ij| < eps
};

// All unordered pairs of valid candidates lying in different cliques,
// as positions within graph.valid (lexicographic order).
std::vector<std::pair<int, int>> cond_indep_pairs(const CandidateGraph& graph);

// Keeps pairs with |O_ij| >= eps_o; throws kRankDeficient when a candidate is
// left with fewer than two usable partners or the system loses column rank.
MomentSystem build_system(const Eigen::MatrixXd& O,
                          const std::vector<std::pair<int, int>>& pairs, double eps_o,
                          Diagnostics* diags = nullptr);

// Least squares by orthogonal factorization; |mu_j| = exp(l_j / 2) clipped
// into [0, 1 - eps_clip].
Eigen::VectorXd solve_magnitudes(const MomentSystem& system, double eps_clip = 1e-3);

struct SignResult {
  Eigen::VectorXd mu;
  int violations = 0;  // frustrated sign constraints off the spanning tree
  int components = 0;  // connected components of the usable-pair graph
};

// Signs satisfy s_i s_j = sign(O_ij) along a breadth-first spanning tree of
// the usable-pair graph; each component is flipped so its signed magnitude
// sum is positive.
SignResult recover_signs(const Eigen::VectorXd& abs_mu, const Eigen::MatrixXd& O,
                         const std::vector<std::pair<int, int>>& pairs, double eps_o,
                         Diagnostics* diags = nullptr);

struct ParamLearnOptions {
  double prior_z = 0.5;
  bool unbiased_moment = false;  // 1/(n-1) normalization of the second moment
  double eps_clip = 1e-3;
  double eps_o_floor = 1e-8;     // pair floor is max(1/n, eps_o_floor)
};

// (1/n) sum over the given rows of w_V w_V^T, diagonal forced to exactly 1.
Eigen::MatrixXd second_moment(const BinMatrix& W, const std::vector<int>& valid,
                              const std::vector<int>& rows, bool unbiased = false);

// Composite: second moment, conditionally independent pairs, magnitudes,
// signs. clique_params are left empty (filled by the posterior module).
Model param_learn(const BinMatrix& W, const CandidateGraph& graph,
                  const ParamLearnOptions& options = {}, Diagnostics* diags = nullptr);
Model param_learn_rows(const BinMatrix& W, const std::vector<int>& rows,
                       const CandidateGraph& graph, const ParamLearnOptions& options = {},
                       Diagnostics* diags = nullptr);

// Same pipeline on an externally supplied second moment (population oracle
// path); eps_o is used directly.
Model param_learn_from_moments(const Eigen::MatrixXd& O, const CandidateGraph& graph,
                               double eps_o, const ParamLearnOptions& options = {},
                               Diagnostics* diags = nullptr);

}  // namespace ivy
