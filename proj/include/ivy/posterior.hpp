// Per-sample P(z = 1 | w_V): closed form under conditional independence,
// per-clique moment-matched Ising conditionals otherwise. Cliques intersect
// only in z, so the posterior factorizes over cliques.
#pragma once

#include "ivy/core.hpp"

#include <vector>

namespace ivy {

// sigma( sum_j w_j logit((1+mu_j)/2) + logit(prior_z) ).
double ci_posterior(const Eigen::VectorXd& w_row, const Eigen::VectorXd& mu, double prior_z);

struct MomentMatchOptions {
  double tol = 1e-8;            // max-abs moment residual at convergence
  double infeasible_tol = 1e-4; // stall residual that triggers the fallback
  int max_iter = 200;
  int clique_cap = 15;
};

// Finds canonical parameters whose model moments over (w_C, z) match the
// targets: E[z] from prior_z, E[w_j z] = mu_C, E[w_i w_j] = O_C on edges, and
// E[w_j] at the model-implied value mu_j E[z]. Infeasible targets (sampling
// noise outside the marginal polytope) fall back to shrinking the pairwise
// targets toward independence, with a warning.
CliqueConditional moment_match_clique(const std::vector<int>& members,
                                      const std::vector<std::pair<int, int>>& edges,
                                      const Eigen::VectorXd& mu_c, const Eigen::MatrixXd& o_c,
                                      double prior_z, const MomentMatchOptions& options = {},
                                      Diagnostics* diags = nullptr);

// Fills model.clique_params by moment matching every clique of the graph.
void fit_clique_params(Model& model, const CandidateGraph& graph,
                       const MomentMatchOptions& options = {}, Diagnostics* diags = nullptr);

// Posterior product over cliques, computed in log space. w_row is indexed
// like model.valid.
double clique_posterior(const Eigen::VectorXd& w_row,
                        const std::vector<CliqueConditional>& cliques, double prior_z,
                        const std::vector<int>& valid);

// Batch posterior for the given dataset rows; uses the clique factorization
// (clique_params must be fitted unless every clique is a singleton).
Eigen::VectorXd posteriors(const BinMatrix& W, const std::vector<int>& rows, const Model& model);

}  // namespace ivy
