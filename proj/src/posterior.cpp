#include "ivy/posterior.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ivy {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Sufficient statistics of the clique model over joint states of (w_C, z):
// z, each w_j, each w_j z, and w_i w_j per edge. State bit j (< k) carries
// w_j; bit k carries z.
struct CliqueFamily {
  int k = 0;
  std::vector<std::pair<int, int>> local_edges;
  int dim() const { return 1 + 2 * k + static_cast<int>(local_edges.size()); }
  int states() const { return 1 << (k + 1); }

  void stats(int state, Eigen::VectorXd& phi) const {
    const double z = ((state >> k) & 1) ? 1.0 : -1.0;
    phi[0] = z;
    for (int j = 0; j < k; ++j) {
      const double wj = ((state >> j) & 1) ? 1.0 : -1.0;
      phi[1 + j] = wj;
      phi[1 + k + j] = wj * z;
    }
    for (std::size_t e = 0; e < local_edges.size(); ++e) {
      const double wi = ((state >> local_edges[e].first) & 1) ? 1.0 : -1.0;
      const double wj = ((state >> local_edges[e].second) & 1) ? 1.0 : -1.0;
      phi[1 + 2 * k + static_cast<int>(e)] = wi * wj;
    }
  }

  // Joint probabilities for canonical parameters theta.
  Eigen::VectorXd distribution(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd phi(dim());
    Eigen::VectorXd energy(states());
    for (int s = 0; s < states(); ++s) {
      stats(s, phi);
      energy[s] = theta.dot(phi);
    }
    const double shift = energy.maxCoeff();
    Eigen::VectorXd p = (energy.array() - shift).exp();
    p /= p.sum();
    return p;
  }
};

struct NewtonResult {
  Eigen::VectorXd theta;
  double residual = 0.0;
  bool converged = false;
};

// Damped Newton ascent on the exponential-family log-likelihood
// LL(theta) = theta.target - A(theta); the gradient is target - E[phi] and
// the Hessian is -Cov(phi). Convex, so only step damping is needed.
NewtonResult fit_family(const CliqueFamily& fam, const Eigen::VectorXd& target,
                        Eigen::VectorXd theta0, const MomentMatchOptions& options) {
  const int d = fam.dim();
  Eigen::VectorXd theta = std::move(theta0);
  Eigen::VectorXd phi(d);

  auto loglik_and_moments = [&](const Eigen::VectorXd& th, Eigen::VectorXd* mean,
                                Eigen::MatrixXd* cov) {
    Eigen::VectorXd energy(fam.states());
    for (int s = 0; s < fam.states(); ++s) {
      fam.stats(s, phi);
      energy[s] = th.dot(phi);
    }
    const double shift = energy.maxCoeff();
    Eigen::VectorXd p = (energy.array() - shift).exp();
    const double total = p.sum();
    p /= total;

    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
    for (int s = 0; s < fam.states(); ++s) {
      fam.stats(s, phi);
      e += p[s] * phi;
      if (cov) second.selfadjointView<Eigen::Lower>().rankUpdate(phi, p[s]);
    }
    if (mean) *mean = e;
    if (cov) *cov = Eigen::MatrixXd(second.selfadjointView<Eigen::Lower>()) - e * e.transpose();
    return th.dot(target) - (shift + std::log(total));
  };

  Eigen::VectorXd mean(d);
  Eigen::MatrixXd cov(d, d);
  double ll = loglik_and_moments(theta, &mean, &cov);

  NewtonResult out;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::VectorXd residual = target - mean;
    out.residual = residual.cwiseAbs().maxCoeff();
    if (out.residual <= options.tol) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd h = cov;
    h.diagonal().array() += 1e-12;
    Eigen::VectorXd step = h.ldlt().solve(residual);

    double scale = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 40; ++bt) {
      const Eigen::VectorXd cand = theta + scale * step;
      const double cand_ll = loglik_and_moments(cand, &mean, &cov);
      if (cand_ll >= ll) {
        theta = cand;
        ll = cand_ll;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;  // stalled
  }
  if (!out.converged) {
    Eigen::VectorXd final_mean(d);
    loglik_and_moments(theta, &final_mean, nullptr);
    out.residual = (target - final_mean).cwiseAbs().maxCoeff();
    out.converged = out.residual <= options.tol;
  }
  out.theta = theta;
  return out;
}

CliqueConditional tables_from_theta(const CliqueFamily& fam, const std::vector<int>& members,
                                    const std::vector<std::pair<int, int>>& edges,
                                    const Eigen::VectorXd& theta) {
  CliqueConditional out;
  out.members = members;
  out.edges = edges;
  const int k = fam.k;
  out.theta_z = theta[0];
  out.theta_unary = theta.segment(1, k);
  out.theta_coupling = theta.segment(1 + k, k);
  out.theta_pair = theta.tail(static_cast<Eigen::Index>(fam.local_edges.size()));

  const Eigen::VectorXd joint = fam.distribution(theta);
  const int w_states = 1 << k;
  out.table_pos.resize(w_states);
  out.table_neg.resize(w_states);
  double pos = 0.0, neg = 0.0;
  for (int s = 0; s < w_states; ++s) {
    out.table_pos[s] = joint[s | (1 << k)];
    out.table_neg[s] = joint[s];
    pos += out.table_pos[s];
    neg += out.table_neg[s];
  }
  out.table_pos /= pos;
  out.table_neg /= neg;
  return out;
}

}  // namespace

double ci_posterior(const Eigen::VectorXd& w_row, const Eigen::VectorXd& mu, double prior_z) {
  double t = logit(prior_z);
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    const double pj = 0.5 * (1.0 + mu[j]);
    t += w_row[j] * logit(pj);
  }
  return sigmoid(t);
}

CliqueConditional moment_match_clique(const std::vector<int>& members,
                                      const std::vector<std::pair<int, int>>& edges,
                                      const Eigen::VectorXd& mu_c, const Eigen::MatrixXd& o_c,
                                      double prior_z, const MomentMatchOptions& options,
                                      Diagnostics* diags) {
  const int k = static_cast<int>(members.size());
  if (k > options.clique_cap)
    throw Error(ErrorCode::kCliqueTooLarge, "clique of size " + std::to_string(k) +
                                                " exceeds cap " +
                                                std::to_string(options.clique_cap));
  if (!(prior_z > 0.0 && prior_z < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "prior_z must lie in (0,1)");
  const double ez = 2.0 * prior_z - 1.0;

  // Singleton cliques have the closed-form channel; keeps the factorized
  // posterior exactly equal to the conditionally independent formula.
  if (k == 1) {
    CliqueConditional out;
    out.members = members;
    out.theta_z = std::atanh(ez);
    out.theta_unary = Eigen::VectorXd::Zero(1);
    out.theta_coupling = Eigen::VectorXd::Constant(1, std::atanh(mu_c[0]));
    out.theta_pair = Eigen::VectorXd();
    const double pj = 0.5 * (1.0 + mu_c[0]);
    out.table_pos.resize(2);
    out.table_neg.resize(2);
    out.table_pos << 1.0 - pj, pj;
    out.table_neg << pj, 1.0 - pj;
    return out;
  }

  CliqueFamily fam;
  fam.k = k;
  std::vector<int> local(members.empty() ? 0 : members.back() + 1, -1);
  for (int j = 0; j < k; ++j) local[static_cast<std::size_t>(members[j])] = j;
  for (const auto& [gi, gj] : edges)
    fam.local_edges.emplace_back(local[static_cast<std::size_t>(gi)],
                                 local[static_cast<std::size_t>(gj)]);

  auto make_target = [&](double shrink) {
    Eigen::VectorXd t(fam.dim());
    t[0] = ez;
    for (int j = 0; j < k; ++j) {
      t[1 + j] = mu_c[j] * ez;  // model-implied candidate mean
      t[1 + k + j] = mu_c[j];
    }
    for (std::size_t e = 0; e < fam.local_edges.size(); ++e) {
      const auto [li, lj] = fam.local_edges[e];
      const double ci_value = mu_c[li] * mu_c[lj];
      t[1 + 2 * k + static_cast<int>(e)] =
          (1.0 - shrink) * o_c(li, lj) + shrink * ci_value;
    }
    return t;
  };

  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(fam.dim());
  theta0[0] = std::atanh(ez);
  for (int j = 0; j < k; ++j) theta0[1 + k + j] = std::atanh(mu_c[j]);

  // Shrink the pairwise targets toward independence only as far as needed.
  constexpr double kShrinkLadder[] = {0.0, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 3.0 / 4, 1.0};
  NewtonResult fit;
  double used_shrink = 0.0;
  for (double shrink : kShrinkLadder) {
    fit = fit_family(fam, make_target(shrink), theta0, options);
    used_shrink = shrink;
    if (fit.converged || fit.residual <= options.infeasible_tol) break;
  }
  if (!fit.converged && fit.residual > options.infeasible_tol)
    throw Error(ErrorCode::kInfeasibleMoments,
                "moment matching stalled with residual " + std::to_string(fit.residual));
  if (diags) {
    if (used_shrink > 0.0) {
      std::ostringstream msg;
      msg << "InfeasibleMoments: clique at " << members.front() << " fitted after shrinking "
          << "pairwise targets by " << used_shrink << " toward independence";
      diags->push_back(msg.str());
    } else if (!fit.converged) {
      std::ostringstream msg;
      msg << "MomentMatch: clique at " << members.front() << " stopped at residual "
          << fit.residual;
      diags->push_back(msg.str());
    }
  }
  return tables_from_theta(fam, members, edges, fit.theta);
}

void fit_clique_params(Model& model, const CandidateGraph& graph,
                       const MomentMatchOptions& options, Diagnostics* diags) {
  std::vector<int> local(graph.valid.empty() ? 0 : graph.valid.back() + 1, -1);
  for (std::size_t i = 0; i < graph.valid.size(); ++i)
    local[static_cast<std::size_t>(graph.valid[i])] = static_cast<int>(i);

  model.clique_params.clear();
  for (const auto& clique : graph.cliques) {
    const int k = static_cast<int>(clique.size());
    Eigen::VectorXd mu_c(k);
    Eigen::MatrixXd o_c(k, k);
    for (int a = 0; a < k; ++a) {
      const int la = local[static_cast<std::size_t>(clique[static_cast<std::size_t>(a)])];
      mu_c[a] = model.mu[la];
      for (int b = 0; b < k; ++b) {
        const int lb = local[static_cast<std::size_t>(clique[static_cast<std::size_t>(b)])];
        o_c(a, b) = model.second_moment(la, lb);
      }
    }
    std::vector<std::pair<int, int>> clique_edges;
    for (const auto& e : graph.edges)
      if (std::binary_search(clique.begin(), clique.end(), e.first) &&
          std::binary_search(clique.begin(), clique.end(), e.second))
        clique_edges.push_back(e);
    model.clique_params.push_back(moment_match_clique(clique, clique_edges, mu_c, o_c,
                                                      model.prior_z, options, diags));
  }
}

double clique_posterior(const Eigen::VectorXd& w_row,
                        const std::vector<CliqueConditional>& cliques, double prior_z,
                        const std::vector<int>& valid) {
  std::vector<int> local(valid.empty() ? 0 : valid.back() + 1, -1);
  for (std::size_t i = 0; i < valid.size(); ++i)
    local[static_cast<std::size_t>(valid[i])] = static_cast<int>(i);

  double log_pos = std::log(prior_z);
  double log_neg = std::log(1.0 - prior_z);
  for (const auto& clique : cliques) {
    int state = 0;
    for (int j = 0; j < clique.size(); ++j) {
      const int pos = local[static_cast<std::size_t>(clique.members[static_cast<std::size_t>(j)])];
      if (w_row[pos] > 0.0) state |= 1 << j;
    }
    log_pos += std::log(clique.table_pos[state]);
    log_neg += std::log(clique.table_neg[state]);
  }
  return sigmoid(log_pos - log_neg);
}

Eigen::VectorXd posteriors(const BinMatrix& W, const std::vector<int>& rows, const Model& model) {
  const auto v = static_cast<int>(model.valid.size());
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));

  if (model.clique_params.empty()) {
    // Conditionally independent path straight from mu.
    Eigen::VectorXd channel_logit(v);
    for (int j = 0; j < v; ++j) channel_logit[j] = logit(0.5 * (1.0 + model.mu[j]));
    const double prior_term = logit(model.prior_z);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double t = prior_term;
      for (int j = 0; j < v; ++j)
        t += static_cast<double>(W(rows[r], model.valid[static_cast<std::size_t>(j)])) *
             channel_logit[j];
      out[static_cast<Eigen::Index>(r)] = sigmoid(t);
    }
    return out;
  }

  const double log_prior_pos = std::log(model.prior_z);
  const double log_prior_neg = std::log(1.0 - model.prior_z);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double log_pos = log_prior_pos, log_neg = log_prior_neg;
    for (const auto& clique : model.clique_params) {
      int state = 0;
      for (int j = 0; j < clique.size(); ++j)
        if (W(rows[r], clique.members[static_cast<std::size_t>(j)]) > 0) state |= 1 << j;
      log_pos += std::log(clique.table_pos[state]);
      log_neg += std::log(clique.table_neg[state]);
    }
    out[static_cast<Eigen::Index>(r)] = sigmoid(log_pos - log_neg);
  }
  return out;
}

}  // namespace ivy
