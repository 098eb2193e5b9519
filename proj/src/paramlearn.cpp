#include "ivy/paramlearn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace ivy {

std::vector<std::pair<int, int>> cond_indep_pairs(const CandidateGraph& graph) {
  const int v = static_cast<int>(graph.valid.size());
  // clique id per local position
  std::vector<int> clique_of(static_cast<std::size_t>(v), -1);
  std::vector<int> local(graph.valid.empty() ? 0 : graph.valid.back() + 1, -1);
  for (int i = 0; i < v; ++i) local[static_cast<std::size_t>(graph.valid[i])] = i;
  for (std::size_t ci = 0; ci < graph.cliques.size(); ++ci)
    for (int member : graph.cliques[ci])
      clique_of[static_cast<std::size_t>(local[static_cast<std::size_t>(member)])] =
          static_cast<int>(ci);

  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j < v; ++j)
    for (int i = 0; i < j; ++i)
      if (clique_of[static_cast<std::size_t>(i)] != clique_of[static_cast<std::size_t>(j)])
        pairs.emplace_back(i, j);
  return pairs;
}

MomentSystem build_system(const Eigen::MatrixXd& O,
                          const std::vector<std::pair<int, int>>& pairs, double eps_o,
                          Diagnostics* diags) {
  const Eigen::Index v = O.rows();
  if (O.cols() != v) throw Error(ErrorCode::kShapeMismatch, "second moment must be square");

  MomentSystem sys;
  for (const auto& [i, j] : pairs) {
    if (std::abs(O(i, j)) >= eps_o) {
      sys.pairs.emplace_back(i, j);
    } else {
      sys.dropped.emplace_back(i, j);
      if (diags) {
        std::ostringstream msg;
        msg << "DroppedPair: |O(" << i << "," << j << ")| = " << std::abs(O(i, j))
            << " below floor " << eps_o;
        diags->push_back(msg.str());
      }
    }
  }

  std::vector<int> partners(static_cast<std::size_t>(v), 0);
  for (const auto& [i, j] : sys.pairs) {
    ++partners[static_cast<std::size_t>(i)];
    ++partners[static_cast<std::size_t>(j)];
  }
  for (Eigen::Index j = 0; j < v; ++j)
    if (partners[static_cast<std::size_t>(j)] < 2)
      throw Error(ErrorCode::kRankDeficient,
                  "candidate at position " + std::to_string(j) +
                      " has fewer than 2 usable conditionally independent partners");

  sys.M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sys.pairs.size()), v);
  sys.q.resize(static_cast<Eigen::Index>(sys.pairs.size()));
  for (std::size_t r = 0; r < sys.pairs.size(); ++r) {
    const auto [i, j] = sys.pairs[r];
    sys.M(static_cast<Eigen::Index>(r), i) = 1.0;
    sys.M(static_cast<Eigen::Index>(r), j) = 1.0;
    sys.q[static_cast<Eigen::Index>(r)] = std::log(O(i, j) * O(i, j));
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.M);
  if (qr.rank() < v)
    throw Error(ErrorCode::kRankDeficient,
                "log-moment design matrix is column-rank deficient (rank " +
                    std::to_string(qr.rank()) + " of " + std::to_string(v) + ")");
  return sys;
}

Eigen::VectorXd solve_magnitudes(const MomentSystem& system, double eps_clip) {
  const Eigen::VectorXd ell = system.M.colPivHouseholderQr().solve(system.q);
  Eigen::VectorXd abs_mu(ell.size());
  for (Eigen::Index j = 0; j < ell.size(); ++j)
    abs_mu[j] = std::clamp(std::exp(0.5 * ell[j]), 0.0, 1.0 - eps_clip);
  return abs_mu;
}

SignResult recover_signs(const Eigen::VectorXd& abs_mu, const Eigen::MatrixXd& O,
                         const std::vector<std::pair<int, int>>& pairs, double eps_o,
                         Diagnostics* diags) {
  const Eigen::Index v = abs_mu.size();
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(v));
  for (const auto& [i, j] : pairs) {
    if (std::abs(O(i, j)) < eps_o) continue;
    const int sign = O(i, j) > 0.0 ? 1 : -1;
    adj[static_cast<std::size_t>(i)].emplace_back(j, sign);
    adj[static_cast<std::size_t>(j)].emplace_back(i, sign);
  }

  SignResult out;
  out.mu.resize(v);
  std::vector<int> sign(static_cast<std::size_t>(v), 0);
  std::vector<int> component(static_cast<std::size_t>(v), -1);

  for (Eigen::Index root = 0; root < v; ++root) {
    if (sign[static_cast<std::size_t>(root)] != 0) continue;
    const int comp = out.components++;
    sign[static_cast<std::size_t>(root)] = 1;
    component[static_cast<std::size_t>(root)] = comp;
    std::deque<int> queue{static_cast<int>(root)};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (const auto& [w, s] : adj[static_cast<std::size_t>(u)]) {
        const int implied = sign[static_cast<std::size_t>(u)] * s;
        if (sign[static_cast<std::size_t>(w)] == 0) {
          sign[static_cast<std::size_t>(w)] = implied;
          component[static_cast<std::size_t>(w)] = comp;
          queue.push_back(w);
        } else if (sign[static_cast<std::size_t>(w)] != implied) {
          ++out.violations;  // frustrated off-tree constraint; kept as found
        }
      }
    }
  }
  out.violations /= 2;  // each frustrated pair seen from both endpoints

  // Valid candidates agree with z more often than not: flip each component
  // so its signed magnitude sum is positive.
  std::vector<double> comp_sum(static_cast<std::size_t>(out.components), 0.0);
  for (Eigen::Index j = 0; j < v; ++j)
    comp_sum[static_cast<std::size_t>(component[static_cast<std::size_t>(j)])] +=
        sign[static_cast<std::size_t>(j)] * abs_mu[j];
  for (Eigen::Index j = 0; j < v; ++j) {
    const double flip =
        comp_sum[static_cast<std::size_t>(component[static_cast<std::size_t>(j)])] < 0.0 ? -1.0
                                                                                         : 1.0;
    out.mu[j] = flip * sign[static_cast<std::size_t>(j)] * abs_mu[j];
  }

  if (out.components > 1 && diags)
    diags->push_back("DisconnectedSignGraph: " + std::to_string(out.components) +
                     " components flipped independently by their majority sums");
  if (out.violations > 0 && diags)
    diags->push_back("SignViolations: " + std::to_string(out.violations) +
                     " frustrated sign constraints");
  return out;
}

Eigen::MatrixXd second_moment(const BinMatrix& W, const std::vector<int>& valid,
                              const std::vector<int>& rows, bool unbiased) {
  const auto v = static_cast<Eigen::Index>(valid.size());
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "second moment needs at least one row");

  constexpr Eigen::Index kBlock = 8192;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(v, v);
  Eigen::MatrixXd block(std::min(kBlock, n), v);
  Eigen::Index filled = 0;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < v; ++j)
      block(filled, j) = static_cast<double>(
          W(rows[static_cast<std::size_t>(r)], valid[static_cast<std::size_t>(j)]));
    if (++filled == block.rows() || r + 1 == n) {
      gram.selfadjointView<Eigen::Lower>().rankUpdate(block.topRows(filled).transpose());
      filled = 0;
    }
  }
  Eigen::MatrixXd O = Eigen::MatrixXd(gram.selfadjointView<Eigen::Lower>()) /
                      static_cast<double>(unbiased ? std::max<Eigen::Index>(n - 1, 1) : n);
  O.diagonal().setOnes();  // w_j^2 = 1 identically
  return O;
}

namespace {

Model param_learn_impl(const Eigen::MatrixXd& O, const CandidateGraph& graph, double eps_o,
                       const ParamLearnOptions& options, Diagnostics* diags) {
  if (graph.valid.size() < 3)
    throw Error(ErrorCode::kTooFewValid, "parameter learning needs at least 3 valid candidates");

  const auto pairs = cond_indep_pairs(graph);
  const MomentSystem sys = build_system(O, pairs, eps_o, diags);
  const Eigen::VectorXd abs_mu = solve_magnitudes(sys, options.eps_clip);
  const SignResult signs = recover_signs(abs_mu, O, sys.pairs, eps_o, diags);

  Model model;
  model.valid = graph.valid;
  model.mu = signs.mu;
  model.second_moment = O;
  model.prior_z = options.prior_z;
  model.sign_violations = signs.violations;
  if (diags) model.diagnostics = *diags;
  return model;
}

}  // namespace

Model param_learn_rows(const BinMatrix& W, const std::vector<int>& rows,
                       const CandidateGraph& graph, const ParamLearnOptions& options,
                       Diagnostics* diags) {
  const Eigen::MatrixXd O = second_moment(W, graph.valid, rows, options.unbiased_moment);
  const double eps_o = std::max(1.0 / static_cast<double>(rows.size()), options.eps_o_floor);
  return param_learn_impl(O, graph, eps_o, options, diags);
}

Model param_learn(const BinMatrix& W, const CandidateGraph& graph,
                  const ParamLearnOptions& options, Diagnostics* diags) {
  std::vector<int> rows(static_cast<std::size_t>(W.rows()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
  return param_learn_rows(W, rows, graph, options, diags);
}

Model param_learn_from_moments(const Eigen::MatrixXd& O, const CandidateGraph& graph,
                               double eps_o, const ParamLearnOptions& options,
                               Diagnostics* diags) {
  return param_learn_impl(O, graph, eps_o, options, diags);
}

}  // namespace ivy
