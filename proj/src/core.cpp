#include "ivy/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ivy {

CandidateGraph CandidateGraph::from_edges(std::vector<int> valid,
                                          std::vector<std::pair<int, int>> edges) {
  std::sort(valid.begin(), valid.end());
  valid.erase(std::unique(valid.begin(), valid.end()), valid.end());

  std::vector<int> pos(valid.empty() ? 0 : valid.back() + 1, -1);
  for (std::size_t i = 0; i < valid.size(); ++i) pos[valid[i]] = static_cast<int>(i);
  auto local = [&](int v) {
    if (v < 0 || v >= static_cast<int>(pos.size()) || pos[v] < 0)
      throw Error(ErrorCode::kInvalidArgument,
                  "edge endpoint " + std::to_string(v) + " not in valid set");
    return pos[v];
  };

  for (auto& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first == e.second)
      throw Error(ErrorCode::kInvalidArgument, "self-loop in dependency set");
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  // Connected components via union-find over local indices.
  std::vector<int> parent(valid.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& e : edges) {
    const int a = find(local(e.first));
    const int b = find(local(e.second));
    if (a != b) parent[a] = b;
  }

  std::vector<std::vector<int>> comps(valid.size());
  for (std::size_t i = 0; i < valid.size(); ++i)
    comps[static_cast<std::size_t>(find(static_cast<int>(i)))].push_back(valid[i]);

  CandidateGraph g;
  g.valid = std::move(valid);
  g.edges = std::move(edges);
  for (auto& c : comps) {
    if (c.empty()) continue;
    std::sort(c.begin(), c.end());
    g.cliques.push_back(std::move(c));
  }
  std::sort(g.cliques.begin(), g.cliques.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return g;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of empty vector");
  if (sorted.size() == 1) return sorted.front();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

EffectReport make_report(std::string method, std::vector<double> replicates, long n_used,
                         Diagnostics diagnostics) {
  if (replicates.empty())
    throw Error(ErrorCode::kAllReplicatesFailed,
                "no usable replicates for method " + method);
  EffectReport r;
  r.method = std::move(method);
  r.replicates = std::move(replicates);
  r.n_used = n_used;
  r.diagnostics = std::move(diagnostics);
  std::vector<double> sorted = r.replicates;
  std::sort(sorted.begin(), sorted.end());
  r.median = quantile_sorted(sorted, 0.5);
  r.ci_low = quantile_sorted(sorted, 0.025);
  r.ci_high = quantile_sorted(sorted, 0.975);
  return r;
}

void validate(const Dataset& dataset) {
  const auto n = dataset.W.rows();
  const auto m = dataset.W.cols();
  if (n < 1 || m < 1)
    throw Error(ErrorCode::kShapeMismatch, "dataset requires n >= 1 and m >= 1");
  if (dataset.y.size() != n || dataset.x.size() != n) {
    std::ostringstream msg;
    msg << "length mismatch: y=" << dataset.y.size() << " x=" << dataset.x.size()
        << " W rows=" << n;
    throw Error(ErrorCode::kShapeMismatch, msg.str());
  }
  if (!dataset.candidate_names.empty() &&
      static_cast<Eigen::Index>(dataset.candidate_names.size()) != m)
    throw Error(ErrorCode::kShapeMismatch, "candidate_names length disagrees with W");

  auto check = [](std::int8_t v, const char* what, Eigen::Index row, Eigen::Index col) {
    if (v != 1 && v != -1) {
      std::ostringstream msg;
      msg << "non-binary value " << static_cast<int>(v) << " in " << what << " at row " << row
          << " col " << col;
      throw Error(ErrorCode::kNonBinaryValue, msg.str());
    }
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    check(dataset.y[i], "y", i, 0);
    check(dataset.x[i], "x", i, 0);
  }
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) check(dataset.W(i, j), "W", i, j);
}

OrientResult orient_candidates(const Dataset& dataset) {
  const auto n = dataset.n();
  const auto m = dataset.m();
  OrientResult out;
  out.data = dataset;
  out.flipped.assign(static_cast<std::size_t>(m), false);

  // Correlation with x shares x's centering across columns; only the sign of
  // the covariance matters.
  double x_mean = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) x_mean += dataset.x[i];
  x_mean /= static_cast<double>(n);

  for (Eigen::Index j = 0; j < m; ++j) {
    double dot = 0.0, w_mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      dot += static_cast<double>(dataset.W(i, j)) * static_cast<double>(dataset.x[i]);
      w_mean += dataset.W(i, j);
    }
    w_mean /= static_cast<double>(n);
    const double cov = dot / static_cast<double>(n) - w_mean * x_mean;
    if (cov < 0.0) {
      out.flipped[static_cast<std::size_t>(j)] = true;
      for (Eigen::Index i = 0; i < n; ++i) out.data.W(i, j) = static_cast<std::int8_t>(-dataset.W(i, j));
    }
  }
  return out;
}

}  // namespace ivy
