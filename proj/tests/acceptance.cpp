// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each criterion runs at its stated tolerance; the slow
// protocol criteria also enforce their wall-clock budgets.

#include "ivy/baselines.hpp"
#include "ivy/core.hpp"
#include "ivy/datagen.hpp"
#include "ivy/effect.hpp"
#include "ivy/evalharness.hpp"
#include "ivy/io.hpp"
#include "ivy/paramlearn.hpp"
#include "ivy/posterior.hpp"
#include "ivy/rng.hpp"
#include "ivy/structlearn.hpp"
#include "oracles.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace ivy;

namespace {

int g_failures = 0;

void run_criterion(int id, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    std::tie(pass, detail) = body();
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] %2d. %s: %s (%.1fs)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

SyntheticSpec ci_spec(std::vector<double> accs, double prior_z) {
  SyntheticSpec spec;
  spec.prior_z = prior_z;
  spec.valid_groups.push_back(CliqueGroup::independent(std::move(accs)));
  spec.x_table = {0.3, 0.3, 0.7, 0.7};
  spec.y_table = {0.4, 0.6, 0.4, 0.6};
  return spec;
}

CandidateGraph singleton_graph(int m) {
  std::vector<int> valid(static_cast<std::size_t>(m));
  std::iota(valid.begin(), valid.end(), 0);
  return CandidateGraph::from_edges(std::move(valid), {});
}

struct Fig5Run {
  double ivy_median = 0, ivy_lo = 0, ivy_hi = 0;
  double uas_median = 0, was_median = 0;
};

Fig5Run run_fig5(const std::string& preset_name, std::uint64_t seed) {
  const SampleResult sr = sample(preset(preset_name), 100000, seed);
  const Dataset data = orient_candidates(sr.data).data;
  Diagnostics diags;
  const ModelSelection sel = select_model(data.W, default_lambda_grid(data.n(), data.m()),
                                          default_gamma_grid(), 2, &diags);
  const CandidateGraph graph = structure_learn(data.W, sel.selected, &diags);
  EstimateOptions opts;
  opts.replicates = 100;
  opts.seed = seed + 1;
  Fig5Run out;
  const EffectReport ivy_r = estimate_effect(data, graph, opts);
  out.ivy_median = ivy_r.median;
  out.ivy_lo = ivy_r.ci_low;
  out.ivy_hi = ivy_r.ci_high;
  out.uas_median = uas_effect(data, opts).median;
  out.was_median = was_effect(data, opts).median;
  return out;
}

bool covers_zero(const EffectReport& r) { return r.ci_low <= 0.0 && 0.0 <= r.ci_high; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

std::pair<bool, std::string> criterion_population_exactness() {
  double worst_mu = 0.0, worst_post = 0.0;

  const std::vector<std::pair<std::vector<double>, double>> ci_cases = {
      {{0.8, 0.7, 0.6}, 0.5},
      {{0.9, 0.85, 0.8, 0.75, 0.7}, 0.35},
      {{0.55, 0.6, 0.65, 0.7}, 0.65},
      {{0.95, 0.6, 0.55, 0.8, 0.7, 0.65}, 0.5},
      {{0.525, 0.55, 0.575}, 0.45},
  };
  for (const auto& [accs, prior] : ci_cases) {
    const SyntheticSpec spec = ci_spec(accs, prior);
    const ExactDistribution dist = enumerate_joint(spec);
    const ExactMoments em = exact_moments(dist);
    for (Eigen::Index j = 0; j < em.mu.size(); ++j)
      if (std::abs(em.mu[j]) < 0.05) return {false, "test spec violates |mu*| >= 0.05"};

    ParamLearnOptions plopts;
    plopts.prior_z = prior;
    const Model model = param_learn_from_moments(
        em.O, singleton_graph(static_cast<int>(accs.size())), 1e-8, plopts);
    worst_mu = std::max(worst_mu, (model.mu - em.mu).cwiseAbs().maxCoeff());

    const int m = static_cast<int>(accs.size());
    for (int mask = 0; mask < (1 << m); ++mask) {
      Eigen::VectorXd w(m);
      std::vector<int> signs;
      for (int j = 0; j < m; ++j) {
        w[j] = (mask >> j) & 1 ? 1.0 : -1.0;
        signs.push_back((mask >> j) & 1 ? 1 : -1);
      }
      const double got = ci_posterior(w, model.mu, prior);
      worst_post = std::max(worst_post, std::abs(got - oracle::bayes_posterior(dist, signs)));
    }
  }

  // dependent-clique posterior against the same oracle
  {
    const SyntheticSpec spec = preset("dependency_clique");
    const ExactDistribution dist = enumerate_joint(spec);
    const ExactMoments em = exact_moments(dist);
    const CandidateGraph graph = spec.true_graph();
    Model model = param_learn_from_moments(em.O, graph, 1e-8, {});
    worst_mu = std::max(worst_mu, (model.mu - em.mu).cwiseAbs().maxCoeff());
    MomentMatchOptions mm;
    mm.tol = 1e-12;
    fit_clique_params(model, graph, mm);
    for (int mask = 0; mask < (1 << 8); ++mask) {
      Eigen::VectorXd w(8);
      std::vector<int> signs;
      for (int j = 0; j < 8; ++j) {
        w[j] = (mask >> j) & 1 ? 1.0 : -1.0;
        signs.push_back((mask >> j) & 1 ? 1 : -1);
      }
      const double got = clique_posterior(w, model.clique_params, model.prior_z, model.valid);
      worst_post = std::max(worst_post, std::abs(got - oracle::bayes_posterior(dist, signs)));
    }
  }

  std::ostringstream detail;
  detail << "max |mu - mu*| = " << worst_mu << ", max posterior gap = " << worst_post;
  return {worst_mu <= 1e-8 && worst_post <= 1e-10, detail.str()};
}

std::pair<bool, std::string> criterion_fig5a() {
  int ivy_ok = 0, uas_ok = 0, was_ok = 0;
  std::ostringstream detail;
  for (std::uint64_t seed : {11u, 22u, 33u, 44u, 55u}) {
    const Fig5Run r = run_fig5("null_fig5a", seed);
    const bool covers = r.ivy_lo <= 0.0 && 0.0 <= r.ivy_hi;
    if (r.ivy_median >= -0.10 && r.ivy_median <= 0.15 && covers) ++ivy_ok;
    if (r.uas_median >= 0.15) ++uas_ok;
    if (r.was_median >= 0.15) ++was_ok;
    detail << "[ivy " << r.ivy_median << " uas " << r.uas_median << " was " << r.was_median
           << "] ";
  }
  detail << "ivy " << ivy_ok << "/5, uas " << uas_ok << "/5, was " << was_ok << "/5";
  return {ivy_ok >= 4 && uas_ok >= 4 && was_ok >= 4, detail.str()};
}

std::pair<bool, std::string> criterion_fig5b() {
  int ivy_ok = 0, uas_ok = 0, was_ok = 0;
  std::ostringstream detail;
  for (std::uint64_t seed : {111u, 222u, 333u, 444u, 555u}) {
    const Fig5Run r = run_fig5("effect_fig5b", seed);
    if (std::abs(r.ivy_median - 0.150) <= 0.10) ++ivy_ok;
    if (std::abs(r.uas_median - 0.150) >= 0.15) ++uas_ok;
    if (std::abs(r.was_median - 0.150) >= 0.15) ++was_ok;
    detail << "[ivy " << r.ivy_median << " uas " << r.uas_median << " was " << r.was_median
           << "] ";
  }
  detail << "ivy " << ivy_ok << "/5, uas " << uas_ok << "/5, was " << was_ok << "/5";
  return {ivy_ok >= 4 && uas_ok >= 4 && was_ok >= 4, detail.str()};
}

std::pair<bool, std::string> criterion_invalid_z() {
  const auto points = robustness_sweep({0.5, 0.525, 0.6}, 50000, 100, 777);
  const bool ivy_05 = covers_zero(points[0].ivy);
  const bool ivy_0525 = covers_zero(points[1].ivy);
  const bool ivy_06 = !covers_zero(points[2].ivy);
  const bool uas_0525 = !covers_zero(points[1].uas);
  const bool was_0525 = !covers_zero(points[1].was);
  std::ostringstream detail;
  detail << "ivy@0.5 [" << points[0].ivy.ci_low << "," << points[0].ivy.ci_high << "] ivy@0.525 ["
         << points[1].ivy.ci_low << "," << points[1].ivy.ci_high << "] ivy@0.6 ["
         << points[2].ivy.ci_low << "," << points[2].ivy.ci_high << "] uas@0.525 ["
         << points[1].uas.ci_low << "," << points[1].uas.ci_high << "] was@0.525 ["
         << points[1].was.ci_low << "," << points[1].was.ci_high << "]";
  return {ivy_05 && ivy_0525 && ivy_06 && uas_0525 && was_0525, detail.str()};
}

std::pair<bool, std::string> criterion_calibration() {
  const CalibrationResult res = calibration(preset("calibration_null"), 200, 10000, 100, 888);
  std::ostringstream detail;
  detail << "coverage " << res.coverage << " over " << res.datasets << " datasets, "
         << res.failures << " failures";
  return {res.coverage >= 0.90 && res.coverage <= 0.99, detail.str()};
}

std::pair<bool, std::string> criterion_scaling() {
  const auto points = scaling_curve(preset("calibration_null"), {2500, 10000}, 20, 999);
  const double ratio = points[0].mean_error / points[1].mean_error;
  std::ostringstream detail;
  detail << "err(2500)/err(10000) = " << ratio;
  return {ratio >= 1.4 && ratio <= 2.8, detail.str()};
}

std::pair<bool, std::string> criterion_structure_recovery() {
  const SyntheticSpec spec = preset("null_fig5a");
  const CandidateGraph truth = spec.true_graph();
  const std::vector<std::pair<int, int>> true_edges = truth.edges;

  double valid_f1_sum = 0, edge_f1_sum = 0, auc_sum = 0;
  for (int s = 0; s < 10; ++s) {
    const std::uint64_t seed = 3000 + static_cast<std::uint64_t>(s);
    const SampleResult sr = sample(spec, 100000, seed);
    const Dataset data = orient_candidates(sr.data).data;
    Diagnostics diags;
    const ModelSelection sel = select_model(data.W, default_lambda_grid(data.n(), data.m()),
                                            default_gamma_grid(), 2, &diags);
    const CandidateGraph graph = structure_learn(data.W, sel.selected, &diags);

    int hits = 0;
    for (int v : graph.valid)
      if (v < 10) ++hits;
    const double precision =
        graph.valid.empty() ? 0.0
                            : static_cast<double>(hits) / static_cast<double>(graph.valid.size());
    const double recall = static_cast<double>(hits) / 10.0;
    valid_f1_sum += (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0.0;

    int edge_hits = 0;
    for (const auto& e : graph.edges)
      if (std::find(true_edges.begin(), true_edges.end(), e) != true_edges.end()) ++edge_hits;
    const double ep = graph.edges.empty()
                          ? 0.0
                          : static_cast<double>(edge_hits) / static_cast<double>(graph.edges.size());
    const double er = static_cast<double>(edge_hits) / static_cast<double>(true_edges.size());
    edge_f1_sum += (ep + er) > 0 ? 2 * ep * er / (ep + er) : 0.0;

    auc_sum += validity_auc(spec, 100000, std::nullopt, 2, seed);
  }
  const double valid_f1 = valid_f1_sum / 10.0;
  const double edge_f1 = edge_f1_sum / 10.0;
  const double mean_auc = auc_sum / 10.0;
  std::ostringstream detail;
  detail << "valid F1 " << valid_f1 << ", edge F1 " << edge_f1 << ", AUC " << mean_auc;
  return {valid_f1 >= 0.9 && edge_f1 >= 0.8 && mean_auc >= 0.95, detail.str()};
}

std::pair<bool, std::string> criterion_misspecification_floor() {
  const SyntheticSpec spec = preset("dependency_clique");
  const ExactMoments em = exact_moments(enumerate_joint(spec));
  const CandidateGraph truth = spec.true_graph();
  const CandidateGraph forced_ci = CandidateGraph::from_edges(truth.valid, {});

  const SampleResult sr = sample(spec, 1000000, 1234);
  const double err_correct = (param_learn(sr.data.W, truth).mu - em.mu).norm();
  const double err_forced = (param_learn(sr.data.W, forced_ci).mu - em.mu).norm();
  std::ostringstream detail;
  detail << "correct " << err_correct << ", forced-CI " << err_forced << " (ratio "
         << err_forced / err_correct << ")";
  return {err_forced >= 5.0 * err_correct, detail.str()};
}

std::pair<bool, std::string> criterion_solver_properties() {
  RngStream s(4321, RngDomain::kHarness, 0);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 4 + static_cast<int>(s.next_below(21));
    Eigen::MatrixXd sigma;
    if (trial % 10 < 7) {
      // covariance of random binary data
      SyntheticSpec spec;
      std::vector<double> accs;
      for (int j = 0; j < m; ++j) accs.push_back(0.52 + 0.45 * s.next_uniform());
      spec.valid_groups.push_back(CliqueGroup::independent(accs));
      spec.x_table = {0.3, 0.3, 0.7, 0.7};
      spec.y_table = {0.4, 0.6, 0.4, 0.6};
      const long n = 1000 + static_cast<long>(s.next_below(4000));
      sigma = sample_covariance(sample(spec, n, s.next_u64()).data.W);
    } else {
      // random PSD matrix
      Eigen::MatrixXd A(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) A(i, j) = 2.0 * s.next_uniform() - 1.0;
      sigma = A * A.transpose() / static_cast<double>(m);
    }
    const double lambda = 0.005 + 0.5 * s.next_uniform();
    const double gamma = 0.25 + 3.75 * s.next_uniform();
    const DecompositionResult res = decompose(sigma, lambda, gamma);

    for (std::size_t k = 1; k < res.objective_trace.size(); ++k)
      if (res.objective_trace[k] >
          res.objective_trace[k - 1] + 1e-10 * (1.0 + std::abs(res.objective_trace[k - 1])))
        return {false, "objective increased at trial " + std::to_string(trial)};
    for (double slack : res.feasibility_slack)
      if (slack < -1e-8) return {false, "infeasible iterate at trial " + std::to_string(trial)};
    if ((res.S - res.S.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
        (res.L - res.L.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      return {false, "asymmetry at trial " + std::to_string(trial)};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(res.L, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8)
      return {false, "L not PSD at trial " + std::to_string(trial)};
    ++checked;
  }
  return {true, std::to_string(checked) + " random inputs monotone and feasible"};
}

std::pair<bool, std::string> criterion_logistic_oracle() {
  RngStream s(5432, RngDomain::kHarness, 0);
  double worst_slope = 0, worst_grad = 0;
  int tables = 0;
  while (tables < 100) {
    // random contingency table with all four cells occupied
    const long c_pp = 1 + static_cast<long>(s.next_below(500));
    const long c_pm = 1 + static_cast<long>(s.next_below(500));
    const long c_mp = 1 + static_cast<long>(s.next_below(500));
    const long c_mm = 1 + static_cast<long>(s.next_below(500));
    const long n = c_pp + c_pm + c_mp + c_mm;
    BinVector t(n), c(n);
    long i = 0;
    for (long k = 0; k < c_pp; ++k, ++i) {
      t[i] = 1;
      c[i] = 1;
    }
    for (long k = 0; k < c_pm; ++k, ++i) {
      t[i] = 1;
      c[i] = -1;
    }
    for (long k = 0; k < c_mp; ++k, ++i) {
      t[i] = -1;
      c[i] = 1;
    }
    for (long k = 0; k < c_mm; ++k, ++i) {
      t[i] = -1;
      c[i] = -1;
    }

    const LogisticFit fit = logistic_fit(t, c);
    if (fit.separated) continue;
    const double expected = oracle::logistic_slope_2x2(
        static_cast<double>(c_pp), static_cast<double>(c_pm), static_cast<double>(c_mp),
        static_cast<double>(c_mm));
    worst_slope = std::max(worst_slope, std::abs(fit.slope - expected));

    double g0 = 0, g1 = 0;
    for (long k = 0; k < n; ++k) {
      const double mu = 1.0 / (1.0 + std::exp(-(fit.intercept + fit.slope * c[k])));
      const double r = (t[k] > 0 ? 1.0 : 0.0) - mu;
      g0 += r;
      g1 += r * c[k];
    }
    worst_grad = std::max(worst_grad, std::max(std::abs(g0), std::abs(g1)));
    ++tables;
  }
  std::ostringstream detail;
  detail << "max slope gap " << worst_slope << ", max gradient " << worst_grad;
  return {worst_slope <= 1e-6 && worst_grad <= 1e-8, detail.str()};
}

std::pair<bool, std::string> criterion_power() {
  for (double level : {0.01, 0.05, 0.10})
    if (power(5000, 0.5, 0.5, 0.0, 0.7, level) != level / 2.0)
      return {false, "power at alpha=0 is not exactly level/2"};

  double prev = -1;
  for (double n : {100.0, 1000.0, 10000.0, 100000.0}) {
    const double p = power(n, 0.4, 0.6, 0.1, 0.5, 0.05);
    if (p < prev) return {false, "power not monotone in n"};
    prev = p;
  }
  prev = -1;
  for (double a : {0.0, 0.02, 0.05, 0.1, 0.3}) {
    const double p = power(20000, 0.4, 0.6, a, 0.5, 0.05);
    if (p < prev) return {false, "power not monotone in |alpha|"};
    prev = p;
  }
  prev = -1;
  for (double b : {0.0, 0.1, 0.2, 0.5, 0.9}) {
    const double p = power(20000, 0.4, 0.6, 0.1, b, 0.05);
    if (p < prev) return {false, "power not monotone in |beta|"};
    prev = p;
  }

  const double zeta = normal_quantile(1.0 - 0.025);
  const double expected = 1.0 - oracle::normal_cdf_series(zeta - 50.0 * 0.15 * 0.6);
  const double got = power(10000, 0.5, 0.5, 0.15, 0.6, 0.05);
  std::ostringstream detail;
  detail << "reference point " << got << " vs erf-series oracle " << expected;
  return {std::abs(got - expected) <= 1e-10, detail.str()};
}

std::pair<bool, std::string> criterion_determinism() {
  const std::string bin = IVY_CLI_PATH;
  char templ[] = "/tmp/ivy_accept_XXXXXX";
  const std::string dir = mkdtemp(templ);
  auto shell = [&](const std::string& args) {
    const std::string cmd = bin + " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };

  for (int round = 0; round < 2; ++round) {
    const std::string tag = dir + "/" + std::to_string(round);
    if (shell("generate --preset dependency_clique --n 20000 --seed 42 --out " + tag +
              "gen.csv --truth-out " + tag + "gen.truth.csv") != 0)
      return {false, "generate failed"};
    if (shell("power --power-n 5000 --power-p1 0.4 --power-alpha 0.1 --power-beta 0.5 --out " +
              tag + "pow.json") != 0)
      return {false, "power failed"};
    if (shell("pipeline --preset dependency_clique --n 20000 --seed 7 --replicates 50 "
              "--methods ivy,uas,was,association --out " +
              tag + "pipe.json") != 0)
      return {false, "pipeline failed"};
  }
  for (const char* f : {"gen.csv", "gen.truth.csv", "pow.json", "pipe.json"}) {
    const std::string a = slurp(dir + "/0" + f);
    if (a.empty() || a != slurp(dir + "/1" + f))
      return {false, std::string(f) + " differs across runs"};
  }

  const std::string csv = dir + "/0gen.csv";
  for (int round = 0; round < 2; ++round) {
    const std::string tag = dir + "/" + std::to_string(round);
    if (shell("fit --input " + csv + " --seed 5 --out " + tag + "model.json") != 0)
      return {false, "fit failed"};
    if (shell("estimate --input " + csv + " --model " + tag +
              "model.json --seed 5 --replicates 40 --methods ivy,uas --out " + tag +
              "est.json") != 0)
      return {false, "estimate failed"};
  }
  if (slurp(dir + "/0model.json") != slurp(dir + "/1model.json"))
    return {false, "model files differ across runs"};
  if (slurp(dir + "/0est.json") != slurp(dir + "/1est.json"))
    return {false, "estimate reports differ across runs"};

  return {true, "generate, fit, estimate, pipeline, power byte-identical"};
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;

  {
    const auto t0 = Clock::now();
    run_criterion(1, "population exactness", criterion_population_exactness);
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (s >= 5.0) {
      std::printf("[FAIL]  1. population exactness runtime %.1fs exceeds 5s\n", s);
      ++g_failures;
    }
  }
  {
    const auto t0 = Clock::now();
    run_criterion(2, "spurious-correlation dismissal", criterion_fig5a);
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (s >= 600.0) {
      std::printf("[FAIL]  2. runtime %.1fs exceeds 10min\n", s);
      ++g_failures;
    }
  }
  run_criterion(3, "true-effect recovery", criterion_fig5b);
  run_criterion(4, "invalid-summary robustness", criterion_invalid_z);
  {
    const auto t0 = Clock::now();
    run_criterion(5, "confidence interval calibration", criterion_calibration);
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (s >= 1200.0) {
      std::printf("[FAIL]  5. runtime %.1fs exceeds 20min\n", s);
      ++g_failures;
    }
  }
  run_criterion(6, "1/sqrt(n) parameter-error scaling", criterion_scaling);
  run_criterion(7, "structure recovery", criterion_structure_recovery);
  run_criterion(8, "misspecification error floor", criterion_misspecification_floor);
  run_criterion(9, "solver monotonicity and feasibility", criterion_solver_properties);
  run_criterion(10, "logistic closed-form oracle", criterion_logistic_oracle);
  run_criterion(11, "power estimator", criterion_power);
  run_criterion(12, "determinism", criterion_determinism);

  if (g_failures == 0)
    std::printf("acceptance: all criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
