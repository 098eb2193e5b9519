#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ivy/baselines.hpp"
#include "ivy/core.hpp"
#include "ivy/datagen.hpp"
#include "ivy/effect.hpp"
#include "ivy/rng.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace ivy;

TEST_CASE("unweighted score with one candidate is the shifted column") {
  BinMatrix W(4, 1);
  W << 1, -1, 1, -1;
  const Eigen::VectorXd p = uas_summary(W);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);
  CHECK(p[2] == 1.0);
  CHECK(p[3] == 0.0);
}

TEST_CASE("constant rows normalize to one half") {
  BinMatrix W(3, 4);
  W.setConstant(1);
  const Eigen::VectorXd p = uas_summary(W);
  for (int i = 0; i < 3; ++i) CHECK(p[i] == 0.5);
}

TEST_CASE("unweighted score ignores candidate order and reflects negation") {
  const SampleResult sr = sample(preset("calibration_null"), 500, 3);
  const Eigen::VectorXd base = uas_summary(sr.data.W);

  BinMatrix shuffled = sr.data.W;
  for (Eigen::Index i = 0; i < shuffled.rows(); ++i) {
    std::swap(shuffled(i, 0), shuffled(i, 7));
    std::swap(shuffled(i, 2), shuffled(i, 5));
  }
  CHECK((uas_summary(shuffled) - base).cwiseAbs().maxCoeff() == 0.0);

  BinMatrix negated = -sr.data.W;
  const Eigen::VectorXd flipped = uas_summary(negated);
  for (Eigen::Index i = 0; i < base.size(); ++i)
    CHECK(flipped[i] == doctest::Approx(1.0 - base[i]).epsilon(1e-12));
}

TEST_CASE("weighted score saturates on a perfectly predictive candidate") {
  const int n = 400;
  RngStream s(5, RngDomain::kHarness, 11);
  Dataset d;
  d.y.resize(n);
  d.x.resize(n);
  d.W.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    d.x[i] = s.bernoulli(0.5) ? 1 : -1;
    d.y[i] = s.bernoulli(0.5) ? 1 : -1;
    d.W(i, 0) = d.x[i];                     // perfect predictor
    d.W(i, 1) = s.bernoulli(0.5) ? 1 : -1;  // noise
  }
  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  const Eigen::VectorXd p = was_summary(d, rows, rows);
  for (int i = 0; i < n; ++i) {
    if (d.x[i] > 0)
      CHECK(p[i] > 0.99);
    else
      CHECK(p[i] < 0.01);
  }
  // the separating candidate dominates; every coefficient obeys the cap
  const Eigen::VectorXd beta = was_weights(d, rows);
  CHECK(beta[1] >= 10.0);
  CHECK(beta.cwiseAbs().maxCoeff() <= kSlopeCap);
}

TEST_CASE("null candidates give near-constant weighted scores") {
  const int n = 100000;
  RngStream s(6, RngDomain::kHarness, 12);
  Dataset d;
  d.y.resize(n);
  d.x.resize(n);
  d.W.resize(n, 5);
  for (int i = 0; i < n; ++i) {
    d.x[i] = s.bernoulli(0.6) ? 1 : -1;
    d.y[i] = s.bernoulli(0.5) ? 1 : -1;
    for (int j = 0; j < 5; ++j) d.W(i, j) = s.bernoulli(0.5) ? 1 : -1;
  }
  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  const Eigen::VectorXd p = was_summary(d, rows, rows);
  // fitted probabilities hover around P(x=1) = 0.6; coefficient noise is
  // O(1/sqrt(n)) on the probability scale
  for (int i = 0; i < n; ++i) CHECK(std::abs(p[i] - 0.6) < 0.03);
}

TEST_CASE("weighted score ranks rows like naive-Bayes scoring at scale") {
  // x observed directly in place of the latent: candidates are channels of x
  const int n = 100000;
  RngStream s(7, RngDomain::kHarness, 13);
  Dataset d;
  d.y.resize(n);
  d.x.resize(n);
  d.W.resize(n, 5);
  const double accs[5] = {0.8, 0.75, 0.7, 0.65, 0.6};
  for (int i = 0; i < n; ++i) {
    d.x[i] = s.bernoulli(0.5) ? 1 : -1;
    d.y[i] = s.bernoulli(0.5) ? 1 : -1;
    for (int j = 0; j < 5; ++j)
      d.W(i, j) = s.bernoulli(accs[j]) ? d.x[i] : static_cast<std::int8_t>(-d.x[i]);
  }
  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  const Eigen::VectorXd was_p = was_summary(d, rows, rows);

  // naive-Bayes scores from empirical per-candidate agreement with x
  Eigen::VectorXd channel_logit(5);
  for (int j = 0; j < 5; ++j) {
    double agree = 0;
    for (int i = 0; i < n; ++i)
      if (d.W(i, j) == d.x[i]) agree += 1;
    const double pj = agree / n;
    channel_logit[j] = std::log(pj / (1 - pj));
  }
  Eigen::VectorXd nb(n);
  for (int i = 0; i < n; ++i) {
    double t = 0;
    for (int j = 0; j < 5; ++j) t += d.W(i, j) * channel_logit[j];
    nb[i] = t;
  }

  RngStream pair_stream(8, RngDomain::kHarness, 14);
  long agree_pairs = 0, discordant = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    const auto a = static_cast<Eigen::Index>(pair_stream.next_below(n));
    const auto b = static_cast<Eigen::Index>(pair_stream.next_below(n));
    if (nb[a] == nb[b] || was_p[a] == was_p[b]) continue;
    ++discordant;
    if ((nb[a] < nb[b]) == (was_p[a] < was_p[b])) ++agree_pairs;
  }
  REQUIRE(discordant > 1000);
  CHECK(static_cast<double>(agree_pairs) / static_cast<double>(discordant) >= 0.95);
}

TEST_CASE("association under independence is centered at zero") {
  const int n = 100000;
  RngStream s(9, RngDomain::kHarness, 15);
  Dataset d;
  d.y.resize(n);
  d.x.resize(n);
  d.W.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    d.x[i] = s.bernoulli(0.5) ? 1 : -1;
    d.y[i] = s.bernoulli(0.5) ? 1 : -1;
    d.W(i, 0) = s.bernoulli(0.5) ? 1 : -1;
  }
  EstimateOptions opts;
  opts.replicates = 100;
  opts.seed = 16;
  const EffectReport r = association(d, opts);
  CHECK(r.method == "association");
  CHECK(std::abs(r.median) < 0.02);
  CHECK(r.ci_low <= 0.0);
  CHECK(r.ci_high >= 0.0);
}

TEST_CASE("association medians match the preset design values") {
  EstimateOptions opts;
  opts.replicates = 200;
  opts.seed = 17;
  {
    const SampleResult sr = sample(preset("varying_accuracy"), 5000, 18);
    const EffectReport r = association(sr.data, opts);
    CHECK(std::abs(r.median - 0.432) < 0.06);
    CHECK(r.ci_low > 0.0);
  }
  {
    const SampleResult sr = sample(preset("dependency_clique"), 50000, 19);
    const EffectReport r = association(sr.data, opts);
    CHECK(std::abs(r.median - 0.379) < 0.03);
    CHECK(r.ci_low > 0.0);
  }
}

TEST_CASE("baseline effect reports carry labels and are deterministic") {
  const SampleResult sr = sample(preset("calibration_null"), 3000, 20);
  EstimateOptions opts;
  opts.replicates = 20;
  opts.seed = 21;
  CHECK(uas_effect(sr.data, opts).method == "uas");
  CHECK(was_effect(sr.data, opts).method == "was");

  const EffectReport a = uas_effect(sr.data, opts);
  const EffectReport b = uas_effect(sr.data, opts);
  CHECK(a.median == b.median);
  CHECK(a.replicates == b.replicates);
}

TEST_CASE("allele-score medians on the reference null preset stay in their bands") {
  const SampleResult sr = sample(preset("null_fig5a"), 100000, 71);
  const Dataset data = orient_candidates(sr.data).data;
  EstimateOptions opts;
  opts.replicates = 60;
  opts.seed = 72;
  const double uas_median = uas_effect(data, opts).median;
  const double was_median = was_effect(data, opts).median;
  CHECK(uas_median >= 0.15);
  CHECK(uas_median <= 0.45);
  CHECK(was_median >= 0.35);
  CHECK(was_median <= 0.70);
}
