// Regenerates the frozen preset constants in src/datagen.cpp from their
// calibration targets: clique canonical parameters from (accuracy, pairwise
// correlation) targets, table strengths from the null observational
// association, the causal-effect coefficient from the population Wald
// estimand, and the invalid-summary x-table from its stated conditionals.
//
// Run after changing a target and paste the printed values into the preset
// definitions.

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <initializer_list>

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Moments of the symmetric agreement-variable Ising model over k members:
// P(a) proportional to exp(alpha sum a_j + beta sum_{i<j} a_i a_j).
void clique_moments(int k, double alpha, double beta, double* mean, double* pair) {
  double z = 0, m1 = 0, m2 = 0;
  for (int s = 0; s < (1 << k); ++s) {
    int bits = 0;
    for (int j = 0; j < k; ++j)
      if ((s >> j) & 1) ++bits;
    const int sum_a = 2 * bits - k;
    const double e =
        alpha * sum_a + beta * 0.5 * (static_cast<double>(sum_a) * sum_a - k);
    const double w = std::exp(e);
    z += w;
    m1 += w * (((s >> 0) & 1) ? 1.0 : -1.0);
    m2 += w * (((s >> 0) & 1) ? 1.0 : -1.0) * (((s >> 1) & 1) ? 1.0 : -1.0);
  }
  *mean = m1 / z;
  *pair = m2 / z;
}

void solve_clique(const char* name, int k, double accuracy, double corr) {
  const double mu = 2 * accuracy - 1;
  double alpha = std::atanh(mu), beta = 0.2;
  for (int iter = 0; iter < 200; ++iter) {
    double m, p;
    clique_moments(k, alpha, beta, &m, &p);
    if (std::abs(m - mu) < 1e-14 && std::abs(p - corr) < 1e-14) break;
    const double h = 1e-7;
    double ma, pa, mb, pb;
    clique_moments(k, alpha + h, beta, &ma, &pa);
    clique_moments(k, alpha, beta + h, &mb, &pb);
    Eigen::Matrix2d jac;
    jac << (ma - m) / h, (mb - m) / h, (pa - p) / h, (pb - p) / h;
    const Eigen::Vector2d step =
        jac.colPivHouseholderQr().solve(Eigen::Vector2d(m - mu, p - corr));
    alpha -= step[0];
    beta -= step[1];
  }
  std::printf("%s (k=%d, acc=%.2f, corr=%.2f): alpha=%.17g beta=%.17g\n", name, k, accuracy,
              corr, alpha, beta);
}

// Observational association and Wald estimand of the (z, c, x, y) block with
// x_table = sigmoid(az z + ac c) and y_table = sigmoid(dx x + dc c).
struct BlockStats {
  double assn = 0, wald = 0;
};

BlockStats block_stats(double az, double ac, double dx, double dc, double prior_z,
                       double prior_c) {
  double pxy[2][2] = {{0, 0}, {0, 0}}, pzx[2][2] = {{0, 0}, {0, 0}},
         pzy[2][2] = {{0, 0}, {0, 0}};
  for (int zi = 0; zi < 2; ++zi)
    for (int ci = 0; ci < 2; ++ci) {
      const double z = zi ? 1 : -1, c = ci ? 1 : -1;
      const double pz = zi ? prior_z : 1 - prior_z;
      const double pc = ci ? prior_c : 1 - prior_c;
      const double px1 = sigmoid(az * z + ac * c);
      for (int xi = 0; xi < 2; ++xi) {
        const double x = xi ? 1 : -1;
        const double px = xi ? px1 : 1 - px1;
        const double py1 = sigmoid(dx * x + dc * c);
        for (int yi = 0; yi < 2; ++yi) {
          const double p = pz * pc * px * (yi ? py1 : 1 - py1);
          pxy[xi][yi] += p;
          pzx[zi][xi] += p;
          pzy[zi][yi] += p;
        }
      }
    }
  auto slope = [&](double t[2][2]) {
    return 0.5 * (logit(t[1][1] / (t[1][0] + t[1][1])) - logit(t[0][1] / (t[0][0] + t[0][1])));
  };
  BlockStats out;
  out.assn = slope(pxy);
  out.wald = slope(pzy) / slope(pzx);
  return out;
}

double solve_dc_for_assn(double az, double ac, double pz, double pc, double target) {
  double dc = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double f = block_stats(az, ac, 0.0, dc, pz, pc).assn - target;
    if (std::abs(f) < 1e-15) break;
    const double h = 1e-7;
    const double fp = block_stats(az, ac, 0.0, dc + h, pz, pc).assn - target;
    dc -= f / ((fp - f) / h);
  }
  return dc;
}

double solve_dx_for_wald(double az, double ac, double dc, double pz, double pc, double target) {
  double dx = 0.1;
  for (int iter = 0; iter < 200; ++iter) {
    const double f = block_stats(az, ac, dx, dc, pz, pc).wald - target;
    if (std::abs(f) < 1e-15) break;
    const double h = 1e-7;
    const double fp = block_stats(az, ac, dx + h, dc, pz, pc).wald - target;
    dx -= f / ((fp - f) / h);
  }
  return dx;
}

// invalid-summary x-table: with the z -> x strength fixed, solve the
// intercept and confounder strength so that at w9 accuracy 0.55 the
// conditionals P(x=1|w9=1) and P(x=-1|w9=-1) hit their stated values.
void solve_invalid_z(double gz, double p_pos_target, double p_neg_target) {
  const double acc = 0.55;
  auto eval = [&](double g0, double gc, double* f0, double* f1) {
    *f0 = acc * sigmoid(g0 + gz + gc) + (1 - acc) * sigmoid(g0 - gz + gc) - p_pos_target;
    *f1 = acc * (1 - sigmoid(g0 - gz - gc)) + (1 - acc) * (1 - sigmoid(g0 + gz - gc)) -
          p_neg_target;
  };
  double g0 = 0, gc = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    double f0, f1;
    eval(g0, gc, &f0, &f1);
    if (std::abs(f0) < 1e-15 && std::abs(f1) < 1e-15) break;
    const double h = 1e-7;
    double a0, a1, b0, b1;
    eval(g0 + h, gc, &a0, &a1);
    eval(g0, gc + h, &b0, &b1);
    Eigen::Matrix2d jac;
    jac << (a0 - f0) / h, (b0 - f0) / h, (a1 - f1) / h, (b1 - f1) / h;
    const Eigen::Vector2d step = jac.colPivHouseholderQr().solve(Eigen::Vector2d(f0, f1));
    g0 -= step[0];
    gc -= step[1];
  }
  std::printf("invalid_z x-table (gz=%.2f): g0=%.17g gc=%.17g\n", gz, g0, gc);
}

}  // namespace

int main() {
  std::puts("-- clique canonical parameters --");
  solve_clique("fig5 4-clique", 4, 0.75, 0.50);
  solve_clique("fig5 2-clique", 2, 0.75, 0.50);
  solve_clique("dependency 4-clique", 4, 0.65, 0.77);

  std::puts("\n-- table strengths --");
  {
    const double dc = solve_dc_for_assn(0.9, 1.0, 0.5, 0.5, 0.400);
    const double dx = solve_dx_for_wald(0.9, 1.0, dc, 0.5, 0.5, 0.150);
    std::printf("fig5 (az=0.9, ac=1.0): dc=%.17g (assn 0.400), dx=%.17g (wald 0.150)\n", dc,
                dx);
  }
  {
    const double dc = solve_dc_for_assn(0.7, 0.8, 0.5, 0.5, 0.379);
    std::printf("dependency_clique (az=0.7, ac=0.8): dc=%.17g (assn 0.379)\n", dc);
  }
  {
    const double dc = solve_dc_for_assn(0.6, 0.9, 0.6, 0.5, 0.432);
    std::printf("varying_accuracy (az=0.6, ac=0.9): dc=%.17g (assn 0.432)\n", dc);
  }

  std::puts("\n-- invalid-summary preset --");
  solve_invalid_z(0.55, 0.764, 0.776);
  return 0;
}
