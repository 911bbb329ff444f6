#include "fixtures.hpp"
#include "hurdlenet/model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hurdlenet;

namespace {

// Independent term-by-term evaluation with plain std::pow / std::exp arithmetic.
double brute_force_loglik(const ModelParams& p, const NetPanel& panel) {
  double total = 0.0;
  for (int t = 0; t < panel.T; ++t) {
    for (int i = 0; i < panel.n; ++i) {
      for (int j = 0; j < panel.n; ++j) {
        if (i == j) continue;
        const Eigen::VectorXd x = assemble_covariates(panel, i, j, t);
        auto sim = [&](const LatentBlock& blk) {
          const Eigen::MatrixXd& Z = blk.Z.size() == 1 ? blk.Z[0] : blk.Z[t];
          const Eigen::VectorXd zi = Z.row(i).transpose(), zj = Z.row(j).transpose();
          return blk.alpha * zi.dot(zj) / zj.norm() + (1 - blk.alpha) * zi.dot(zj) / zi.norm();
        };
        const double g = std::pow(1.0 + std::exp(p.a - p.b * (x.dot(p.beta_p) + sim(p.blocks.back()))), -1.0 / p.gamma);
        if (panel.occurrence[t](i, j)) {
          const double mean = x.dot(p.beta_c) + sim(p.blocks.front());
          const double r = panel.weight[t](i, j) - mean;
          total += std::log(g) - 0.5 * std::log(2 * std::numbers::pi * p.sigma2) - r * r / (2 * p.sigma2);
        } else {
          total += std::log(1.0 - g);
        }
      }
    }
  }
  return total;
}

ModelParams swap_roles(ModelParams p, int p1) {
  for (auto& blk : p.blocks) blk.alpha = 1.0 - blk.alpha;
  for (Eigen::VectorXd* beta : {&p.beta_c, &p.beta_p}) {
    const Eigen::VectorXd exporter = beta->head(p1);
    beta->head(p1) = beta->segment(p1, p1);
    beta->segment(p1, p1) = exporter;
  }
  return p;
}

}  // namespace

TEST_CASE("latent similarity examples") {
  const Eigen::Vector2d e1(1, 0), e2(0, 1);
  for (double a : {0.0, 0.3, 1.0}) CHECK(latent_similarity(e1, e1, a) == 1.0);
  CHECK(latent_similarity(e1, e2, 0.4) == 0.0);
  CHECK(latent_similarity(Eigen::Vector2d(2, 0), Eigen::Vector2d(1, 1), 1.0) ==
        doctest::Approx(2.0 / std::sqrt(2.0)).epsilon(1e-15));
  // exporter/importer mirror: L_ij(alpha) = L_ji(1 - alpha)
  const Eigen::Vector3d zi(0.3, -1.2, 0.7), zj(1.1, 0.4, -0.2);
  CHECK(latent_similarity(zi, zj, 0.8) == doctest::Approx(latent_similarity(zj, zi, 0.2)).epsilon(1e-15));
  // positive homogeneity of degree 1
  CHECK(latent_similarity(3.5 * zi, 3.5 * zj, 0.8) ==
        doctest::Approx(3.5 * latent_similarity(zi, zj, 0.8)).epsilon(1e-14));
  CHECK_THROWS_AS(latent_similarity(Eigen::Vector2d::Zero(), e1, 0.5), std::domain_error);
}

TEST_CASE("generalized logistic link") {
  CHECK(std::abs(glink(0, 0, 1, 1) - 0.5) < 1e-12);
  CHECK(glink(2, 1, 1, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(glink(0, 0, 1, 2) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  for (double x = -30.0; x <= 30.0; x += 0.37) {
    for (double a : {-2.0, 0.0, 1.5}) {
      for (double b : {0.2, 1.0, 3.0}) {
        const double logistic = 1.0 / (1.0 + std::exp(-(b * x - a)));
        CHECK(std::abs(glink(x, a, b, 1.0) - logistic) < 1e-12);
        CHECK(glink(x + 0.1, a, b, 0.7) >= glink(x, a, b, 0.7));
        const LogLink ll = log_glink(x, a, b, 0.7);
        const double g = glink(x, a, b, 0.7);
        CHECK(std::exp(ll.log_g) == doctest::Approx(g).epsilon(1e-12));
        if (g < 0.999) CHECK(ll.log_1mg == doctest::Approx(std::log1p(-g)).epsilon(1e-10));
      }
    }
  }
  // saturated tails stay finite on the log scale
  const LogLink hi = log_glink(800.0, 0.0, 1.0, 1.0), lo = log_glink(-800.0, 0.0, 1.0, 2.0);
  CHECK(hi.log_1mg == doctest::Approx(-800.0).epsilon(1e-12));
  CHECK(lo.log_g == doctest::Approx(-400.0).epsilon(1e-12));
  CHECK(std::isfinite(hi.log_g));
  CHECK(std::isfinite(lo.log_1mg));
}

TEST_CASE("mean structure examples") {
  ModelSpec spec;
  spec.K = 2;
  ModelParams p = ModelParams::zeros(spec, 2, 1, 8);
  p.blocks[0].Z[0] << 1, 0, 1, 0;
  CHECK(expected_weight(p, Eigen::VectorXd::Zero(8), 0, 1, 0) == 1.0);

  p.blocks[0].Z[0] << 1, 0, 0, 1;
  p.beta_c << 0.0, 0.4, -1, 0.1, -0.7, 0.3, -0.9, 0.6;
  CHECK(expected_weight(p, Eigen::VectorXd::Ones(8), 0, 1, 0) == doctest::Approx(-1.2).epsilon(1e-14));
  p.a = 0.0;
  p.b = 1.0;
  p.gamma = 1.0;
  CHECK(occurrence_prob(p, Eigen::VectorXd::Zero(8), 0, 1, 0) == 0.5);
  p.beta_p.setConstant(0.1);
  double prev = 0.0;
  for (double scale : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double g = occurrence_prob(p, Eigen::VectorXd::Constant(8, scale), 0, 1, 0);
    CHECK(g > prev);
    prev = g;
  }
  CHECK(occurrence_prob(p, Eigen::VectorXd::Constant(8, 1000.0), 0, 1, 0) == doctest::Approx(1.0));
}

TEST_CASE("static latents give time-invariant means; independent blocks are separated") {
  const NetPanel panel = testing::random_panel(4, 3, 1);
  std::mt19937_64 rng(2);
  ModelSpec spec;
  spec.variant = Variant::static_time;
  const ModelParams st = testing::random_params(spec, panel, rng);
  const Eigen::VectorXd x = assemble_covariates(panel, 1, 2, 0);
  CHECK(expected_weight(st, x, 1, 2, 0) == expected_weight(st, x, 1, 2, 2));

  spec.variant = Variant::independent;
  ModelParams ind = testing::random_params(spec, panel, rng);
  const double g = occurrence_prob(ind, x, 1, 2, 1), w = expected_weight(ind, x, 1, 2, 1);
  ModelParams moved = ind;
  moved.blocks[0].Z[1](2, 0) += 0.7;
  moved.blocks[0].alpha = 0.123;
  CHECK(occurrence_prob(moved, x, 1, 2, 1) == g);
  CHECK(expected_weight(moved, x, 1, 2, 1) != w);
  moved = ind;
  moved.blocks[1].Z[1](1, 1) -= 0.4;
  CHECK(expected_weight(moved, x, 1, 2, 1) == w);
}

TEST_CASE("single-dyad likelihood values") {
  NetPanel panel = NetPanel::zeros(2, 1, 0, 1);
  panel.pair_covs[0].setOnes();
  panel.occurrence[0](0, 1) = 1;
  panel.weight[0](0, 1) = 2.0;
  ModelSpec spec;
  spec.K = 2;
  ModelParams p = ModelParams::zeros(spec, 2, 1, 1);
  // orthogonal latents: L = 0; beta_p = 0 and (a, b, gamma) = (0, 1, 1) give g = 0.5
  p.blocks[0].Z[0] << 1, spec.epsilon, -spec.epsilon, 1;
  p.beta_c << 2.0;
  p.beta_p << 0.0;
  p.sigma2 = 1.0;
  p.a = 0.0;
  p.b = 1.0;
  p.gamma = 1.0;
  const Eigen::VectorXd pw = pointwise_loglik(p, panel);
  REQUIRE(pw.size() == 2);
  CHECK(pw(0) == doctest::Approx(std::log(0.5) - 0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(pw(0) == doctest::Approx(-1.61209).epsilon(1e-5));
  CHECK(pw(1) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(loglik_joint(p, panel) == doctest::Approx(pw.sum()).epsilon(1e-14));
}

TEST_CASE("joint likelihood equals a brute-force sum over dyads") {
  const NetPanel panel = testing::random_panel(3, 2, 13);
  std::mt19937_64 rng(7);
  for (Variant v : {Variant::dynamic, Variant::static_time, Variant::independent}) {
    ModelSpec spec;
    spec.variant = v;
    for (int rep = 0; rep < 5; ++rep) {
      const ModelParams p = testing::random_params(spec, panel, rng);
      const double ll = loglik_joint(p, panel);
      CHECK(ll == doctest::Approx(brute_force_loglik(p, panel)).epsilon(1e-12));
      const Eigen::VectorXd pw = pointwise_loglik(p, panel);
      CHECK(std::abs(pw.sum() - ll) < 1e-10);
      // absent dyad (t=0, i=0, j=1 is row 0)
      if (!panel.occurrence[0](0, 1)) {
        const Eigen::VectorXd x = assemble_covariates(panel, 0, 1, 0);
        CHECK(pw(0) == doctest::Approx(std::log1p(-occurrence_prob(p, x, 0, 1, 0))).epsilon(1e-12));
      }
    }
  }
  const ModelParams p = testing::random_params(ModelSpec{}, panel, rng);
  CHECK(loglik_joint(p, panel, 0, 1) + loglik_joint(p, panel, 1, 2) ==
        doctest::Approx(loglik_joint(p, panel)).epsilon(1e-13));
}

TEST_CASE("likelihood is invariant to transposing the panel") {
  const NetPanel panel = testing::random_panel(5, 3, 31);
  const NetPanel tr = transpose(panel);
  std::mt19937_64 rng(99);
  for (Variant v : {Variant::dynamic, Variant::static_time, Variant::independent}) {
    ModelSpec spec;
    spec.variant = v;
    for (int rep = 0; rep < 20; ++rep) {
      const ModelParams p = testing::random_params(spec, panel, rng);
      const double a = loglik_joint(p, panel), b = loglik_joint(swap_roles(p, panel.p1), tr);
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST_CASE("non-finite likelihood is reported") {
  const NetPanel panel = testing::random_panel(3, 2, 13);
  ModelParams p = ModelParams::zeros(ModelSpec{}, 3, 2, panel.p());
  for (auto& Z : p.blocks[0].Z) Z.setConstant(0.5);
  p.sigma2 = 0.0;
  CHECK_THROWS_AS(loglik_joint(p, panel), NumericalError);
}
