#include "fixtures.hpp"
#include "hurdlenet/fit.hpp"
#include "hurdlenet/hmc.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace hurdlenet;

namespace {

double standard_normal(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
  if (grad) *grad = -theta;
  return -0.5 * theta.squaredNorm();
}

// Correlated, badly scaled 2-d Gaussian used for the integrator properties.
double skewed_gaussian(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
  Eigen::Matrix2d prec;
  prec << 4.0, 1.2, 1.2, 0.5;
  if (grad) *grad = -prec * theta;
  return -0.5 * theta.dot(prec * theta);
}

}  // namespace

TEST_CASE("one leapfrog step on a quadratic potential matches the analytic update") {
  const double eps = 0.3;
  PhasePoint start = make_point(standard_normal, Eigen::VectorXd::Constant(1, 1.0));
  auto res = leapfrog(start, Eigen::VectorXd::Zero(1), eps, 1, Eigen::VectorXd::Ones(1), standard_normal);
  CHECK(res.point.theta(0) == doctest::Approx(1.0 - eps * eps / 2.0).epsilon(1e-14));
  CHECK(res.momentum(0) == doctest::Approx(-eps * (1.0 - eps * eps / 4.0)).epsilon(1e-14));
}

TEST_CASE("leapfrog is time reversible") {
  const Eigen::Vector2d inv_metric(0.7, 2.0);
  PhasePoint start = make_point(skewed_gaussian, Eigen::Vector2d(0.4, -1.3));
  const Eigen::Vector2d nu(0.9, 0.2);
  auto fwd = leapfrog(start, nu, 0.11, 25, inv_metric, skewed_gaussian);
  auto back = leapfrog(fwd.point, -fwd.momentum, 0.11, 25, inv_metric, skewed_gaussian);
  CHECK((back.point.theta - start.theta).norm() < 1e-10);
  CHECK((back.momentum + nu).norm() < 1e-10);
}

TEST_CASE("leapfrog preserves phase-space volume") {
  const Eigen::Vector2d inv_metric(0.7, 2.0);
  auto flow = [&](const Eigen::Vector4d& z) {
    auto r = leapfrog(make_point(skewed_gaussian, z.head<2>()), z.tail<2>(), 0.13, 7, inv_metric, skewed_gaussian);
    Eigen::Vector4d out;
    out << r.point.theta, r.momentum;
    return out;
  };
  const Eigen::Vector4d z0(0.3, -0.8, 1.1, -0.4);
  Eigen::Matrix4d J;
  const double h = 1e-6;
  for (int k = 0; k < 4; ++k) {
    Eigen::Vector4d up = z0, down = z0;
    up(k) += h;
    down(k) -= h;
    J.col(k) = (flow(up) - flow(down)) / (2.0 * h);
  }
  CHECK(std::abs(std::abs(J.determinant()) - 1.0) < 1e-6);
}

TEST_CASE("energy error scales quadratically with the step size") {
  // fixed integration time so the global error is O(eps^2)
  PhasePoint start = make_point(standard_normal, Eigen::VectorXd::Constant(1, 1.0));
  const Eigen::VectorXd nu = Eigen::VectorXd::Constant(1, 0.5);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(1);
  auto energy_error = [&](double eps, int steps) {
    auto r = leapfrog(start, nu, eps, steps, ones, standard_normal);
    return std::abs(hamiltonian(r.point, r.momentum, ones) - hamiltonian(start, nu, ones));
  };
  std::vector<double> ratios;
  for (double eps : {0.2, 0.1, 0.05}) ratios.push_back(energy_error(eps, static_cast<int>(std::lround(1.0 / eps))) /
                                                         energy_error(eps / 2, static_cast<int>(std::lround(2.0 / eps))));
  for (double r : ratios) CHECK(r == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("hmc_step accepts proposals that lower the Hamiltonian and nearly all tiny steps") {
  Rng rng(3);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  // start far in the tail with tiny step: energy drift ~ 0
  PhasePoint state = make_point(standard_normal, Eigen::VectorXd::Constant(3, 0.5));
  int accepted = 0;
  for (int k = 0; k < 200; ++k) {
    auto info = hmc_step(state, 1e-4, 3, ones, standard_normal, rng);
    accepted += info.accepted;
    CHECK(std::abs(info.energy_error) < 1e-6);
  }
  CHECK(accepted == 200);

  // every transition whose proposal has lower energy is accepted
  Rng rng2(8);
  PhasePoint s2 = make_point(skewed_gaussian, Eigen::Vector2d(2.0, -3.0));
  for (int k = 0; k < 500; ++k) {
    auto info = hmc_step(s2, 0.4, 5, Eigen::Vector2d::Ones(), skewed_gaussian, rng2);
    if (!info.diverged && info.energy_error <= 0.0) CHECK(info.accepted);
  }
}

TEST_CASE("sampler recovers a 2-d standard Gaussian") {
  HmcConfig cfg;
  cfg.iterations = 3000;
  cfg.burnin = 1000;
  cfg.chains = 2;
  cfg.seed = 17;
  const auto chains = run_chains(standard_normal, 2, cfg);
  for (int k = 0; k < 2; ++k) {
    std::vector<Eigen::VectorXd> per_chain;
    std::vector<double> all;
    for (const auto& c : chains) {
      per_chain.emplace_back(c.draws.col(k));
      all.insert(all.end(), c.draws.col(k).data(), c.draws.col(k).data() + c.draws.rows());
    }
    const Eigen::Map<Eigen::VectorXd> v(all.data(), static_cast<Eigen::Index>(all.size()));
    const double mean = v.mean();
    const double var = (v.array() - mean).square().sum() / (v.size() - 1.0);
    const double mcse = std::sqrt(var / effective_sample_size(per_chain));
    CHECK(std::abs(mean) < 3.0 * mcse);
    CHECK(std::abs(var - 1.0) < 0.05);
  }
  for (const auto& c : chains) CHECK(c.mean_accept_prob > 0.6);
}

TEST_CASE("identical seeds and config reproduce identical draws") {
  const NetPanel panel = testing::random_panel(3, 2, 21);
  ModelSpec spec;
  spec.K = 1;
  HmcConfig cfg;
  cfg.iterations = 150;
  cfg.burnin = 50;
  cfg.chains = 2;
  cfg.seed = 5;
  const DrawSet a = run(panel, spec, cfg);
  const DrawSet b = run(panel, spec, cfg);
  CHECK(a.free_draws() == b.free_draws());
  CHECK(a.pointwise == b.pointwise);
  cfg.seed = 6;
  const DrawSet c = run(panel, spec, cfg);
  CHECK(a.free_draws() != c.free_draws());
}

TEST_CASE("stored draws satisfy the parameter support constraints") {
  const NetPanel panel = testing::random_panel(4, 3, 2);
  ModelSpec spec;
  spec.K = 2;
  HmcConfig cfg;
  cfg.iterations = 200;
  cfg.burnin = 100;
  cfg.chains = 1;
  const DrawSet draws = run(panel, spec, cfg);
  for (Eigen::Index s = 0; s < draws.num_draws(); ++s) {
    const ModelParams p = draws.params_at(s);
    const auto& blk = p.blocks[0];
    for (const auto& Z : blk.Z) {
      CHECK(Z(0, 0) > 0.0);
      CHECK(Z(0, 1) == spec.epsilon);
    }
    CHECK(((blk.phi.array() > 0.0) && (blk.phi.array() < 1.0)).all());
    CHECK(blk.alpha >= 0.0);
    CHECK(blk.alpha <= 1.0);
    CHECK(p.sigma2 > 0.0);
    CHECK(p.b > 0.0);
    CHECK(p.gamma > 0.0);
  }
}

TEST_CASE("summaries of constant and identical chains") {
  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(100, 1, 2.5);
  const auto s = summarize({constant, constant}, {"c"});
  CHECK(s[0].sd == 0.0);
  CHECK(s[0].median == 2.5);
  CHECK(s[0].q025 == 2.5);
  CHECK(s[0].q975 == 2.5);

  // identical chains: between-chain variance vanishes, so the PSRF is
  // sqrt((n-1)/n) on the split halves; n = 1e6 makes this 1 within 1e-6
  Rng rng(1);
  std::normal_distribution<double> normal;
  Eigen::VectorXd chain(2'000'000);
  for (auto& x : chain) x = normal(rng);
  Eigen::VectorXd twin = chain;
  twin.tail(1'000'000) = chain.head(1'000'000);
  CHECK(std::abs(split_rhat({twin, twin}) - 1.0) < 1e-6);
}

TEST_CASE("summary quantiles match a sort-based computation") {
  Rng rng(12);
  std::gamma_distribution<double> gamma(2.0, 1.0);
  Eigen::MatrixXd c1(333, 1), c2(333, 1);
  for (Eigen::Index r = 0; r < 333; ++r) {
    c1(r, 0) = gamma(rng);
    c2(r, 0) = gamma(rng);
  }
  const auto s = summarize({c1, c2}, {"x"});
  std::vector<double> all(c1.data(), c1.data() + 333);
  all.insert(all.end(), c2.data(), c2.data() + 333);
  std::sort(all.begin(), all.end());
  // 666 values: median is the average of the 333rd and 334th order statistics
  CHECK(s[0].median == doctest::Approx((all[332] + all[333]) / 2.0).epsilon(1e-14));
  // type-7 2.5% point: h = 665 * 0.025 = 16.625
  CHECK(s[0].q025 == doctest::Approx(all[16] + 0.625 * (all[17] - all[16])).epsilon(1e-14));
  const double h = 665 * 0.975;
  const auto lo = static_cast<std::size_t>(h);
  CHECK(s[0].q975 == doctest::Approx(all[lo] + (h - lo) * (all[lo + 1] - all[lo])).epsilon(1e-14));
  CHECK_THROWS(summarize(std::vector<Eigen::MatrixXd>{Eigen::MatrixXd(0, 1)}, {"x"}));
}
