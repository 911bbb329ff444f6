#pragma once

#include "hurdlenet/netpanel.hpp"
#include "hurdlenet/parameterization.hpp"

#include <Eigen/Dense>

#include <random>

namespace hurdlenet::testing {

/// Random n-node panel with one continuous node covariate and one continuous
/// plus one binary symmetric pair covariate (p = 4).
inline NetPanel random_panel(int n, int T, unsigned seed, double edge_rate = 0.6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution edge(edge_rate);
  std::bernoulli_distribution flag(0.3);
  NetPanel panel = NetPanel::zeros(n, T, 1, 2);
  panel.covariate_kinds[2] = CovariateKind::binary;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) panel.node_covs[t](i, 0) = normal(rng);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double c = normal(rng);
        const double f = flag(rng) ? 1.0 : 0.0;
        panel.pair_covs[t].row(i * n + j) << c, f;
        panel.pair_covs[t].row(j * n + i) << c, f;
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j || !edge(rng)) continue;
        panel.occurrence[t](i, j) = 1;
        panel.weight[t](i, j) = 1.0 + normal(rng);
      }
    }
  }
  panel.validate();
  return panel;
}

inline Eigen::VectorXd random_vector(Eigen::Index size, std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::VectorXd v(size);
  for (Eigen::Index k = 0; k < size; ++k) v(k) = normal(rng);
  return v;
}

/// Parameters at a random unconstrained point (all support constraints hold).
inline ModelParams random_params(const ModelSpec& spec, const NetPanel& panel, std::mt19937_64& rng, double sd = 0.5) {
  const Parameterization param(spec, {panel.n, panel.T, panel.p()});
  return param.unpack(random_vector(param.size(), rng, sd));
}

}  // namespace hurdlenet::testing
