#include "hurdlenet/parameterization.hpp"

#include "hurdlenet/numeric.hpp"

#include <cmath>

namespace hurdlenet {

namespace {

std::string dotted(const std::string& base, std::initializer_list<int> idx) {
  std::string out = base;
  for (int v : idx) out += "." + std::to_string(v + 1);
  return out;
}

// Free series value of entry (i, k) at latent time t: log scale for the positive entry.
double series_value(const LatentConstraintMap& map, const Eigen::MatrixXd& Z, int i, int k) {
  return map.is_log_entry(i, k) ? std::log(Z(i, k)) : Z(i, k);
}

}  // namespace

Parameterization::Parameterization(ModelSpec spec, ModelDims dims) : spec_(spec), dims_(dims) {
  spec_.validate(dims_.n);
  if (dims_.T < 1 || dims_.p < 0) throw std::invalid_argument("Parameterization: bad dimensions");
  const Eigen::Index F = constraint_map().free_per_time();
  Eigen::Index per_block = latent_times() * F + 1 + dims_.n + 1;
  if (spec_.dynamic_latents()) per_block += static_cast<Eigen::Index>(dims_.n) * dims_.T + dims_.n;
  size_ = spec_.latent_blocks() * per_block + 2 * dims_.p + 4;
}

std::string Parameterization::block_suffix(int blk) const {
  if (spec_.latent_blocks() == 1) return "";
  return blk == 0 ? "C" : "P";
}

Eigen::VectorXd Parameterization::pack(const ModelParams& params) const {
  if (static_cast<int>(params.blocks.size()) != spec_.latent_blocks()) {
    throw std::invalid_argument("pack: wrong number of latent blocks");
  }
  const auto map = constraint_map();
  Eigen::VectorXd theta(size_);
  Eigen::Index pos = 0;
  for (const auto& block : params.blocks) {
    if (static_cast<int>(block.Z.size()) != latent_times()) throw std::invalid_argument("pack: latent time mismatch");
    if (spec_.noncentered) {
      const Eigen::MatrixXd h = block.log_volatility();
      const int Tl = latent_times();
      const Eigen::Index F = map.free_per_time();
      Eigen::Index row_start = 0;
      for (int i = 0; i < dims_.n; ++i) {
        for (int k = 0; k < map.free_in_row(i); ++k) {
          Eigen::VectorXd w(Tl);
          for (int t = 0; t < Tl; ++t) w(t) = series_value(map, block.Z[t], i, k);
          const Eigen::VectorXd omega = spec_.dynamic_latents() ? difference(w, spec_.d) : w;
          for (int t = 0; t < Tl; ++t) theta(pos + t * F + row_start + k) = omega(t) * std::exp(-0.5 * h(i, t));
        }
        row_start += map.free_in_row(i);
      }
      pos += Tl * F;
    } else {
      for (const auto& Z : block.Z) {
        for (int i = 0; i < dims_.n; ++i) {
          for (int k = 0; k < map.free_in_row(i); ++k) theta(pos++) = series_value(map, Z, i, k);
        }
      }
    }
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int t = 0; t < dims_.T; ++t) theta(pos++) = block.eta(i, t);
      }
    }
    theta(pos++) = block.mu0;
    for (int i = 0; i < dims_.n; ++i) theta(pos++) = block.mu(i);
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) theta(pos++) = numeric::logit(block.phi(i));
    }
    theta(pos++) = numeric::logit(block.alpha);
  }
  if (params.beta_c.size() != dims_.p || params.beta_p.size() != dims_.p) {
    throw std::invalid_argument("pack: coefficient length mismatch");
  }
  theta.segment(pos, dims_.p) = params.beta_c;
  pos += dims_.p;
  theta.segment(pos, dims_.p) = params.beta_p;
  pos += dims_.p;
  theta(pos++) = std::log(params.sigma2);
  theta(pos++) = params.a;
  theta(pos++) = std::log(params.b);
  theta(pos++) = std::log(params.gamma);
  return theta;
}

ModelParams Parameterization::unpack(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  if (theta.size() != size_) {
    throw std::invalid_argument("unpack: free vector has length " + std::to_string(theta.size()) + ", expected " +
                                std::to_string(size_));
  }
  const auto map = constraint_map();
  ModelParams params = ModelParams::zeros(spec_, dims_.n, dims_.T, dims_.p);
  Eigen::Index pos = 0;
  const Eigen::Index F = map.free_per_time();
  for (auto& block : params.blocks) {
    const Eigen::Index z_start = pos;
    pos += latent_times() * F;
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int t = 0; t < dims_.T; ++t) block.eta(i, t) = theta(pos++);
      }
    }
    block.mu0 = theta(pos++);
    for (int i = 0; i < dims_.n; ++i) block.mu(i) = theta(pos++);
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) block.phi(i) = numeric::sigmoid(theta(pos++));
    }
    block.alpha = numeric::sigmoid(theta(pos++));
    fill_latents(theta, z_start, block);
  }
  params.beta_c = theta.segment(pos, dims_.p);
  pos += dims_.p;
  params.beta_p = theta.segment(pos, dims_.p);
  pos += dims_.p;
  params.sigma2 = std::exp(theta(pos++));
  params.a = theta(pos++);
  params.b = std::exp(theta(pos++));
  params.gamma = std::exp(theta(pos++));
  return params;
}

void Parameterization::fill_latents(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::Index start,
                                    LatentBlock& block) const {
  const auto map = constraint_map();
  const int Tl = latent_times();
  const Eigen::Index F = map.free_per_time();
  auto store = [&](int t, int i, int k, double w) { block.Z[t](i, k) = map.is_log_entry(i, k) ? std::exp(w) : w; };
  if (!spec_.noncentered) {
    Eigen::Index pos = start;
    for (int t = 0; t < Tl; ++t) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int k = 0; k < map.free_in_row(i); ++k) store(t, i, k, theta(pos++));
      }
    }
    return;
  }
  const Eigen::MatrixXd h = block.log_volatility();
  Eigen::Index row_start = 0;
  for (int i = 0; i < dims_.n; ++i) {
    for (int k = 0; k < map.free_in_row(i); ++k) {
      Eigen::VectorXd omega(Tl);
      for (int t = 0; t < Tl; ++t) omega(t) = theta(start + t * F + row_start + k) * std::exp(0.5 * h(i, t));
      const Eigen::VectorXd w = spec_.dynamic_latents() ? integrate(omega, spec_.d) : omega;
      for (int t = 0; t < Tl; ++t) store(t, i, k, w(t));
    }
    row_start += map.free_in_row(i);
  }
}

double Parameterization::log_jacobian(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  // logit coordinates: log s(x) + log(1 - s(x)) = -softplus(-x) - softplus(x)
  auto logit_term = [](double x) { return -numeric::softplus(-x) - numeric::softplus(x); };
  const Eigen::Index F = constraint_map().free_per_time();
  double lj = 0.0;
  Eigen::Index pos = 0;
  for (int blk = 0; blk < spec_.latent_blocks(); ++blk) {
    pos += latent_times() * F;
    if (spec_.dynamic_latents()) pos += static_cast<Eigen::Index>(dims_.n) * dims_.T;
    pos += 1 + dims_.n;
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) lj += logit_term(theta(pos++));
    }
    lj += logit_term(theta(pos++));
  }
  pos += 2 * dims_.p;
  if (spec_.noncentered) {
    // increments are exp(h/2) times the free coordinates; differencing has unit determinant
    const ModelParams params = unpack(theta);
    const auto map = constraint_map();
    for (const auto& block : params.blocks) {
      const Eigen::MatrixXd h = block.log_volatility();
      for (int i = 0; i < dims_.n; ++i) lj += 0.5 * map.free_in_row(i) * h.row(i).sum();
    }
  }
  lj += theta(pos++);  // sigma2
  pos++;               // a
  lj += theta(pos++);  // b
  lj += theta(pos++);  // gamma
  return lj;
}

Eigen::VectorXd Parameterization::chain_gradient(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                                 const ModelParams& params, const ModelParams& g) const {
  const auto map = constraint_map();
  Eigen::VectorXd out(size_);
  Eigen::Index pos = 0;
  for (std::size_t blk = 0; blk < params.blocks.size(); ++blk) {
    const auto& block = params.blocks[blk];
    LatentBlock gb = g.blocks[blk];
    // natural adjoint of the free series value (log scale for the positive entry)
    auto g_series = [&](int t, int i, int k) {
      return map.is_log_entry(i, k) ? gb.Z[t](i, k) * block.Z[t](i, k) : gb.Z[t](i, k);
    };
    if (spec_.noncentered) {
      const int Tl = latent_times();
      const Eigen::Index F = map.free_per_time();
      const Eigen::MatrixXd h = block.log_volatility();
      Eigen::MatrixXd g_h = Eigen::MatrixXd::Zero(h.rows(), h.cols());
      Eigen::Index row_start = 0;
      for (int i = 0; i < dims_.n; ++i) {
        for (int k = 0; k < map.free_in_row(i); ++k) {
          Eigen::VectorXd g_w(Tl);
          for (int t = 0; t < Tl; ++t) g_w(t) = g_series(t, i, k);
          const Eigen::VectorXd g_omega = spec_.dynamic_latents() ? integrate_adjoint(g_w, spec_.d) : g_w;
          for (int t = 0; t < Tl; ++t) {
            const Eigen::Index at = pos + t * F + row_start + k;
            const double scale = std::exp(0.5 * h(i, t));
            out(at) = g_omega(t) * scale;
            g_h(i, t) += 0.5 * g_omega(t) * theta(at) * scale + 0.5;  // + Jacobian
          }
        }
        row_start += map.free_in_row(i);
      }
      log_volatility_adjoint(block, g_h, gb);
      pos += Tl * F;
    } else {
      for (std::size_t t = 0; t < block.Z.size(); ++t) {
        for (int i = 0; i < dims_.n; ++i) {
          for (int k = 0; k < map.free_in_row(i); ++k) out(pos++) = g_series(static_cast<int>(t), i, k);
        }
      }
    }
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int t = 0; t < dims_.T; ++t) out(pos++) = gb.eta(i, t);
      }
    }
    out(pos++) = gb.mu0;
    for (int i = 0; i < dims_.n; ++i) out(pos++) = gb.mu(i);
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) {
        const double phi = block.phi(i);
        out(pos) = gb.phi(i) * phi * (1.0 - phi) + (1.0 - 2.0 * numeric::sigmoid(theta(pos)));
        ++pos;
      }
    }
    const double alpha = block.alpha;
    out(pos) = gb.alpha * alpha * (1.0 - alpha) + (1.0 - 2.0 * numeric::sigmoid(theta(pos)));
    ++pos;
  }
  out.segment(pos, dims_.p) = g.beta_c;
  pos += dims_.p;
  out.segment(pos, dims_.p) = g.beta_p;
  pos += dims_.p;
  out(pos++) = g.sigma2 * params.sigma2 + 1.0;
  out(pos++) = g.a;
  out(pos++) = g.b * params.b + 1.0;
  out(pos++) = g.gamma * params.gamma + 1.0;
  return out;
}

std::vector<std::string> Parameterization::free_names() const {
  const auto map = constraint_map();
  std::vector<std::string> names;
  names.reserve(size_);
  for (int blk = 0; blk < spec_.latent_blocks(); ++blk) {
    const auto sfx = block_suffix(blk);
    for (int t = 0; t < latent_times(); ++t) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int k = 0; k < map.free_in_row(i); ++k) {
          if (spec_.noncentered) {
            names.push_back(dotted("xi" + sfx, {t, i, k}));
            continue;
          }
          names.push_back(dotted(map.is_log_entry(i, k) ? "log_z" + sfx : "z" + sfx, {t, i, k}));
        }
      }
    }
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int t = 0; t < dims_.T; ++t) names.push_back(dotted("eta" + sfx, {i, t}));
      }
    }
    names.push_back("mu0" + sfx);
    for (int i = 0; i < dims_.n; ++i) names.push_back(dotted("mu" + sfx, {i}));
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) names.push_back(dotted("logit_phi" + sfx, {i}));
    }
    names.push_back("logit_alpha" + sfx);
  }
  for (int l = 0; l < dims_.p; ++l) names.push_back(dotted("betaC", {l}));
  for (int l = 0; l < dims_.p; ++l) names.push_back(dotted("betaP", {l}));
  for (const char* name : {"log_sigma2", "a", "log_b", "log_gamma"}) names.emplace_back(name);
  return names;
}

std::vector<std::string> Parameterization::natural_names() const {
  std::vector<std::string> names;
  for (int blk = 0; blk < spec_.latent_blocks(); ++blk) {
    const auto sfx = block_suffix(blk);
    for (int t = 0; t < latent_times(); ++t) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int k = 0; k < spec_.K; ++k) names.push_back(dotted("z" + sfx, {t, i, k}));
      }
    }
    const int hT = spec_.dynamic_latents() ? dims_.T : 1;
    for (int i = 0; i < dims_.n; ++i) {
      for (int t = 0; t < hT; ++t) names.push_back(dotted("h" + sfx, {i, t}));
    }
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int t = 0; t < dims_.T; ++t) names.push_back(dotted("eta" + sfx, {i, t}));
      }
    }
    names.push_back("mu0" + sfx);
    for (int i = 0; i < dims_.n; ++i) names.push_back(dotted("mu" + sfx, {i}));
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) names.push_back(dotted("phi" + sfx, {i}));
    }
    names.push_back("alpha" + sfx);
  }
  for (int l = 0; l < dims_.p; ++l) names.push_back(dotted("betaC", {l}));
  for (int l = 0; l < dims_.p; ++l) names.push_back(dotted("betaP", {l}));
  for (const char* name : {"sigma2", "a", "b", "gamma"}) names.emplace_back(name);
  return names;
}

Eigen::VectorXd Parameterization::flatten(const ModelParams& params) const {
  std::vector<double> v;
  for (const auto& block : params.blocks) {
    for (const auto& Z : block.Z) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int k = 0; k < spec_.K; ++k) v.push_back(Z(i, k));
      }
    }
    const Eigen::MatrixXd h = block.log_volatility();
    for (int i = 0; i < dims_.n; ++i) {
      for (Eigen::Index t = 0; t < h.cols(); ++t) v.push_back(h(i, t));
    }
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int t = 0; t < dims_.T; ++t) v.push_back(block.eta(i, t));
      }
    }
    v.push_back(block.mu0);
    for (int i = 0; i < dims_.n; ++i) v.push_back(block.mu(i));
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) v.push_back(block.phi(i));
    }
    v.push_back(block.alpha);
  }
  for (int l = 0; l < dims_.p; ++l) v.push_back(params.beta_c(l));
  for (int l = 0; l < dims_.p; ++l) v.push_back(params.beta_p(l));
  v.push_back(params.sigma2);
  v.push_back(params.a);
  v.push_back(params.b);
  v.push_back(params.gamma);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ModelParams Parameterization::unflatten(const Eigen::Ref<const Eigen::VectorXd>& values) const {
  ModelParams params = ModelParams::zeros(spec_, dims_.n, dims_.T, dims_.p);
  Eigen::Index pos = 0;
  auto next = [&]() {
    if (pos >= values.size()) throw std::invalid_argument("unflatten: vector too short");
    return values(pos++);
  };
  for (auto& block : params.blocks) {
    for (auto& Z : block.Z) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int k = 0; k < spec_.K; ++k) Z(i, k) = next();
      }
    }
    const int hT = spec_.dynamic_latents() ? dims_.T : 1;
    pos += static_cast<Eigen::Index>(dims_.n) * hT;  // h is derived
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) {
        for (int t = 0; t < dims_.T; ++t) block.eta(i, t) = next();
      }
    }
    block.mu0 = next();
    for (int i = 0; i < dims_.n; ++i) block.mu(i) = next();
    if (spec_.dynamic_latents()) {
      for (int i = 0; i < dims_.n; ++i) block.phi(i) = next();
    }
    block.alpha = next();
  }
  for (int l = 0; l < dims_.p; ++l) params.beta_c(l) = next();
  for (int l = 0; l < dims_.p; ++l) params.beta_p(l) = next();
  params.sigma2 = next();
  params.a = next();
  params.b = next();
  params.gamma = next();
  if (pos != values.size()) throw std::invalid_argument("unflatten: vector too long");
  return params;
}

}  // namespace hurdlenet
