// Copyright 2026 The sleepsae Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Independent reference computations used by the unit and acceptance tests.
// Everything here is written with plain loops and shares no code path with
// the library beyond its data types.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "sleepsae.hpp"

namespace oracle {

using sleepsae::Batch;
using sleepsae::Hyperparams;
using sleepsae::Matrix;
using sleepsae::Rng;
using sleepsae::SaeParams;
using sleepsae::Vector;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double bernoulli_kl(double rho, double p) {
  return rho * std::log(rho / p) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - p));
}

/// Masked temporal auto-encoder cost, evaluated entry by entry.
inline double masked_cost(const SaeParams& p, const Batch& b, const Matrix& mask, const Hyperparams& hp) {
  const auto m = b.inputs.rows(), dv = p.W.cols(), dh = p.W.rows();
  const auto order = static_cast<Eigen::Index>(p.A.size());
  std::vector<double> act_sum(static_cast<std::size_t>(dh), 0.0);
  double recon = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    std::vector<double> h(static_cast<std::size_t>(dh));
    for (Eigen::Index j = 0; j < dh; ++j) {
      double z = p.bh[j];
      for (Eigen::Index i = 0; i < dv; ++i) z += p.W(j, i) * b.inputs(r, i);
      for (Eigen::Index k = 0; k < order; ++k) {
        for (Eigen::Index i = 0; i < dv; ++i) z += p.A[k](j, i) * b.history[k](r, i);
      }
      h[j] = sigmoid(z);
      act_sum[j] += h[j];
    }
    for (Eigen::Index i = 0; i < dv; ++i) {
      double v = p.bv[i];
      for (Eigen::Index j = 0; j < dh; ++j) v += (p.tied() ? p.W(j, i) : p.W_dec(i, j)) * h[j];
      for (Eigen::Index k = 0; k < order; ++k) {
        for (Eigen::Index l = 0; l < dv; ++l) v += p.B[k](i, l) * b.history[k](r, l);
      }
      const double e = v - b.inputs(r, i);
      recon += 0.5 * mask(r, i) * e * e;
    }
  }
  double sq = 0.0;
  auto add = [&](const Matrix& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) sq += x.data()[i] * x.data()[i];
  };
  add(p.W);
  for (const auto& a : p.A) add(a);
  for (const auto& bb : p.B) add(bb);
  if (!p.tied()) add(p.W_dec);
  double sparse = 0.0;
  for (Eigen::Index j = 0; j < dh; ++j) {
    sparse += bernoulli_kl(hp.sparsity_target, act_sum[j] / static_cast<double>(m));
  }
  return recon / static_cast<double>(m) + 0.5 * hp.weight_decay * sq + hp.sparsity_weight * sparse;
}

/// Central finite differences of `f` with respect to every parameter entry.
inline SaeParams numeric_gradient(SaeParams p, const std::function<double(const SaeParams&)>& f, double step = 1e-5) {
  SaeParams g = SaeParams::zeros(p.visible(), p.hidden(), p.order(), p.tied());
  auto pb = p.blocks();
  auto gb = g.blocks();
  for (std::size_t b = 0; b < pb.size(); ++b) {
    for (std::size_t i = 0; i < pb[b].size(); ++i) {
      const double keep = pb[b][i];
      pb[b][i] = keep + step;
      const double up = f(p);
      pb[b][i] = keep - step;
      const double down = f(p);
      pb[b][i] = keep;
      gb[b][i] = (up - down) / (2.0 * step);
    }
  }
  return g;
}

/// ||a - b|| / (||a|| + ||b||), zero when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double den = std::sqrt(na) + std::sqrt(nb);
  return den == 0.0 ? 0.0 : std::sqrt(d) / den;
}

/// Plain sparse auto-encoder (no history, no mask, tied weights): cost and
/// gradients from the textbook back-propagation rules.
struct PlainSae {
  double cost = 0.0;
  Matrix gW;
  Vector gbh, gbv;
};

inline PlainSae plain_sae(const Matrix& W, const Vector& bh, const Vector& bv, const Matrix& X, double lambda,
                          double beta, double rho) {
  const auto m = X.rows(), dv = X.cols(), dh = W.rows();
  const double md = static_cast<double>(m);
  Matrix H(m, dh), R(m, dv);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index j = 0; j < dh; ++j) {
      double z = bh[j];
      for (Eigen::Index i = 0; i < dv; ++i) z += W(j, i) * X(r, i);
      H(r, j) = sigmoid(z);
    }
  }
  PlainSae out;
  double recon = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index i = 0; i < dv; ++i) {
      double v = bv[i];
      for (Eigen::Index j = 0; j < dh; ++j) v += W(j, i) * H(r, j);
      R(r, i) = v - X(r, i);
      recon += 0.5 * R(r, i) * R(r, i);
    }
  }
  std::vector<double> p(static_cast<std::size_t>(dh), 0.0);
  for (Eigen::Index j = 0; j < dh; ++j) {
    for (Eigen::Index r = 0; r < m; ++r) p[j] += H(r, j);
    p[j] /= md;
  }
  double wsq = 0.0, kl = 0.0;
  for (Eigen::Index i = 0; i < W.size(); ++i) wsq += W.data()[i] * W.data()[i];
  for (Eigen::Index j = 0; j < dh; ++j) kl += bernoulli_kl(rho, p[j]);
  out.cost = recon / md + 0.5 * lambda * wsq + beta * kl;

  out.gW = lambda * W;
  out.gbh = Vector::Zero(dh);
  out.gbv = Vector::Zero(dv);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index i = 0; i < dv; ++i) out.gbv[i] += R(r, i) / md;
    for (Eigen::Index j = 0; j < dh; ++j) {
      double back = beta * (-rho / p[j] + (1.0 - rho) / (1.0 - p[j]));
      for (Eigen::Index i = 0; i < dv; ++i) {
        back += W(j, i) * R(r, i);
        out.gW(j, i) += H(r, j) * R(r, i) / md;  // decoder use of W
      }
      const double delta = back * H(r, j) * (1.0 - H(r, j)) / md;
      out.gbh[j] += delta;
      for (Eigen::Index i = 0; i < dv; ++i) out.gW(j, i) += delta * X(r, i);  // encoder use of W
    }
  }
  return out;
}

/// Welch statistic written out from its definition with two-pass moments.
inline double welch(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
  };
  auto var = [](const std::vector<double>& x, double mu) {
    double s = 0.0;
    for (double v : x) s += (v - mu) * (v - mu);
    return s / static_cast<double>(x.size() - 1);
  };
  const double ma = mean(a), mb = mean(b);
  return (ma - mb) / std::sqrt(var(a, ma) / static_cast<double>(a.size()) + var(b, mb) / static_cast<double>(b.size()));
}

/// Exhaustive MAP search. Returns every path whose log score lies within
/// `tie` of the maximum (exact ties are possible when two paths use the same
/// factors in a different order), plus the maximum itself.
struct MapPaths {
  std::vector<std::vector<std::size_t>> optimal;
  double score = -std::numeric_limits<double>::infinity();
};

inline MapPaths brute_force_map(const Matrix& T, const Matrix& E, const Vector& pi, const std::vector<std::size_t>& obs,
                                double tie = 1e-12) {
  const auto k = static_cast<std::size_t>(pi.size());
  const std::size_t n = obs.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= k;
  std::vector<std::pair<double, std::vector<std::size_t>>> all;
  std::vector<std::size_t> path(n);
  MapPaths out;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t t = 0; t < n; ++t) {
      path[t] = c % k;
      c /= k;
    }
    double s = std::log(pi[static_cast<Eigen::Index>(path[0])]) +
               std::log(E(static_cast<Eigen::Index>(path[0]), static_cast<Eigen::Index>(obs[0])));
    for (std::size_t t = 1; t < n; ++t) {
      s += std::log(T(static_cast<Eigen::Index>(path[t - 1]), static_cast<Eigen::Index>(path[t])));
      s += std::log(E(static_cast<Eigen::Index>(path[t]), static_cast<Eigen::Index>(obs[t])));
    }
    out.score = std::max(out.score, s);
    all.emplace_back(s, path);
  }
  for (auto& [s, p] : all) {
    if (s >= out.score - tie) out.optimal.push_back(std::move(p));
  }
  return out;
}

inline double path_score(const Matrix& T, const Matrix& E, const Vector& pi, const std::vector<std::size_t>& path,
                         const std::vector<std::size_t>& obs) {
  double s = std::log(pi[static_cast<Eigen::Index>(path[0])]) +
             std::log(E(static_cast<Eigen::Index>(path[0]), static_cast<Eigen::Index>(obs[0])));
  for (std::size_t t = 1; t < path.size(); ++t) {
    s += std::log(T(static_cast<Eigen::Index>(path[t - 1]), static_cast<Eigen::Index>(path[t])));
    s += std::log(E(static_cast<Eigen::Index>(path[t]), static_cast<Eigen::Index>(obs[t])));
  }
  return s;
}

/// Random row-stochastic matrix with entries bounded away from zero.
inline Matrix random_stochastic(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng);
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

/// Random batch with `order` history blocks.
inline Batch random_batch(std::size_t m, std::size_t dv, std::size_t order, std::size_t classes, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> lab(0, classes - 1);
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dv));
  for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = g(rng);
  for (std::size_t k = 0; k < order; ++k) {
    Matrix h(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dv));
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = g(rng);
    b.history.push_back(h);
  }
  for (std::size_t r = 0; r < m; ++r) b.labels.push_back(lab(rng));
  return b;
}

/// Random parameters with non-zero biases.
inline SaeParams random_params(std::size_t dv, std::size_t dh, std::size_t order, bool tied, Rng& rng) {
  auto p = SaeParams::random(dv, dh, order, tied, rng);
  std::normal_distribution<double> g(0.0, 0.3);
  for (Eigen::Index i = 0; i < p.bh.size(); ++i) p.bh[i] = g(rng);
  for (Eigen::Index i = 0; i < p.bv.size(); ++i) p.bv[i] = g(rng);
  return p;
}

inline std::vector<double> sine(double freq, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs);
  return x;
}

inline double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace oracle
