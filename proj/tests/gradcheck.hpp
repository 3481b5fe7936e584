#pragma once

// Central-finite-difference verification of the reverse-mode gradients.
// Shared by the unit suite and the acceptance suite.

#include <cmath>
#include <vector>

#include "uavmec/nn.hpp"
#include "uavmec/rng.hpp"

namespace gradcheck {

struct Case {
  uavmec::nn::DenseNet net;
  std::vector<double> input;
  std::vector<double> upstream;
};

// Random net/input/upstream triple. Inputs are resampled until every hidden
// pre-activation clears the rectifier kink by a margin, where a finite
// difference is meaningless.
inline Case random_case(uavmec::Rng& rng) {
  using uavmec::nn::DenseNet;
  using uavmec::nn::OutputActivation;
  Case c;
  const int in_w = 2 + static_cast<int>(rng.uniform_index(7));
  const int out_w = 1 + static_cast<int>(rng.uniform_index(6));
  const int hidden = 4 + static_cast<int>(rng.uniform_index(61));
  const int layers = 1 + static_cast<int>(rng.uniform_index(3));
  std::vector<int> widths{in_w};
  for (int l = 0; l < layers; ++l) widths.push_back(hidden);
  widths.push_back(out_w);
  const auto act = rng.uniform() < 0.5 ? OutputActivation::identity
                                       : OutputActivation::bounded;
  c.net = DenseNet(widths, act);
  c.net.init_params(rng);
  c.upstream.resize(out_w);
  for (auto& u : c.upstream) u = rng.normal();

  c.input.resize(in_w);
  for (int attempt = 0; attempt < 200; ++attempt) {
    for (auto& x : c.input) x = rng.normal();
    uavmec::nn::ForwardTrace tr;
    uavmec::nn::forward(c.net, c.input, &tr);
    bool clear = true;
    for (int l = 0; l + 1 < c.net.num_layers() + 1 && clear; ++l) {
      if (l == c.net.num_layers() - 1) break;  // output layer has no kink
      for (double z : tr.pre[l]) {
        if (std::abs(z) < 1e-3) {
          clear = false;
          break;
        }
      }
    }
    if (clear) break;
  }
  return c;
}

// Max relative error over every parameter of the net.
inline double max_rel_error(Case& c, double h = 1e-5) {
  using uavmec::nn::ForwardTrace;
  ForwardTrace tr;
  uavmec::nn::forward(c.net, c.input, &tr);
  std::vector<double> analytic(c.net.param_count(), 0.0);
  std::vector<double> in_grad(c.net.input_width(), 0.0);
  uavmec::nn::backward(c.net, tr, c.upstream, analytic, in_grad);

  auto objective = [&]() {
    const auto out = uavmec::nn::forward(c.net, c.input);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) acc += out[i] * c.upstream[i];
    return acc;
  };

  double worst = 0.0;
  auto& theta = c.net.params();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double save = theta[i];
    theta[i] = save + h;
    const double fp = objective();
    theta[i] = save - h;
    const double fm = objective();
    theta[i] = save;
    const double fd = (fp - fm) / (2.0 * h);
    const double rel = std::abs(analytic[i] - fd) /
                       std::max({std::abs(analytic[i]), std::abs(fd), 1e-6});
    worst = std::max(worst, rel);
  }
  // input gradient gets the same treatment
  for (std::size_t i = 0; i < c.input.size(); ++i) {
    const double save = c.input[i];
    c.input[i] = save + h;
    const double fp = objective();
    c.input[i] = save - h;
    const double fm = objective();
    c.input[i] = save;
    const double fd = (fp - fm) / (2.0 * h);
    const double rel = std::abs(in_grad[i] - fd) /
                       std::max({std::abs(in_grad[i]), std::abs(fd), 1e-6});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace gradcheck
