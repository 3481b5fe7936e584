#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uavmec/rng.hpp"

namespace uavmec::nn {

enum class OutputActivation : std::uint32_t {
  identity = 0,  // critics
  bounded = 1,   // actors, tanh into (-1,1)
};

// Fully-connected net with rectifier hidden layers. Parameters live in one
// flat vector laid out [W0 row-major | b0 | W1 | b1 | ...], which keeps the
// optimizer, target blending and checkpoints shape-agnostic.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::vector<int> widths, OutputActivation out_act);

  // Fan-in-scaled uniform init; the final layer is additionally multiplied by
  // final_layer_scale (small values give near-zero initial policies).
  void init_params(Rng& rng, double final_layer_scale = 1.0);

  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  const std::vector<int>& widths() const { return widths_; }
  OutputActivation output_activation() const { return out_act_; }

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }
  std::size_t param_count() const { return theta_.size(); }

  std::size_t weight_offset(int layer) const { return w_off_[layer]; }
  std::size_t bias_offset(int layer) const { return b_off_[layer]; }

 private:
  std::vector<int> widths_;
  OutputActivation out_act_ = OutputActivation::identity;
  std::vector<double> theta_;
  std::vector<std::size_t> w_off_, b_off_;
};

// Activations recorded by a forward pass, consumed by backward().
struct ForwardTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;  // pre-activations per layer
  std::vector<std::vector<double>> act;  // post-activations per layer
};

std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            ForwardTrace* trace = nullptr);

// Reverse-mode gradients of (output . upstream). Parameter gradients are
// accumulated into grad (callers zero it per batch); input_grad, when
// nonempty, receives (not accumulates) the input gradient.
void backward(const DenseNet& net, const ForwardTrace& trace,
              std::span<const double> upstream, std::span<double> grad,
              std::span<double> input_grad = {});

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
};

// Adaptive-moment update with bias correction; plain_sgd switches to the
// unadorned params -= lr * grad step.
void sgd_adam_step(std::vector<double>& params, std::span<const double> grad,
                   AdamState& state, double lr, bool plain_sgd = false,
                   double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// target = rate * online + (1 - rate) * target, elementwise.
void polyak_update(std::span<double> target, std::span<const double> online, double rate);

// Flat binary checkpoint: magic, version, activation, widths, parameters,
// trailing FNV-1a checksum over everything before it.
void save_net(std::ostream& os, const DenseNet& net);
DenseNet load_net(std::istream& is);
void save_net_file(const std::string& path, const DenseNet& net);
DenseNet load_net_file(const std::string& path);

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace uavmec::nn
