#include "uavmec/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace uavmec::nn {

DenseNet::DenseNet(std::vector<int> widths, OutputActivation out_act)
    : widths_(std::move(widths)), out_act_(out_act) {
  if (widths_.size() < 2) throw std::invalid_argument("DenseNet: need >= 2 widths");
  for (int w : widths_) {
    if (w < 1) throw std::invalid_argument("DenseNet: widths must be >= 1");
  }
  std::size_t off = 0;
  for (int l = 0; l < num_layers(); ++l) {
    w_off_.push_back(off);
    off += static_cast<std::size_t>(widths_[l]) * widths_[l + 1];
    b_off_.push_back(off);
    off += widths_[l + 1];
  }
  theta_.assign(off, 0.0);
}

void DenseNet::init_params(Rng& rng, double final_layer_scale) {
  for (int l = 0; l < num_layers(); ++l) {
    const int fan_in = widths_[l];
    const int fan_out = widths_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const double scale = (l == num_layers() - 1) ? final_layer_scale : 1.0;
    double* w = theta_.data() + w_off_[l];
    for (int i = 0; i < fan_in * fan_out; ++i) w[i] = scale * rng.uniform(-bound, bound);
    double* b = theta_.data() + b_off_[l];
    for (int i = 0; i < fan_out; ++i) b[i] = scale * rng.uniform(-bound, bound);
  }
}

std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            ForwardTrace* trace) {
  if (static_cast<int>(input.size()) != net.input_width())
    throw std::invalid_argument("forward: input width mismatch");
  const auto& widths = net.widths();
  const double* theta = net.params().data();

  if (trace) {
    trace->input.assign(input.begin(), input.end());
    trace->pre.assign(net.num_layers(), {});
    trace->act.assign(net.num_layers(), {});
  }

  std::vector<double> cur(input.begin(), input.end());
  for (int l = 0; l < net.num_layers(); ++l) {
    const int in_w = widths[l];
    const int out_w = widths[l + 1];
    const double* w = theta + net.weight_offset(l);
    const double* b = theta + net.bias_offset(l);
    std::vector<double> z(out_w);
    for (int j = 0; j < out_w; ++j) {
      const double* row = w + static_cast<std::size_t>(j) * in_w;
      double acc = b[j];
      for (int i = 0; i < in_w; ++i) acc += row[i] * cur[i];
      z[j] = acc;
    }
    if (trace) trace->pre[l] = z;
    const bool last = l == net.num_layers() - 1;
    if (!last) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    } else if (net.output_activation() == OutputActivation::bounded) {
      for (double& v : z) v = std::tanh(v);
    }
    if (trace) trace->act[l] = z;
    cur = std::move(z);
  }
  return cur;
}

void backward(const DenseNet& net, const ForwardTrace& trace,
              std::span<const double> upstream, std::span<double> grad,
              std::span<double> input_grad) {
  const auto& widths = net.widths();
  const int layers = net.num_layers();
  if (static_cast<int>(upstream.size()) != net.output_width())
    throw std::invalid_argument("backward: upstream width mismatch");
  if (grad.size() != net.param_count())
    throw std::invalid_argument("backward: grad size mismatch");
  if (!input_grad.empty() && static_cast<int>(input_grad.size()) != net.input_width())
    throw std::invalid_argument("backward: input_grad size mismatch");
  const double* theta = net.params().data();

  std::vector<double> delta(upstream.begin(), upstream.end());
  if (net.output_activation() == OutputActivation::bounded) {
    for (int j = 0; j < net.output_width(); ++j) {
      const double t = trace.act[layers - 1][j];
      delta[j] *= 1.0 - t * t;
    }
  }

  for (int l = layers - 1; l >= 0; --l) {
    const int in_w = widths[l];
    const int out_w = widths[l + 1];
    const std::vector<double>& a_prev = l == 0 ? trace.input : trace.act[l - 1];
    double* gw = grad.data() + net.weight_offset(l);
    double* gb = grad.data() + net.bias_offset(l);
    for (int j = 0; j < out_w; ++j) {
      const double d = delta[j];
      gb[j] += d;
      double* grow = gw + static_cast<std::size_t>(j) * in_w;
      for (int i = 0; i < in_w; ++i) grow[i] += d * a_prev[i];
    }
    if (l == 0 && input_grad.empty()) break;
    const double* w = theta + net.weight_offset(l);
    std::vector<double> prev_delta(in_w, 0.0);
    for (int j = 0; j < out_w; ++j) {
      const double d = delta[j];
      const double* row = w + static_cast<std::size_t>(j) * in_w;
      for (int i = 0; i < in_w; ++i) prev_delta[i] += d * row[i];
    }
    if (l == 0) {
      for (int i = 0; i < in_w; ++i) input_grad[i] = prev_delta[i];
      break;
    }
    // Rectifier gate of the layer below; derivative at 0 taken as 0.
    for (int i = 0; i < in_w; ++i) {
      if (trace.pre[l - 1][i] <= 0.0) prev_delta[i] = 0.0;
    }
    delta = std::move(prev_delta);
  }
}

void sgd_adam_step(std::vector<double>& params, std::span<const double> grad,
                   AdamState& state, double lr, bool plain_sgd, double beta1,
                   double beta2, double eps) {
  if (grad.size() != params.size()) throw std::invalid_argument("adam: size mismatch");
  if (plain_sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
    return;
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.t = 0;
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void polyak_update(std::span<double> target, std::span<const double> online, double rate) {
  if (target.size() != online.size()) throw std::invalid_argument("polyak: size mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] = rate * online[i] + (1.0 - rate) * target[i];
  }
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr char kMagic[8] = {'D', 'N', 'E', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

struct HashingWriter {
  std::ostream& os;
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  void write(const void* data, std::size_t len) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    hash = fnv1a(data, len, hash);
  }
};

struct HashingReader {
  std::istream& is;
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  void read(void* data, std::size_t len) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (!is) throw std::runtime_error("checkpoint: truncated stream");
    hash = fnv1a(data, len, hash);
  }
};

}  // namespace

void save_net(std::ostream& os, const DenseNet& net) {
  HashingWriter w{os};
  w.write(kMagic, sizeof(kMagic));
  w.write(&kVersion, sizeof(kVersion));
  const std::uint32_t act = static_cast<std::uint32_t>(net.output_activation());
  w.write(&act, sizeof(act));
  const std::uint32_t n = static_cast<std::uint32_t>(net.widths().size());
  w.write(&n, sizeof(n));
  for (int width : net.widths()) {
    const std::int32_t v = width;
    w.write(&v, sizeof(v));
  }
  w.write(net.params().data(), net.param_count() * sizeof(double));
  os.write(reinterpret_cast<const char*>(&w.hash), sizeof(w.hash));
}

DenseNet load_net(std::istream& is) {
  HashingReader r{is};
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  std::uint32_t version = 0, act = 0, n = 0;
  r.read(&version, sizeof(version));
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  r.read(&act, sizeof(act));
  if (act > 1) throw std::runtime_error("checkpoint: bad activation tag");
  r.read(&n, sizeof(n));
  if (n < 2 || n > 64) throw std::runtime_error("checkpoint: bad width count");
  std::vector<int> widths(n);
  for (auto& width : widths) {
    std::int32_t v = 0;
    r.read(&v, sizeof(v));
    width = v;
  }
  DenseNet net(widths, static_cast<OutputActivation>(act));
  r.read(net.params().data(), net.param_count() * sizeof(double));
  std::uint64_t stored = 0;
  is.read(reinterpret_cast<char*>(&stored), sizeof(stored));
  if (!is || stored != r.hash) throw std::runtime_error("checkpoint: checksum mismatch");
  return net;
}

void save_net_file(const std::string& path, const DenseNet& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  save_net(os, net);
}

DenseNet load_net_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  return load_net(is);
}

}  // namespace uavmec::nn
