// Copyright 2026 The aoi-maintain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aoim/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "aoim/error.hpp"

namespace aoim {

namespace {

constexpr char kNetMagic[8] = {'A', 'O', 'I', 'M', 'N', 'E', 'T', '1'};

double activate(Activation act, double z) {
  switch (act) {
    case Activation::kReLU:
      return z > 0.0 ? z : 0.0;
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kIdentity:
      break;
  }
  return z;
}

// Derivative expressed through the pre-activation z and output a.
double activate_derivative(Activation act, double z, double a) {
  switch (act) {
    case Activation::kReLU:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh:
      return 1.0 - a * a;
    case Activation::kIdentity:
      break;
  }
  return 1.0;
}

bool all_finite(std::span<const double> v) {
  return std::ranges::all_of(v, [](double x) { return std::isfinite(x); });
}

}  // namespace

std::size_t parameter_count_for(std::span<const std::size_t> layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    n += (layer_sizes[l - 1] + 1) * layer_sizes[l];
  }
  return n;
}

DenseNet::DenseNet(std::vector<std::size_t> layer_sizes,
                   std::vector<Activation> activations)
    : layer_sizes_(std::move(layer_sizes)),
      activations_(std::move(activations)) {
  if (layer_sizes_.size() < 2) {
    throw UsageError("a dense net needs at least an input and an output layer");
  }
  if (activations_.size() != layer_sizes_.size() - 1) {
    throw UsageError("expected one activation per non-input layer");
  }
  if (std::ranges::any_of(layer_sizes_, [](std::size_t n) { return n == 0; })) {
    throw UsageError("layer sizes must be positive");
  }
  offsets_.reserve(activations_.size());
  std::size_t offset = 0;
  for (std::size_t l = 1; l < layer_sizes_.size(); ++l) {
    offsets_.push_back(offset);
    offset += (layer_sizes_[l - 1] + 1) * layer_sizes_[l];
  }
  parameters_.assign(offset, 0.0);
}

DenseNet DenseNet::create(std::vector<std::size_t> layer_sizes,
                          std::vector<Activation> activations, Rng& rng) {
  DenseNet net(std::move(layer_sizes), std::move(activations));
  net.initialize(rng);
  return net;
}

void DenseNet::initialize(Rng& rng) {
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const auto fan_in = static_cast<double>(layer_sizes_[l]);
    const auto fan_out = static_cast<double>(layer_sizes_[l + 1]);
    const double limit = activations_[l] == Activation::kReLU
                             ? std::sqrt(6.0 / fan_in)
                             : std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : weights(l)) w = (2.0 * rng.uniform() - 1.0) * limit;
    std::ranges::fill(biases(l), 0.0);
  }
}

std::span<double> DenseNet::weights(std::size_t layer) {
  return std::span<double>(parameters_)
      .subspan(layer_offset(layer),
               layer_sizes_[layer] * layer_sizes_[layer + 1]);
}

std::span<double> DenseNet::biases(std::size_t layer) {
  return std::span<double>(parameters_)
      .subspan(layer_offset(layer) +
                   layer_sizes_[layer] * layer_sizes_[layer + 1],
               layer_sizes_[layer + 1]);
}

std::span<const double> DenseNet::weights(std::size_t layer) const {
  return const_cast<DenseNet*>(this)->weights(layer);
}

std::span<const double> DenseNet::biases(std::size_t layer) const {
  return const_cast<DenseNet*>(this)->biases(layer);
}

std::vector<double> DenseNet::forward(std::span<const double> input) const {
  if (input.size() != input_size()) {
    throw UsageError("forward: input has " + std::to_string(input.size()) +
                     " components, net expects " +
                     std::to_string(input_size()));
  }
  std::vector<double> a(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::size_t n_in = layer_sizes_[l];
    const std::size_t n_out = layer_sizes_[l + 1];
    const auto w = weights(l);
    const auto b = biases(l);
    next.assign(n_out, 0.0);
    for (std::size_t j = 0; j < n_out; ++j) {
      double z = b[j];
      const double* row = w.data() + j * n_in;
      for (std::size_t k = 0; k < n_in; ++k) z += row[k] * a[k];
      next[j] = activate(activations_[l], z);
    }
    a.swap(next);
  }
  return a;
}

std::vector<double> DenseNet::accumulate_gradient(
    std::span<const double> input, std::span<const double> upstream,
    std::span<double> gradient) const {
  if (input.size() != input_size()) {
    throw UsageError("backward: input has " + std::to_string(input.size()) +
                     " components, net expects " +
                     std::to_string(input_size()));
  }
  if (upstream.size() != output_size()) {
    throw UsageError("backward: upstream has " +
                     std::to_string(upstream.size()) +
                     " components, net outputs " +
                     std::to_string(output_size()));
  }
  if (gradient.size() != parameter_count()) {
    throw UsageError("backward: gradient buffer has wrong length");
  }

  // Forward pass keeping pre-activations and outputs per layer.
  const std::size_t depth = num_layers();
  std::vector<std::vector<double>> pre(depth);
  std::vector<std::vector<double>> post(depth + 1);
  post[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t n_in = layer_sizes_[l];
    const std::size_t n_out = layer_sizes_[l + 1];
    const auto w = weights(l);
    const auto b = biases(l);
    pre[l].assign(n_out, 0.0);
    post[l + 1].assign(n_out, 0.0);
    for (std::size_t j = 0; j < n_out; ++j) {
      double z = b[j];
      const double* row = w.data() + j * n_in;
      for (std::size_t k = 0; k < n_in; ++k) z += row[k] * post[l][k];
      pre[l][j] = z;
      post[l + 1][j] = activate(activations_[l], z);
    }
  }

  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> prev;
  for (std::size_t l = depth; l-- > 0;) {
    const std::size_t n_in = layer_sizes_[l];
    const std::size_t n_out = layer_sizes_[l + 1];
    for (std::size_t j = 0; j < n_out; ++j) {
      delta[j] *= activate_derivative(activations_[l], pre[l][j],
                                      post[l + 1][j]);
    }
    const auto w = weights(l);
    double* gw = gradient.data() + layer_offset(l);
    double* gb = gw + n_in * n_out;
    prev.assign(n_in, 0.0);
    for (std::size_t j = 0; j < n_out; ++j) {
      const double d = delta[j];
      if (d == 0.0) continue;
      gb[j] += d;
      const double* row = w.data() + j * n_in;
      double* grow = gw + j * n_in;
      for (std::size_t k = 0; k < n_in; ++k) {
        grow[k] += d * post[l][k];
        prev[k] += d * row[k];
      }
    }
    delta.swap(prev);
  }
  return delta;
}

GradientRecord DenseNet::backward(std::span<const double> input,
                                  std::span<const double> upstream) const {
  GradientRecord record;
  record.gradient.assign(parameter_count(), 0.0);
  record.input_gradient = accumulate_gradient(input, upstream, record.gradient);
  return record;
}

double LossSpec::value(std::span<const double> output) const {
  if (kind == Kind::kScalarOutput) {
    if (output.size() != 1) {
      throw UsageError("scalar-output loss needs a single output");
    }
    return output[0];
  }
  if (target.size() != output.size()) {
    throw UsageError("squared-error target has the wrong length");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < output.size(); ++k) {
    const double e = output[k] - target[k];
    sum += e * e;
  }
  return sum;
}

std::vector<double> LossSpec::upstream(std::span<const double> output) const {
  if (kind == Kind::kScalarOutput) {
    if (output.size() != 1) {
      throw UsageError("scalar-output loss needs a single output");
    }
    return {1.0};
  }
  if (target.size() != output.size()) {
    throw UsageError("squared-error target has the wrong length");
  }
  std::vector<double> up(output.size());
  for (std::size_t k = 0; k < output.size(); ++k) {
    up[k] = 2.0 * (output[k] - target[k]);
  }
  return up;
}

std::vector<double> numeric_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, double step) {
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + step;
    const double plus = f(x);
    x[k] = saved - step;
    const double minus = f(x);
    x[k] = saved;
    g[k] = (plus - minus) / (2.0 * step);
  }
  return g;
}

double max_relative_error(std::span<const double> analytic,
                          std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) {
    throw UsageError("max_relative_error: length mismatch");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double a = analytic[k];
    const double n = numeric[k];
    const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

double grad_check(const DenseNet& net, std::span<const double> input,
                  const LossSpec& loss, double step) {
  const auto output = net.forward(input);
  const auto analytic = net.backward(input, loss.upstream(output)).gradient;
  DenseNet probe = net;
  const auto f = [&](std::span<const double> params) {
    std::ranges::copy(params, probe.parameters().begin());
    return loss.value(probe.forward(input));
  };
  const auto numeric = numeric_gradient(f, net.parameters(), step);
  return max_relative_error(analytic, numeric);
}

OptimizerOptions OptimizerOptions::from(const AgentConfig& config) {
  return OptimizerOptions{config.optimizer,  config.learning_rate,
                          config.adam_beta1, config.adam_beta2,
                          config.adam_epsilon, config.grad_clip_norm};
}

Optimizer::Optimizer(OptimizerOptions options, std::size_t parameter_count)
    : options_(options) {
  if (options_.kind == OptimizerKind::kAdam) {
    first_moment_.assign(parameter_count, 0.0);
    second_moment_.assign(parameter_count, 0.0);
  }
  scratch_.resize(parameter_count);
}

void Optimizer::step(std::span<double> params,
                     std::span<const double> gradient) {
  if (params.size() != scratch_.size() || gradient.size() != params.size()) {
    throw UsageError("optimizer: parameter/gradient length mismatch");
  }
  if (!all_finite(gradient)) {
    throw NumericalError("optimizer: non-finite gradient, update refused");
  }

  double scale = 1.0;
  if (options_.clip_norm > 0.0) {
    double sq = 0.0;
    for (double g : gradient) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > options_.clip_norm) scale = options_.clip_norm / norm;
  }

  // scratch_ holds the candidate parameters so a failed step changes nothing.
  const double lr = options_.learning_rate;
  if (options_.kind == OptimizerKind::kSgd) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      scratch_[k] = params[k] - lr * scale * gradient[k];
    }
    if (!all_finite(scratch_)) {
      throw NumericalError("optimizer: update produced non-finite parameters");
    }
  } else {
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double t = static_cast<double>(steps_ + 1);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    std::vector<double> m = first_moment_;
    std::vector<double> v = second_moment_;
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double g = scale * gradient[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      scratch_[k] =
          params[k] - lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
    if (!all_finite(scratch_)) {
      throw NumericalError("optimizer: update produced non-finite parameters");
    }
    first_moment_.swap(m);
    second_moment_.swap(v);
  }
  std::ranges::copy(scratch_, params.begin());
  ++steps_;
}

void optimizer_step(DenseNet& net, std::span<const double> gradient,
                    Optimizer& optimizer) {
  optimizer.step(net.parameters(), gradient);
}

namespace wire {

void put_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

namespace {
void read_exact(std::istream& in, unsigned char* buf, std::size_t n) {
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw IoError("checkpoint truncated");
  }
}
}  // namespace

std::uint8_t get_u8(std::istream& in) {
  unsigned char b;
  read_exact(in, &b, 1);
  return b;
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  read_exact(in, b, 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  read_exact(in, b, 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& in) {
  return std::bit_cast<double>(get_u64(in));
}

}  // namespace wire

void write_net(std::ostream& out, const DenseNet& net) {
  out.write(kNetMagic, sizeof(kNetMagic));
  wire::put_u32(out, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (auto n : net.layer_sizes()) {
    wire::put_u32(out, static_cast<std::uint32_t>(n));
  }
  for (auto a : net.activations()) {
    wire::put_u8(out, static_cast<std::uint8_t>(a));
  }
  wire::put_u64(out, net.parameter_count());
  for (double p : net.parameters()) wire::put_f64(out, p);
  if (!out) throw IoError("failed writing network parameters");
}

DenseNet read_net(std::istream& in) {
  char magic[sizeof(kNetMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) ||
      std::memcmp(magic, kNetMagic, sizeof(magic)) != 0) {
    throw IoError("not a network checkpoint (bad magic)");
  }
  const auto count = wire::get_u32(in);
  if (count < 2 || count > 64) {
    throw IoError("network checkpoint: implausible layer count " +
                  std::to_string(count));
  }
  std::vector<std::size_t> sizes(count);
  for (auto& n : sizes) {
    n = wire::get_u32(in);
    if (n == 0 || n > (1U << 20)) {
      throw IoError("network checkpoint: implausible layer size");
    }
  }
  std::vector<Activation> acts(count - 1);
  for (auto& a : acts) {
    const auto code = wire::get_u8(in);
    if (code > 2) throw IoError("network checkpoint: unknown activation code");
    a = static_cast<Activation>(code);
  }
  const auto params = wire::get_u64(in);
  if (params != parameter_count_for(sizes)) {
    throw IoError("network checkpoint: parameter count does not match shape");
  }
  DenseNet net(std::move(sizes), std::move(acts));
  for (double& p : net.parameters()) p = wire::get_f64(in);
  return net;
}

void save_net(const DenseNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_net(out, net);
}

DenseNet load_net(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_net(in);
}

}  // namespace aoim
