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

// Dense feedforward networks with hand-written backpropagation.
//
// Parameters live in one flat vector. For each layer l (n_in -> n_out), in
// order: the n_out x n_in weight matrix row-major, then the n_out biases.
//
// Checkpoint byte layout (all integers and floats little-endian):
//
//   offset  size       field
//   0       8          magic "AOIMNET1"
//   8       4          u32 L, number of layer sizes (>= 2)
//   12      4*L        u32 layer sizes
//   ..      L-1        u8 activation per non-input layer
//                      (0 identity, 1 relu, 2 tanh)
//   ..      8          u64 P, parameter count
//   ..      8*P        f64 (IEEE-754 binary64) parameters, layout above

#ifndef AOIM_NEURAL_HPP_
#define AOIM_NEURAL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aoim/config.hpp"
#include "aoim/rng.hpp"

namespace aoim {

enum class Activation : std::uint8_t { kIdentity = 0, kReLU = 1, kTanh = 2 };

struct GradientRecord {
  std::vector<double> gradient;        // aligned with parameters
  std::vector<double> input_gradient;  // d(output . upstream) / d(input)
  double loss = 0.0;
};

std::size_t parameter_count_for(std::span<const std::size_t> layer_sizes);

class DenseNet {
 public:
  // Parameters start at zero. Throws UsageError on inconsistent shapes.
  DenseNet(std::vector<std::size_t> layer_sizes,
           std::vector<Activation> activations);

  // Fan-in scaled uniform weights (He for ReLU layers, Xavier otherwise),
  // zero biases.
  static DenseNet create(std::vector<std::size_t> layer_sizes,
                         std::vector<Activation> activations, Rng& rng);
  void initialize(Rng& rng);

  std::size_t input_size() const { return layer_sizes_.front(); }
  std::size_t output_size() const { return layer_sizes_.back(); }
  std::size_t num_layers() const { return activations_.size(); }
  std::size_t parameter_count() const { return parameters_.size(); }
  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  const std::vector<Activation>& activations() const { return activations_; }

  std::span<double> parameters() { return parameters_; }
  std::span<const double> parameters() const { return parameters_; }

  // Views into layer `layer` (0 = first non-input layer).
  std::span<double> weights(std::size_t layer);
  std::span<double> biases(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> biases(std::size_t layer) const;

  // Throws UsageError on dimension mismatch.
  std::vector<double> forward(std::span<const double> input) const;

  // Adds d<upstream, f(input)>/d(params) into `gradient` and returns the
  // gradient with respect to the input.
  std::vector<double> accumulate_gradient(std::span<const double> input,
                                          std::span<const double> upstream,
                                          std::span<double> gradient) const;

  GradientRecord backward(std::span<const double> input,
                          std::span<const double> upstream) const;

  bool operator==(const DenseNet&) const = default;

 private:
  std::size_t layer_offset(std::size_t layer) const {
    return offsets_[layer];
  }

  std::vector<std::size_t> layer_sizes_;
  std::vector<Activation> activations_;
  std::vector<std::size_t> offsets_;
  std::vector<double> parameters_;
};

// Scalar loss built on a net's output, for gradient checking.
struct LossSpec {
  enum class Kind { kSquaredError, kScalarOutput };
  Kind kind = Kind::kScalarOutput;
  std::vector<double> target;

  static LossSpec squared_error(std::vector<double> target) {
    return LossSpec{Kind::kSquaredError, std::move(target)};
  }
  static LossSpec scalar_output() { return LossSpec{}; }

  double value(std::span<const double> output) const;
  std::vector<double> upstream(std::span<const double> output) const;
};

// Central differences of `f` at `params`.
std::vector<double> numeric_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, double step = 1e-5);

// max_k |a_k - n_k| / max(|a_k|, |n_k|, 1e-8)
double max_relative_error(std::span<const double> analytic,
                          std::span<const double> numeric);

// Compares backward() with central differences for the given loss.
double grad_check(const DenseNet& net, std::span<const double> input,
                  const LossSpec& loss, double step = 1e-5);

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // 0 disables global-norm clipping

  static OptimizerOptions from(const AgentConfig& config);
};

// First-order update rule with its per-parameter state.
class Optimizer {
 public:
  Optimizer(OptimizerOptions options, std::size_t parameter_count);

  // Throws NumericalError and leaves `params` untouched if the gradient or
  // the updated parameters are not finite.
  void step(std::span<double> params, std::span<const double> gradient);

  std::uint64_t steps() const { return steps_; }
  const OptimizerOptions& options() const { return options_; }

 private:
  OptimizerOptions options_;
  std::vector<double> first_moment_;
  std::vector<double> second_moment_;
  std::vector<double> scratch_;
  std::uint64_t steps_ = 0;
};

// Convenience wrapper: one optimizer step on `net`.
void optimizer_step(DenseNet& net, std::span<const double> gradient,
                    Optimizer& optimizer);

void write_net(std::ostream& out, const DenseNet& net);
DenseNet read_net(std::istream& in);
void save_net(const DenseNet& net, const std::string& path);
DenseNet load_net(const std::string& path);

// Little-endian primitives shared with the agent checkpoint format.
namespace wire {
void put_u8(std::ostream& out, std::uint8_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
std::uint8_t get_u8(std::istream& in);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
}  // namespace wire

}  // namespace aoim

#endif  // AOIM_NEURAL_HPP_
