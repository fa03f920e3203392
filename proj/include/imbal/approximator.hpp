#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace imbal {

enum class Activation { Identity, Relu };

/// Shape of a fully connected network: rectifier on hidden layers, the
/// configured activation on the output. Parameters live in a flat vector,
/// layer by layer, each as a row-major [out x in] weight block then the bias.
class MlpLayout {
public:
  MlpLayout() = default;
  MlpLayout(std::vector<std::size_t> sizes, Activation output = Activation::Identity);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  Activation output_activation() const { return output_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t layers() const { return sizes_.size() - 1; }
  std::size_t parameter_count() const { return offsets_.back(); }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[layer] + sizes_[layer] * sizes_[layer + 1]; }

  /// Per-layer outputs of the last forward pass; activations[0] is the input.
  struct Cache {
    std::vector<std::vector<double>> activations;
    std::span<const double> output() const { return activations.back(); }
  };

  void forward(std::span<const double> params, std::span<const double> input, Cache& cache) const;

  /// Accumulates parameter gradients into `grads` and writes (overwrites) the
  /// input gradient into `input_grad` unless it is empty.
  void backward(std::span<const double> params, const Cache& cache, std::span<const double> upstream,
                std::span<double> grads, std::span<double> input_grad) const;

  /// Uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  void initialize(std::span<double> params, std::mt19937_64& rng) const;

  friend bool operator==(const MlpLayout& a, const MlpLayout& b) {
    return a.sizes_ == b.sizes_ && a.output_ == b.output_;
  }

private:
  std::vector<std::size_t> sizes_;
  Activation output_ = Activation::Identity;
  std::vector<std::size_t> offsets_{0};
};

/// A network with its own parameters.
class Mlp {
public:
  Mlp() = default;
  explicit Mlp(MlpLayout layout);  // zero parameters
  static Mlp random(std::vector<std::size_t> sizes, std::uint64_t seed, Activation output = Activation::Identity);

  const MlpLayout& layout() const { return layout_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::vector<double> forward(std::span<const double> input) const;
  void forward(std::span<const double> input, MlpLayout::Cache& cache) const;

  struct Gradients {
    std::vector<double> params;
    std::vector<double> input;
  };
  Gradients backward(const MlpLayout::Cache& cache, std::span<const double> upstream) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

private:
  MlpLayout layout_;
  std::vector<double> params_;
};

/// Adaptive-moment optimizer state for one flat parameter vector.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  AdamState(std::size_t n, double lr) : learning_rate(lr), m(n, 0.0), v(n, 0.0) {}

  void apply(std::span<double> params, std::span<const double> grads);
};

void update(Mlp& net, AdamState& state, std::span<const double> grads);

/// Central finite differences of `loss` over `params` (perturbed in place and restored).
std::vector<double> numeric_gradient(std::span<double> params, const std::function<double()>& loss, double h = 1e-5);

/// max_i |a_i - n_i| / max(|a_i| + |n_i|, floor)
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric, double floor = 1e-6);

/// A scalar loss on the network output and its gradient with respect to the output.
struct LossProbe {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

/// Compares backward() against finite differences for `probe(net(input))`,
/// over parameters and input. Returns the max relative error.
double gradient_check(Mlp& net, std::span<const double> input, const LossProbe& probe, double h = 1e-5);

// Checkpoint format: one JSON metadata line (layer sizes, output activation,
// seed, step count, parameter count), a newline, then the parameters as
// little-endian IEEE-754 doubles.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Mlp& net, const CheckpointMeta& meta);
Mlp load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace imbal
