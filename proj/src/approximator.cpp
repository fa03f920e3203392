#include "imbal/approximator.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include "json.hpp"

#include "imbal/error.hpp"
#include "imbal/kernels.hpp"

namespace imbal {

MlpLayout::MlpLayout(std::vector<std::size_t> sizes, Activation output) : sizes_(std::move(sizes)), output_(output) {
  if (sizes_.size() < 2) throw ValidationError("mlp: need at least an input and an output layer");
  for (auto s : sizes_) {
    if (s == 0) throw ValidationError("mlp: layer sizes must be > 0");
  }
  offsets_.assign(1, 0);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offsets_.back() + sizes_[l] * sizes_[l + 1] + sizes_[l + 1]);
  }
}

void MlpLayout::forward(std::span<const double> params, std::span<const double> input, Cache& cache) const {
  if (input.size() != input_size()) throw ValidationError("mlp forward: input dimension mismatch");
  if (params.size() != parameter_count()) throw ValidationError("mlp forward: parameter count mismatch");
  cache.activations.resize(sizes_.size());
  cache.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers(); ++l) {
    const std::size_t n_in = sizes_[l], n_out = sizes_[l + 1];
    auto& out = cache.activations[l + 1];
    out.resize(n_out);
    kernels::gemv(params.subspan(weight_offset(l), n_in * n_out), params.subspan(bias_offset(l), n_out),
                  cache.activations[l], out);
    const bool relu = (l + 1 < layers()) || output_ == Activation::Relu;
    if (relu) {
      for (auto& v : out) v = v > 0.0 ? v : 0.0;
    }
  }
}

void MlpLayout::backward(std::span<const double> params, const Cache& cache, std::span<const double> upstream,
                         std::span<double> grads, std::span<double> input_grad) const {
  if (upstream.size() != output_size()) throw ValidationError("mlp backward: upstream dimension mismatch");
  if (grads.size() != parameter_count()) throw ValidationError("mlp backward: gradient buffer mismatch");
  if (!input_grad.empty() && input_grad.size() != input_size()) {
    throw ValidationError("mlp backward: input gradient dimension mismatch");
  }
  if (cache.activations.size() != sizes_.size()) throw ValidationError("mlp backward: missing forward cache");

  thread_local std::vector<double> delta, prev;
  delta.assign(upstream.begin(), upstream.end());
  if (output_ == Activation::Relu) {
    const auto& out = cache.activations.back();
    for (std::size_t i = 0; i < delta.size(); ++i) {
      if (!(out[i] > 0.0)) delta[i] = 0.0;
    }
  }
  for (std::size_t l = layers(); l-- > 0;) {
    const std::size_t n_in = sizes_[l], n_out = sizes_[l + 1];
    const auto& in = cache.activations[l];
    kernels::outer_accumulate(delta, in, grads.subspan(weight_offset(l), n_in * n_out));
    kernels::axpy(1.0, delta, grads.subspan(bias_offset(l), n_out));
    if (l == 0 && input_grad.empty()) break;
    prev.assign(n_in, 0.0);
    kernels::gemv_t_accumulate(params.subspan(weight_offset(l), n_in * n_out), delta, prev);
    if (l == 0) {
      std::copy(prev.begin(), prev.end(), input_grad.begin());
      break;
    }
    for (std::size_t i = 0; i < n_in; ++i) {
      if (!(in[i] > 0.0)) prev[i] = 0.0;
    }
    std::swap(delta, prev);
  }
}

void MlpLayout::initialize(std::span<double> params, std::mt19937_64& rng) const {
  if (params.size() != parameter_count()) throw ValidationError("mlp initialize: parameter count mismatch");
  for (std::size_t l = 0; l < layers(); ++l) {
    const double bound = 1.0 / std::sqrt(double(sizes_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t n = sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    for (std::size_t i = 0; i < n; ++i) params[weight_offset(l) + i] = dist(rng);
  }
}

Mlp::Mlp(MlpLayout layout) : layout_(std::move(layout)), params_(layout_.parameter_count(), 0.0) {}

Mlp Mlp::random(std::vector<std::size_t> sizes, std::uint64_t seed, Activation output) {
  Mlp net(MlpLayout(std::move(sizes), output));
  std::mt19937_64 rng(seed);
  net.layout_.initialize(net.params_, rng);
  return net;
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  MlpLayout::Cache cache;
  layout_.forward(params_, input, cache);
  return std::move(cache.activations.back());
}

void Mlp::forward(std::span<const double> input, MlpLayout::Cache& cache) const {
  layout_.forward(params_, input, cache);
}

Mlp::Gradients Mlp::backward(const MlpLayout::Cache& cache, std::span<const double> upstream) const {
  Gradients g;
  g.params.assign(params_.size(), 0.0);
  g.input.assign(layout_.input_size(), 0.0);
  layout_.backward(params_, cache, upstream, g.params, g.input);
  return g;
}

void AdamState::apply(std::span<double> params, std::span<const double> grads) {
  if (m.size() != params.size() || v.size() != params.size() || grads.size() != params.size()) {
    throw ValidationError("adam: moment/parameter shape mismatch");
  }
  ++step;
  kernels::AdamStep s;
  s.lr = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  s.bias_correction1 = 1.0 - std::pow(beta1, double(step));
  s.bias_correction2 = 1.0 - std::pow(beta2, double(step));
  kernels::adam(s, params, m, v, grads);
}

void update(Mlp& net, AdamState& state, std::span<const double> grads) { state.apply(net.parameters(), grads); }

std::vector<double> numeric_gradient(std::span<double> params, const std::function<double()>& loss, double h) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss();
    params[i] = saved - h;
    const double down = loss();
    params[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric, double floor) {
  if (analytic.size() != numeric.size()) throw ValidationError("gradient check: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric[i]), floor);
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

double gradient_check(Mlp& net, std::span<const double> input, const LossProbe& probe, double h) {
  MlpLayout::Cache cache;
  net.forward(input, cache);
  const auto grads = net.backward(cache, probe.gradient(cache.output()));

  const auto param_numeric = numeric_gradient(net.parameters(), [&] { return probe.value(net.forward(input)); }, h);
  std::vector<double> x(input.begin(), input.end());
  const auto input_numeric = numeric_gradient(x, [&] { return probe.value(net.forward(x)); }, h);
  return std::max(max_relative_error(grads.params, param_numeric), max_relative_error(grads.input, input_numeric));
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const std::filesystem::path& path, const Mlp& net, const CheckpointMeta& meta) {
  nlohmann::json header;
  header["format"] = "imbal-mlp-v1";
  header["layers"] = net.layout().sizes();
  header["output_activation"] = net.layout().output_activation() == Activation::Relu ? "relu" : "identity";
  header["seed"] = meta.seed;
  header["step"] = meta.step;
  header["parameters"] = net.parameters().size();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint " + path.string());
  out << header.dump() << '\n';
  for (double p : net.parameters()) {
    auto bits = std::bit_cast<std::uint64_t>(p);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw ValidationError("failed writing checkpoint " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw ValidationError("checkpoint " + path.string() + ": bad header: " + e.what());
  }
  if (header.value("format", "") != "imbal-mlp-v1") throw ValidationError("checkpoint: unknown format");
  const auto sizes = header.at("layers").get<std::vector<std::size_t>>();
  const auto act = header.at("output_activation").get<std::string>() == "relu" ? Activation::Relu : Activation::Identity;
  Mlp net{MlpLayout(sizes, act)};
  if (header.at("parameters").get<std::size_t>() != net.parameters().size()) {
    throw ValidationError("checkpoint: parameter count does not match layer sizes");
  }
  for (double& p : net.parameters()) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ValidationError("checkpoint: truncated parameter blob");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[b]) << (8 * b);
    p = std::bit_cast<double>(bits);
  }
  if (meta != nullptr) {
    meta->seed = header.at("seed").get<std::uint64_t>();
    meta->step = header.at("step").get<std::uint64_t>();
  }
  return net;
}

}  // namespace imbal
