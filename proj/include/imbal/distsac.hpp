#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "imbal/approximator.hpp"
#include "imbal/environment.hpp"

namespace imbal {

/// Topology shared by actor and critic. With encoder_inputs > 0 the network
/// is stacked: an encoder over the first encoder_inputs features produces an
/// embedding, and the head sees [embedding, remaining features].
struct NetworkShape {
  std::size_t inputs = 0;
  std::size_t encoder_inputs = 0;
  std::size_t hidden = 128;
  std::size_t embedding = 32;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Flat or stacked network whose parameters live in one vector (encoder
/// block first), so optimizers and soft updates treat both alike.
class AgentNet {
public:
  AgentNet() = default;
  AgentNet(const NetworkShape& shape, std::size_t outputs);  // zero parameters
  static AgentNet random(const NetworkShape& shape, std::size_t outputs, std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }
  bool stacked() const { return shape_.encoder_inputs > 0; }
  std::size_t input_size() const { return shape_.inputs; }
  std::size_t output_size() const { return head_.output_size(); }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const MlpLayout& encoder_layout() const { return encoder_; }
  const MlpLayout& head_layout() const { return head_; }
  std::size_t encoder_parameter_count() const { return stacked() ? encoder_.parameter_count() : 0; }

  struct Cache {
    MlpLayout::Cache encoder;
    MlpLayout::Cache head;
    std::vector<double> head_input;
    std::span<const double> output() const { return head.output(); }
  };

  void forward(std::span<const double> input, Cache& cache) const;
  std::vector<double> forward(std::span<const double> input) const;

  /// Accumulates into `grads`; overwrites `input_grad` unless empty.
  void backward(const Cache& cache, std::span<const double> upstream, std::span<double> grads,
                std::span<double> input_grad = {}) const;

  void initialize(std::mt19937_64& rng);

  friend bool operator==(const AgentNet&, const AgentNet&) = default;

private:
  NetworkShape shape_;
  MlpLayout encoder_;
  MlpLayout head_;
  std::vector<double> params_;
};

struct AgentConfig {
  double gamma = 0.9995;
  std::size_t n_quantiles = 20;
  bool midpoint_quantiles = false;  // (i - 0.5) / N instead of i / N
  double mu = 0.1;  // soft-update factor
  std::size_t target_update_every = 1;  // train steps between soft updates
  double alpha = 0.01;
  double lr_actor = 5e-5;
  double lr_critic = 5e-4;
  std::size_t batch_size = 1024;
  std::size_t buffer_capacity = 100000;
  double reward_scale = 1.0;  // applied when transitions enter the buffer
  bool smoothed_pinball = false;
  double huber_kappa = 1.0;
  std::size_t hidden = 128;
  std::size_t embedding = 32;

  void validate() const;
};

/// tau_i = i / N for i = 1..N, or the bin midpoints (i - 0.5) / N.
std::vector<double> quantile_levels(std::size_t n, bool midpoints = false);

struct Transition {
  std::vector<double> obs;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;
};

struct Batch {
  std::size_t obs_dim = 0;
  std::vector<double> obs;  // [size x obs_dim]
  std::vector<std::size_t> actions;
  std::vector<double> rewards;
  std::vector<double> next_obs;
  std::vector<char> terminal;

  std::size_t size() const { return actions.size(); }
  std::span<const double> observation(std::size_t i) const { return {obs.data() + i * obs_dim, obs_dim}; }
  std::span<const double> next_observation(std::size_t i) const { return {next_obs.data() + i * obs_dim, obs_dim}; }
  void push(const Transition& t);
};

/// Ring buffer over flat storage; the oldest transition is overwritten once full.
class ReplayBuffer {
public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim);

  void push(std::span<const double> obs, std::size_t action, double reward, std::span<const double> next_obs,
            bool terminal);
  void push(const Transition& t) { push(t.obs, t.action, t.reward, t.next_obs, t.terminal); }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t obs_dim() const { return obs_dim_; }
  Transition at(std::size_t i) const;

  /// Uniform with replacement.
  Batch sample(std::size_t n, std::mt19937_64& rng) const;

private:
  std::size_t capacity_, obs_dim_;
  std::size_t size_ = 0, next_ = 0;
  std::vector<double> obs_, next_obs_, rewards_;
  std::vector<std::size_t> actions_;
  std::vector<char> terminal_;
};

/// Independent generator seed for a named stream of a run seed.
std::uint64_t seed_stream(std::uint64_t seed, std::uint64_t stream);

std::vector<double> softmax(std::span<const double> logits);

/// Quantile regression loss of one prediction vector against a set of target
/// samples: sum_i mean_j rho_tau_i(target_j - pred_i). Writes dloss/dpred.
double pinball_loss(std::span<const double> pred, std::span<const double> targets, std::span<const double> taus,
                    std::span<double> grad, bool smoothed = false, double kappa = 1.0);

/// sum_a pi_a (alpha ln pi_a - qbar_a) for pi = softmax(logits). Writes dloss/dlogits.
double policy_objective(std::span<const double> logits, std::span<const double> qbar, double alpha,
                        std::span<double> grad);

/// Soft Bellman targets, [batch x N]; critic outputs are laid out action-major.
std::vector<double> critic_targets(const Batch& batch, const AgentNet& actor, const AgentNet& target_critic,
                                   const AgentConfig& cfg);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grads;  // w.r.t. the network's parameters
};

LossResult critic_loss(const Batch& batch, const AgentNet& critic, std::span<const double> targets,
                       const AgentConfig& cfg);
LossResult actor_loss(const Batch& batch, const AgentNet& actor, const AgentNet& critic, const AgentConfig& cfg);

/// theta' <- mu theta + (1 - mu) theta'
void soft_update(AgentNet& target, const AgentNet& online, double mu);

enum class ActMode { Sample, Greedy };

/// Lowest index among exact maxima.
std::size_t greedy_index(std::span<const double> values);
std::size_t act(const AgentNet& actor, std::span<const double> obs, ActMode mode, std::mt19937_64& rng);

struct DistSacAgent {
  AgentVariant variant = AgentVariant::Base;
  AgentConfig cfg;
  AgentNet actor, critic, target_critic;
  AdamState actor_opt, critic_opt;
  std::uint64_t updates = 0;
};

/// Builds actor and critic for an environment layout; the layout must be the
/// one the environment produces for the variant.
DistSacAgent build_agent(AgentVariant variant, const ObservationLayout& layout, const AgentConfig& cfg,
                         std::uint64_t seed);

struct TrainDiagnostics {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double entropy = 0.0;  // mean policy entropy over the batch
};

/// One critic step, one actor step, and a soft update on every
/// target_update_every-th call. Throws when the buffer
/// holds fewer transitions than a batch.
TrainDiagnostics train_step(DistSacAgent& agent, const ReplayBuffer& buffer, std::mt19937_64& rng);

/// One checkpoint per network component plus agent.json with the config echo.
void save_agent(const std::filesystem::path& dir, const DistSacAgent& agent, const CheckpointMeta& meta);
DistSacAgent load_agent(const std::filesystem::path& dir, CheckpointMeta* meta = nullptr);

}  // namespace imbal
