#include "imbal/distsac.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include "json.hpp"

#include "imbal/error.hpp"
#include "imbal/kernels.hpp"

namespace imbal {

// ---------------------------------------------------------------- networks

AgentNet::AgentNet(const NetworkShape& shape, std::size_t outputs) : shape_(shape) {
  if (shape.inputs == 0 || outputs == 0 || shape.hidden == 0) throw ValidationError("agent net: empty dimension");
  if (shape.encoder_inputs > 0) {
    if (shape.encoder_inputs > shape.inputs) throw ValidationError("agent net: encoder wider than the input");
    if (shape.embedding == 0) throw ValidationError("agent net: empty embedding");
    encoder_ = MlpLayout({shape.encoder_inputs, shape.hidden, shape.embedding}, Activation::Relu);
    head_ = MlpLayout({shape.embedding + shape.inputs - shape.encoder_inputs, shape.hidden, outputs});
    params_.assign(encoder_.parameter_count() + head_.parameter_count(), 0.0);
  } else {
    head_ = MlpLayout({shape.inputs, shape.hidden, shape.hidden, outputs});
    params_.assign(head_.parameter_count(), 0.0);
  }
}

AgentNet AgentNet::random(const NetworkShape& shape, std::size_t outputs, std::uint64_t seed) {
  AgentNet net(shape, outputs);
  std::mt19937_64 rng(seed);
  net.initialize(rng);
  return net;
}

void AgentNet::initialize(std::mt19937_64& rng) {
  const std::size_t ne = encoder_parameter_count();
  if (stacked()) encoder_.initialize(std::span(params_).first(ne), rng);
  head_.initialize(std::span(params_).subspan(ne), rng);
}

void AgentNet::forward(std::span<const double> input, Cache& cache) const {
  if (input.size() != shape_.inputs) throw ValidationError("agent net: input dimension mismatch");
  if (!stacked()) {
    head_.forward(params_, input, cache.head);
    return;
  }
  const std::size_t ne = encoder_.parameter_count();
  const std::span<const double> p(params_);
  encoder_.forward(p.first(ne), input.first(shape_.encoder_inputs), cache.encoder);
  const auto emb = cache.encoder.output();
  cache.head_input.assign(emb.begin(), emb.end());
  cache.head_input.insert(cache.head_input.end(), input.begin() + long(shape_.encoder_inputs), input.end());
  head_.forward(p.subspan(ne), cache.head_input, cache.head);
}

std::vector<double> AgentNet::forward(std::span<const double> input) const {
  Cache cache;
  forward(input, cache);
  const auto out = cache.output();
  return {out.begin(), out.end()};
}

void AgentNet::backward(const Cache& cache, std::span<const double> upstream, std::span<double> grads,
                        std::span<double> input_grad) const {
  if (grads.size() != params_.size()) throw ValidationError("agent net: gradient buffer mismatch");
  if (!input_grad.empty() && input_grad.size() != shape_.inputs) {
    throw ValidationError("agent net: input gradient dimension mismatch");
  }
  const std::span<const double> p(params_);
  if (!stacked()) {
    head_.backward(p, cache.head, upstream, grads, input_grad);
    return;
  }
  const std::size_t ne = encoder_.parameter_count();
  thread_local std::vector<double> head_in_grad;
  head_in_grad.assign(head_.input_size(), 0.0);
  head_.backward(p.subspan(ne), cache.head, upstream, grads.subspan(ne), head_in_grad);
  const std::span<const double> hg(head_in_grad);
  const std::size_t emb = shape_.embedding;
  if (input_grad.empty()) {
    encoder_.backward(p.first(ne), cache.encoder, hg.first(emb), grads.first(ne), {});
    return;
  }
  encoder_.backward(p.first(ne), cache.encoder, hg.first(emb), grads.first(ne),
                    input_grad.first(shape_.encoder_inputs));
  std::copy(hg.begin() + long(emb), hg.end(), input_grad.begin() + long(shape_.encoder_inputs));
}

// ---------------------------------------------------------------- config, buffer

void AgentConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("agent config: gamma must be in (0, 1]");
  if (!(mu > 0.0 && mu <= 1.0)) throw ValidationError("agent config: mu must be in (0, 1]");
  if (!(alpha >= 0.0)) throw ValidationError("agent config: alpha must be >= 0");
  if (target_update_every == 0) throw ValidationError("agent config: target_update_every must be > 0");
  if (n_quantiles == 0) throw ValidationError("agent config: need at least one quantile");
  if (!(lr_actor > 0.0) || !(lr_critic > 0.0)) throw ValidationError("agent config: learning rates must be > 0");
  if (batch_size == 0 || buffer_capacity == 0) throw ValidationError("agent config: empty batch or buffer");
  if (!(reward_scale > 0.0) || !std::isfinite(reward_scale)) throw ValidationError("agent config: bad reward scale");
  if (!(huber_kappa > 0.0)) throw ValidationError("agent config: huber kappa must be > 0");
  if (hidden == 0 || embedding == 0) throw ValidationError("agent config: empty hidden layer");
}

std::vector<double> quantile_levels(std::size_t n, bool midpoints) {
  std::vector<double> taus(n);
  const double shift = midpoints ? 0.5 : 0.0;
  for (std::size_t i = 0; i < n; ++i) taus[i] = (double(i + 1) - shift) / double(n);
  return taus;
}

void Batch::push(const Transition& t) {
  if (obs_dim == 0) obs_dim = t.obs.size();
  if (t.obs.size() != obs_dim || t.next_obs.size() != obs_dim) throw ValidationError("batch: observation size");
  obs.insert(obs.end(), t.obs.begin(), t.obs.end());
  next_obs.insert(next_obs.end(), t.next_obs.begin(), t.next_obs.end());
  actions.push_back(t.action);
  rewards.push_back(t.reward);
  terminal.push_back(t.terminal);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim) : capacity_(capacity), obs_dim_(obs_dim) {
  if (capacity == 0 || obs_dim == 0) throw ValidationError("replay buffer: empty capacity or observation");
  obs_.resize(capacity * obs_dim);
  next_obs_.resize(capacity * obs_dim);
  rewards_.resize(capacity);
  actions_.resize(capacity);
  terminal_.resize(capacity);
}

void ReplayBuffer::push(std::span<const double> obs, std::size_t action, double reward,
                        std::span<const double> next_obs, bool terminal) {
  if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_) throw ValidationError("replay buffer: observation size");
  if (action >= kNumActions) throw ValidationError("replay buffer: action out of range");
  if (!std::isfinite(reward)) throw ValidationError("replay buffer: non-finite reward");
  auto finite = [](std::span<const double> v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); };
  if (!finite(obs) || !finite(next_obs)) throw ValidationError("replay buffer: non-finite observation");
  std::copy(obs.begin(), obs.end(), obs_.begin() + long(next_ * obs_dim_));
  std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + long(next_ * obs_dim_));
  rewards_[next_] = reward;
  actions_[next_] = action;
  terminal_[next_] = terminal;
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw ValidationError("replay buffer: index out of range");
  Transition t;
  t.obs.assign(obs_.begin() + long(i * obs_dim_), obs_.begin() + long((i + 1) * obs_dim_));
  t.next_obs.assign(next_obs_.begin() + long(i * obs_dim_), next_obs_.begin() + long((i + 1) * obs_dim_));
  t.action = actions_[i];
  t.reward = rewards_[i];
  t.terminal = terminal_[i];
  return t;
}

Batch ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  if (size_ == 0) throw ValidationError("replay buffer: sampling an empty buffer");
  Batch b;
  b.obs_dim = obs_dim_;
  b.obs.resize(n * obs_dim_);
  b.next_obs.resize(n * obs_dim_);
  b.actions.resize(n);
  b.rewards.resize(n);
  b.terminal.resize(n);
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = pick(rng);
    std::copy_n(obs_.begin() + long(i * obs_dim_), obs_dim_, b.obs.begin() + long(k * obs_dim_));
    std::copy_n(next_obs_.begin() + long(i * obs_dim_), obs_dim_, b.next_obs.begin() + long(k * obs_dim_));
    b.actions[k] = actions_[i];
    b.rewards[k] = rewards_[i];
    b.terminal[k] = terminal_[i];
  }
  return b;
}

// ---------------------------------------------------------------- losses

std::uint64_t seed_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

void log_softmax(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - mx);
  const double lse = mx + std::log(s);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  log_softmax(logits, p);
  for (auto& v : p) v = std::exp(v);
  return p;
}

double pinball_loss(std::span<const double> pred, std::span<const double> targets, std::span<const double> taus,
                    std::span<double> grad, bool smoothed, double kappa) {
  if (pred.size() != taus.size() || grad.size() != pred.size() || targets.empty()) {
    throw ValidationError("pinball loss: shape mismatch");
  }
  const double inv_m = 1.0 / double(targets.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double g = 0.0;
    for (double t : targets) {
      const double u = t - pred[i];
      const double w = u < 0.0 ? taus[i] - 1.0 : taus[i];  // tau - 1{u<0}
      if (!smoothed) {
        loss += w * u;
        g -= w;
      } else {
        const double aw = std::abs(w);
        if (std::abs(u) <= kappa) {
          loss += aw * 0.5 * u * u / kappa;
          g -= aw * u / kappa;
        } else {
          loss += aw * (std::abs(u) - 0.5 * kappa);
          g -= aw * (u > 0.0 ? 1.0 : -1.0);
        }
      }
    }
    grad[i] = g * inv_m;
  }
  return loss * inv_m;
}

double policy_objective(std::span<const double> logits, std::span<const double> qbar, double alpha,
                        std::span<double> grad) {
  const std::size_t n = logits.size();
  if (qbar.size() != n || grad.size() != n) throw ValidationError("policy objective: shape mismatch");
  std::array<double, 16> lp_buf{};
  if (n > lp_buf.size()) throw ValidationError("policy objective: too many actions");
  std::span<double> lp(lp_buf.data(), n);
  log_softmax(logits, lp);
  double value = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const double f = alpha * lp[a] - qbar[a];
    grad[a] = f;
    value += std::exp(lp[a]) * f;
  }
  for (std::size_t a = 0; a < n; ++a) grad[a] = std::exp(lp[a]) * (grad[a] - value);
  return value;
}

std::vector<double> critic_targets(const Batch& batch, const AgentNet& actor, const AgentNet& target_critic,
                                   const AgentConfig& cfg) {
  const std::size_t n = cfg.n_quantiles, b = batch.size();
  if (target_critic.output_size() != kNumActions * n || actor.output_size() != kNumActions) {
    throw ValidationError("critic targets: network shape mismatch");
  }
  std::vector<double> out(b * n);
  AgentNet::Cache ca, cc;
  std::array<double, kNumActions> lp{};
  for (std::size_t k = 0; k < b; ++k) {
    const double r = batch.rewards[k];
    double* t = out.data() + k * n;
    if (batch.terminal[k]) {
      std::fill(t, t + n, r);
      continue;
    }
    const auto s2 = batch.next_observation(k);
    actor.forward(s2, ca);
    log_softmax(ca.output(), lp);
    target_critic.forward(s2, cc);
    const auto q = cc.output();
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t a = 0; a < kNumActions; ++a) v += std::exp(lp[a]) * (q[a * n + j] - cfg.alpha * lp[a]);
      t[j] = r + cfg.gamma * v;
    }
  }
  return out;
}

LossResult critic_loss(const Batch& batch, const AgentNet& critic, std::span<const double> targets,
                       const AgentConfig& cfg) {
  const std::size_t n = cfg.n_quantiles, b = batch.size();
  if (b == 0) throw ValidationError("critic loss: empty batch");
  if (targets.size() != b * n || critic.output_size() != kNumActions * n) {
    throw ValidationError("critic loss: shape mismatch");
  }
  const auto taus = quantile_levels(n, cfg.midpoint_quantiles);
  LossResult res;
  res.grads.assign(critic.parameter_count(), 0.0);
  AgentNet::Cache cache;
  std::vector<double> upstream(kNumActions * n), g(n);
  const double inv_b = 1.0 / double(b);
  for (std::size_t k = 0; k < b; ++k) {
    critic.forward(batch.observation(k), cache);
    const std::size_t a = batch.actions[k];
    const auto pred = cache.output().subspan(a * n, n);
    res.loss += pinball_loss(pred, targets.subspan(k * n, n), taus, g, cfg.smoothed_pinball, cfg.huber_kappa);
    std::fill(upstream.begin(), upstream.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) upstream[a * n + i] = g[i] * inv_b;
    critic.backward(cache, upstream, res.grads);
  }
  res.loss *= inv_b;
  return res;
}

LossResult actor_loss(const Batch& batch, const AgentNet& actor, const AgentNet& critic, const AgentConfig& cfg) {
  const std::size_t n = cfg.n_quantiles, b = batch.size();
  if (b == 0) throw ValidationError("actor loss: empty batch");
  if (critic.output_size() != kNumActions * n || actor.output_size() != kNumActions) {
    throw ValidationError("actor loss: shape mismatch");
  }
  LossResult res;
  res.grads.assign(actor.parameter_count(), 0.0);
  AgentNet::Cache ca, cc;
  std::array<double, kNumActions> qbar{}, g{};
  const double inv_b = 1.0 / double(b);
  for (std::size_t k = 0; k < b; ++k) {
    const auto s = batch.observation(k);
    critic.forward(s, cc);
    const auto q = cc.output();
    for (std::size_t a = 0; a < kNumActions; ++a) {
      double m = 0.0;
      for (std::size_t j = 0; j < n; ++j) m += q[a * n + j];
      qbar[a] = m / double(n);
    }
    actor.forward(s, ca);
    res.loss += policy_objective(ca.output(), qbar, cfg.alpha, g);
    for (auto& v : g) v *= inv_b;
    actor.backward(ca, g, res.grads);
  }
  res.loss *= inv_b;
  return res;
}

void soft_update(AgentNet& target, const AgentNet& online, double mu) {
  if (target.parameter_count() != online.parameter_count()) throw ValidationError("soft update: shape mismatch");
  if (!(mu >= 0.0 && mu <= 1.0)) throw ValidationError("soft update: mu must be in [0, 1]");
  kernels::lerp(mu, online.parameters(), target.parameters());
}

std::size_t greedy_index(std::span<const double> values) {
  if (values.empty()) throw ValidationError("greedy: no values");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t act(const AgentNet& actor, std::span<const double> obs, ActMode mode, std::mt19937_64& rng) {
  for (double x : obs) {
    if (!std::isfinite(x)) throw ValidationError("act: non-finite observation");
  }
  thread_local AgentNet::Cache cache;
  actor.forward(obs, cache);
  const auto p = softmax(cache.output());
  if (mode == ActMode::Greedy) return greedy_index(p);
  const double u = double(rng() >> 11) * 0x1p-53;
  double c = 0.0;
  for (std::size_t a = 0; a + 1 < p.size(); ++a) {
    c += p[a];
    if (u < c) return a;
  }
  return p.size() - 1;
}

// ---------------------------------------------------------------- agent

DistSacAgent build_agent(AgentVariant variant, const ObservationLayout& layout, const AgentConfig& cfg,
                         std::uint64_t seed) {
  cfg.validate();
  std::size_t horizon = 4;
  if (variant == AgentVariant::WithForecast) {
    if (layout.size <= kBaseFeatures + 2) throw ValidationError("build_agent: with_forecast needs forecast inputs");
    horizon = layout.size - kBaseFeatures - 2;
  }
  if (!(layout == observation_layout(variant, horizon))) {
    throw ValidationError(std::string("build_agent: layout does not match variant ") + variant_name(variant));
  }
  DistSacAgent ag;
  ag.variant = variant;
  ag.cfg = cfg;
  const NetworkShape shape{layout.size, layout.encoder_inputs, cfg.hidden, cfg.embedding};
  ag.actor = AgentNet::random(shape, kNumActions, seed_stream(seed, 1));
  ag.critic = AgentNet::random(shape, kNumActions * cfg.n_quantiles, seed_stream(seed, 2));
  ag.target_critic = ag.critic;
  ag.actor_opt = AdamState(ag.actor.parameter_count(), cfg.lr_actor);
  ag.critic_opt = AdamState(ag.critic.parameter_count(), cfg.lr_critic);
  return ag;
}

TrainDiagnostics train_step(DistSacAgent& ag, const ReplayBuffer& buffer, std::mt19937_64& rng) {
  if (buffer.size() < ag.cfg.batch_size) throw ValidationError("train_step: buffer smaller than a batch");
  const Batch batch = buffer.sample(ag.cfg.batch_size, rng);
  TrainDiagnostics d;

  const auto targets = critic_targets(batch, ag.actor, ag.target_critic, ag.cfg);
  auto cl = critic_loss(batch, ag.critic, targets, ag.cfg);
  ag.critic_opt.apply(ag.critic.parameters(), cl.grads);
  d.critic_loss = cl.loss;

  auto al = actor_loss(batch, ag.actor, ag.critic, ag.cfg);
  ag.actor_opt.apply(ag.actor.parameters(), al.grads);
  d.actor_loss = al.loss;

  ++ag.updates;
  if (ag.updates % ag.cfg.target_update_every == 0) soft_update(ag.target_critic, ag.critic, ag.cfg.mu);

  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto p = softmax(ag.actor.forward(batch.observation(k)));
    for (double v : p) d.entropy -= v > 0.0 ? v * std::log(v) : 0.0;
  }
  d.entropy /= double(batch.size());
  return d;
}

// ---------------------------------------------------------------- persistence

namespace {

using nlohmann::json;

void save_net(const std::filesystem::path& dir, const std::string& name, const AgentNet& net,
              const CheckpointMeta& meta) {
  const std::size_t ne = net.encoder_parameter_count();
  auto write = [&](const std::string& file, const MlpLayout& layout, std::span<const double> params) {
    Mlp m(layout);
    std::copy(params.begin(), params.end(), m.parameters().begin());
    save_checkpoint(dir / file, m, meta);
  };
  if (net.stacked()) write(name + "_encoder.ckpt", net.encoder_layout(), net.parameters().first(ne));
  write(name + (net.stacked() ? "_head.ckpt" : ".ckpt"), net.head_layout(), net.parameters().subspan(ne));
}

AgentNet load_net(const std::filesystem::path& dir, const std::string& name, const NetworkShape& shape,
                  std::size_t outputs, CheckpointMeta* meta) {
  AgentNet net(shape, outputs);
  const std::size_t ne = net.encoder_parameter_count();
  auto read = [&](const std::string& file, const MlpLayout& layout, std::span<double> params) {
    const Mlp m = load_checkpoint(dir / file, meta);
    if (!(m.layout() == layout)) throw ValidationError("load_agent: " + file + " does not match agent.json");
    std::copy(m.parameters().begin(), m.parameters().end(), params.begin());
  };
  if (net.stacked()) read(name + "_encoder.ckpt", net.encoder_layout(), net.parameters().first(ne));
  read(name + (net.stacked() ? "_head.ckpt" : ".ckpt"), net.head_layout(), net.parameters().subspan(ne));
  return net;
}

}  // namespace

void save_agent(const std::filesystem::path& dir, const DistSacAgent& ag, const CheckpointMeta& meta) {
  std::filesystem::create_directories(dir);
  const auto& c = ag.cfg;
  const auto& s = ag.actor.shape();
  json j = {{"format", "imbal-agent-v1"},
            {"variant", variant_name(ag.variant)},
            {"seed", meta.seed},
            {"step", meta.step},
            {"updates", ag.updates},
            {"shape", {{"inputs", s.inputs}, {"encoder_inputs", s.encoder_inputs}, {"hidden", s.hidden},
                       {"embedding", s.embedding}}},
            {"config", {{"gamma", c.gamma}, {"n_quantiles", c.n_quantiles},
                        {"midpoint_quantiles", c.midpoint_quantiles}, {"mu", c.mu},
                        {"target_update_every", c.target_update_every}, {"alpha", c.alpha},
                        {"lr_actor", c.lr_actor}, {"lr_critic", c.lr_critic}, {"batch_size", c.batch_size},
                        {"buffer_capacity", c.buffer_capacity}, {"reward_scale", c.reward_scale},
                        {"smoothed_pinball", c.smoothed_pinball}, {"huber_kappa", c.huber_kappa},
                        {"hidden", c.hidden}, {"embedding", c.embedding}}}};
  save_net(dir, "actor", ag.actor, meta);
  save_net(dir, "critic", ag.critic, meta);
  save_net(dir, "target_critic", ag.target_critic, meta);
  std::ofstream out(dir / "agent.json");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_agent: cannot write " + (dir / "agent.json").string());
}

DistSacAgent load_agent(const std::filesystem::path& dir, CheckpointMeta* meta) {
  std::ifstream in(dir / "agent.json");
  if (!in) throw ValidationError("load_agent: missing " + (dir / "agent.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("load_agent: malformed agent.json: ") + e.what());
  }
  if (j.value("format", "") != "imbal-agent-v1") throw ValidationError("load_agent: unknown format");
  DistSacAgent ag;
  try {
    ag.variant = parse_variant(j.at("variant").get<std::string>());
    const auto& c = j.at("config");
    auto& k = ag.cfg;
    k.gamma = c.at("gamma");
    k.n_quantiles = c.at("n_quantiles");
    k.midpoint_quantiles = c.at("midpoint_quantiles");
    k.mu = c.at("mu");
    k.target_update_every = c.at("target_update_every");
    k.alpha = c.at("alpha");
    k.lr_actor = c.at("lr_actor");
    k.lr_critic = c.at("lr_critic");
    k.batch_size = c.at("batch_size");
    k.buffer_capacity = c.at("buffer_capacity");
    k.reward_scale = c.at("reward_scale");
    k.smoothed_pinball = c.at("smoothed_pinball");
    k.huber_kappa = c.at("huber_kappa");
    k.hidden = c.at("hidden");
    k.embedding = c.at("embedding");
    const auto& s = j.at("shape");
    const NetworkShape shape{s.at("inputs"), s.at("encoder_inputs"), s.at("hidden"), s.at("embedding")};
    ag.updates = j.at("updates");
    ag.actor = load_net(dir, "actor", shape, kNumActions, meta);
    ag.critic = load_net(dir, "critic", shape, kNumActions * k.n_quantiles, nullptr);
    ag.target_critic = load_net(dir, "target_critic", shape, kNumActions * k.n_quantiles, nullptr);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("load_agent: ") + e.what());
  }
  ag.cfg.validate();
  ag.actor_opt = AdamState(ag.actor.parameter_count(), ag.cfg.lr_actor);
  ag.critic_opt = AdamState(ag.critic.parameter_count(), ag.cfg.lr_critic);
  return ag;
}

}  // namespace imbal
