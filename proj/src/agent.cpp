#include "miniaxie/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "miniaxie/errors.hpp"

#include "blob_io.hpp"

namespace miniaxie {

std::string variant_name(AgentVariant variant) {
  switch (variant) {
    case AgentVariant::kLatentRetrieval: return "latent-retrieval";
    case AgentVariant::kFullEval: return "full-eval";
    case AgentVariant::kFullEvalPooling: return "full-eval-pooling";
  }
  throw UsageError("unknown agent variant code");
}

AgentVariant variant_from_name(const std::string& name) {
  if (name == "latent-retrieval") return AgentVariant::kLatentRetrieval;
  if (name == "full-eval") return AgentVariant::kFullEval;
  if (name == "full-eval-pooling") return AgentVariant::kFullEvalPooling;
  throw ConfigError("unknown agent variant '" + name + "'");
}

CriticEncoding critic_encoding(AgentVariant variant) {
  switch (variant) {
    case AgentVariant::kLatentRetrieval: return CriticEncoding::kMatrix;
    case AgentVariant::kFullEval: return CriticEncoding::kDouzero;
    case AgentVariant::kFullEvalPooling: return CriticEncoding::kDouzeroPooled;
  }
  throw UsageError("unknown agent variant code");
}

int critic_action_dim(CriticEncoding encoding) {
  switch (encoding) {
    case CriticEncoding::kMatrix: return kActionDim;
    case CriticEncoding::kDouzero: return kDouzeroDim;
    case CriticEncoding::kDouzeroPooled: return kDouzeroDim / 2;
  }
  throw UsageError("unknown critic encoding code");
}

std::vector<double> max_pool_1d(std::span<const double> x, int window, int stride) {
  if (window < 1 || stride < 1) throw UsageError("max_pool_1d: window and stride must be >= 1");
  if (x.size() < static_cast<std::size_t>(window)) throw UsageError("max_pool_1d: input too short");
  std::vector<double> out;
  for (std::size_t begin = 0; begin + window <= x.size(); begin += static_cast<std::size_t>(stride)) {
    double best = x[begin];
    for (int j = 1; j < window; ++j) best = std::max(best, x[begin + static_cast<std::size_t>(j)]);
    out.push_back(best);
  }
  return out;
}

std::vector<double> critic_action_input(CriticEncoding encoding, const FlatAction& executed) {
  switch (encoding) {
    case CriticEncoding::kMatrix:
      return {executed.begin(), executed.end()};
    case CriticEncoding::kDouzero:
      // rows 0-1 of the 6x12 matrix are exactly the first 24 flat entries
      return {executed.begin(), executed.begin() + kDouzeroDim};
    case CriticEncoding::kDouzeroPooled:
      return max_pool_1d({executed.data(), kDouzeroDim}, 2, 2);
  }
  throw UsageError("unknown critic encoding code");
}

void validate(const AgentConfig& config) {
  if (config.k < 1) throw ConfigError("agent k must be >= 1");
  if (config.c < 0) throw ConfigError("discard penalty c must be >= 0");
  if (config.sigma < 0) throw ConfigError("exploration sigma must be >= 0");
  if (config.epsilon < 0 || config.epsilon > 1) throw ConfigError("epsilon must lie in [0, 1]");
  if (config.actor_lr <= 0 || config.critic_lr <= 0) throw ConfigError("learning rates must be > 0");
  if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (config.episodes_per_iteration < 1) throw ConfigError("episodes per iteration must be >= 1");
  if (config.update_passes < 1) throw ConfigError("update passes must be >= 1");
  if (config.checkpoint_every < 1) throw ConfigError("checkpoint interval must be >= 1");
}

FlatAction raw_action(const Network& actor, const StateFeatures& s) {
  if (actor.input_dim() != kStateFeatureDim || actor.output_dim() != kActionDim)
    throw UsageError("actor must map state features to the 72-dim action encoding");
  std::vector<double> out = actor.forward(s);
  FlatAction raw;
  std::copy(out.begin(), out.end(), raw.begin());
  return raw;
}

std::size_t select_among(const StateFeatures& s, const CandidateSet& set,
                         std::span<const double> raw_latent, const Network& critic, int k) {
  if (critic.input_dim() != kStateFeatureDim + kActionDim || critic.output_dim() != 1)
    throw UsageError("latent-retrieval critic must map state ++ 72-dim action to a scalar");
  std::vector<Neighbor> nearest = topk(set, raw_latent, k);

  Matrix inputs(static_cast<Eigen::Index>(nearest.size()), kStateFeatureDim + kActionDim);
  for (std::size_t r = 0; r < nearest.size(); ++r) {
    auto row = static_cast<Eigen::Index>(r);
    for (int j = 0; j < kStateFeatureDim; ++j) inputs(row, j) = s[static_cast<std::size_t>(j)];
    const FlatAction& enc = set.encodings[nearest[r].index];
    for (int j = 0; j < kActionDim; ++j) inputs(row, kStateFeatureDim + j) = enc[static_cast<std::size_t>(j)];
  }
  Matrix q = critic.forward_batch(inputs);

  std::size_t best = nearest[0].index;
  double best_q = q(0, 0);
  for (std::size_t r = 1; r < nearest.size(); ++r) {
    double qr = q(static_cast<Eigen::Index>(r), 0);
    std::size_t idx = nearest[r].index;
    if (qr > best_q || (qr == best_q && idx < best)) {
      best_q = qr;
      best = idx;
    }
  }
  return best;
}

RoundAction select(const StateFeatures& s, std::vector<RoundAction> legal, const Network& actor,
                   const Network& f, const Network& critic, int k) {
  CandidateSet set = build_candidates(std::move(legal), f);
  FlatAction raw = raw_action(actor, s);
  LatentAction raw_latent = f.forward(raw);
  return set.actions[select_among(s, set, raw_latent, critic, k)];
}

ExploreResult explore_action(const StateFeatures& s, std::vector<RoundAction> legal,
                             const Network& actor, const Network& f, const Network& critic,
                             const AgentConfig& config, SplitMix64& rng) {
  if (legal.empty()) throw UsageError("explore_action: empty legal set");
  if (rng.uniform_double() < config.epsilon) {
    const RoundAction& pick = legal[rng.uniform_int(legal.size())];
    ExploreResult out{pick, flatten(encode(pick))};
    return out;
  }
  FlatAction raw = raw_action(actor, s);
  if (config.sigma > 0)
    for (double& v : raw) v += config.sigma * rng.gaussian();
  CandidateSet set = build_candidates(std::move(legal), f);
  LatentAction raw_latent = f.forward(raw);
  std::size_t idx = select_among(s, set, raw_latent, critic, config.k);
  return {set.actions[idx], raw};
}

std::vector<double> mc_returns(const EpisodeBuffer& episode) {
  if (episode.steps.empty() || !episode.steps.back().done)
    throw UsageError("mc_returns: episode is not complete");
  double g = 0.0;
  for (const StepRecord& step : episode.steps) g += step.reward;
  return std::vector<double>(episode.steps.size(), g);
}

double critic_update(Network& critic, AdamState& opt, std::span<const CriticExample> batch) {
  if (batch.empty()) throw UsageError("critic_update: empty batch");
  auto action_dim = batch.front().a.size();
  if (critic.input_dim() != kStateFeatureDim + static_cast<int>(action_dim) ||
      critic.output_dim() != 1)
    throw UsageError("critic_update: critic dimensions do not match the batch");

  auto rows = static_cast<Eigen::Index>(batch.size());
  Matrix inputs(rows, critic.input_dim());
  Matrix targets(rows, 1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const CriticExample& ex = batch[static_cast<std::size_t>(r)];
    if (ex.a.size() != action_dim) throw UsageError("critic_update: ragged action encodings");
    for (int j = 0; j < kStateFeatureDim; ++j) inputs(r, j) = ex.s[static_cast<std::size_t>(j)];
    for (std::size_t j = 0; j < action_dim; ++j)
      inputs(r, kStateFeatureDim + static_cast<Eigen::Index>(j)) = ex.a[j];
    targets(r, 0) = ex.target;
  }

  Matrix residual = critic.forward_batch(inputs) - targets;
  double loss = residual.squaredNorm() / static_cast<double>(rows);
  if (!std::isfinite(loss)) throw TrainingError("critic loss diverged");
  Matrix upstream = residual * (2.0 / static_cast<double>(rows));
  BackwardResult back = critic.backward_batch(inputs, upstream);
  opt_step(opt, critic.params(), back.param_grad);
  return loss;
}

namespace {

Matrix stack_states(std::span<const StateFeatures> states) {
  Matrix s(static_cast<Eigen::Index>(states.size()), kStateFeatureDim);
  for (Eigen::Index r = 0; r < s.rows(); ++r)
    for (int j = 0; j < kStateFeatureDim; ++j)
      s(r, j) = states[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
  return s;
}

void ascend(Network& actor, AdamState& opt, std::vector<double> objective_grad) {
  for (double& g : objective_grad) g = -g;  // the optimizer minimizes
  opt_step(opt, actor.params(), objective_grad);
}

}  // namespace

double actor_update(Network& actor, AdamState& opt, const ActionValueFn& critic,
                    std::span<const StateFeatures> states) {
  if (states.empty()) throw UsageError("actor_update: empty state batch");
  Matrix s = stack_states(states);
  Matrix raw = actor.forward_batch(s);
  double inv_n = 1.0 / static_cast<double>(states.size());

  double objective = 0.0;
  Matrix upstream(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    std::span<const double> sr{states[static_cast<std::size_t>(r)]};
    std::span<const double> ar{raw.data() + r * raw.cols(), static_cast<std::size_t>(raw.cols())};
    objective += critic.value(sr, ar) * inv_n;
    std::vector<double> g = critic.grad(sr, ar);
    if (g.size() != static_cast<std::size_t>(raw.cols()))
      throw UsageError("actor_update: critic gradient dimension mismatch");
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
      upstream(r, j) = g[static_cast<std::size_t>(j)] * inv_n;
  }
  if (!std::isfinite(objective)) throw TrainingError("actor objective diverged");
  BackwardResult back = actor.backward_batch(s, upstream);
  ascend(actor, opt, std::move(back.param_grad));
  return objective;
}

double actor_update(Network& actor, AdamState& opt, const Network& critic,
                    std::span<const StateFeatures> states) {
  if (states.empty()) throw UsageError("actor_update: empty state batch");
  if (critic.input_dim() != kStateFeatureDim + actor.output_dim() || critic.output_dim() != 1)
    throw UsageError("actor_update: critic does not consume state ++ actor output");
  Matrix s = stack_states(states);
  Matrix raw = actor.forward_batch(s);
  Matrix inputs(s.rows(), s.cols() + raw.cols());
  inputs << s, raw;

  Matrix q = critic.forward_batch(inputs);
  double inv_n = 1.0 / static_cast<double>(states.size());
  double objective = q.sum() * inv_n;
  if (!std::isfinite(objective)) throw TrainingError("actor objective diverged");

  Matrix ones = Matrix::Constant(q.rows(), 1, inv_n);
  BackwardResult critic_back = critic.backward_batch(inputs, ones);
  Matrix upstream = critic_back.input_grad.rightCols(raw.cols());
  BackwardResult actor_back = actor.backward_batch(s, upstream);
  ascend(actor, opt, std::move(actor_back.param_grad));
  return objective;
}

RoundAction select_full_eval(const StateFeatures& s, std::span<const RoundAction> legal,
                             const Network& critic, CriticEncoding encoding, std::size_t cap) {
  if (legal.empty()) throw UsageError("select_full_eval: empty legal set");
  if (legal.size() > cap)
    throw EnumerationOverflowError("select_full_eval: " + std::to_string(legal.size()) +
                                   " legal actions exceed the cap of " + std::to_string(cap));
  int action_dim = critic_action_dim(encoding);
  if (critic.input_dim() != kStateFeatureDim + action_dim || critic.output_dim() != 1)
    throw UsageError("select_full_eval: critic dimensions do not match the encoding");

  Matrix inputs(static_cast<Eigen::Index>(legal.size()), critic.input_dim());
  for (std::size_t i = 0; i < legal.size(); ++i) {
    auto row = static_cast<Eigen::Index>(i);
    for (int j = 0; j < kStateFeatureDim; ++j) inputs(row, j) = s[static_cast<std::size_t>(j)];
    std::vector<double> enc = critic_action_input(encoding, flatten(encode(legal[i])));
    for (int j = 0; j < action_dim; ++j)
      inputs(row, kStateFeatureDim + j) = enc[static_cast<std::size_t>(j)];
  }
  Matrix q = critic.forward_batch(inputs);
  Eigen::Index best = 0;
  for (Eigen::Index r = 1; r < q.rows(); ++r)
    if (q(r, 0) > q(best, 0)) best = r;  // ties keep the earlier (canonical) action
  return legal[static_cast<std::size_t>(best)];
}

namespace {

EpisodeBuffer play_episode(const EnvConfig& env, const AgentConfig& config, const Network& critic,
                           const Network* actor, const Network* f, CriticEncoding encoding,
                           std::uint64_t game_seed, std::uint64_t explore_seed) {
  EpisodeBuffer episode;
  GameState state = new_game(env, game_seed);
  SplitMix64 rng(explore_seed);
  const bool latent = actor != nullptr;
  while (!state.terminal) {
    std::vector<RoundAction> legal = enumerate_actions(state);
    StepRecord record;
    record.s = featurize(state);
    RoundAction action;
    if (latent) {
      ExploreResult er = explore_action(record.s, std::move(legal), *actor, *f, critic, config, rng);
      action = std::move(er.action);
      record.raw = er.raw;
    } else {
      if (rng.uniform_double() < config.epsilon)
        action = legal[rng.uniform_int(legal.size())];
      else
        action = select_full_eval(record.s, legal, critic, encoding);
      record.raw = flatten(encode(action));
    }
    record.executed = flatten(encode(action));
    StepResult sr = step(state, action);
    record.reward = sr.reward;
    record.done = sr.done;
    episode.episode_return += sr.reward;
    episode.steps.push_back(std::move(record));
    state = std::move(sr.state);
  }
  return episode;
}

}  // namespace

TrainResult train(const EnvConfig& env_config, const AgentConfig& config, long long total_steps,
                  const Network* embedding, std::uint64_t seed, const TrainHooks& hooks) {
  validate(config);
  if (total_steps < 0) throw UsageError("train: total_steps must be >= 0");
  const bool latent = config.variant == AgentVariant::kLatentRetrieval;
  if (latent) {
    if (embedding == nullptr)
      throw ConfigError("latent-retrieval training requires a pretrained embedding");
    if (embedding->input_dim() != kActionDim)
      throw ConfigError("embedding network does not consume the 72-dim action encoding");
  }
  EnvConfig env = env_config;
  env.discard_penalty = config.c;

  CriticEncoding encoding = critic_encoding(config.variant);
  SplitMix64 init_rng(mix_seed(seed, 0));

  std::vector<int> critic_dims{kStateFeatureDim + critic_action_dim(encoding)};
  critic_dims.insert(critic_dims.end(), config.critic_hidden.begin(), config.critic_hidden.end());
  critic_dims.push_back(1);
  std::vector<Activation> critic_acts(critic_dims.size() - 1, Activation::kRectifier);
  critic_acts.back() = Activation::kIdentity;

  std::optional<Network> actor;
  Network critic = Network::glorot(std::move(critic_dims), std::move(critic_acts), init_rng);
  if (latent) {
    std::vector<int> actor_dims{kStateFeatureDim};
    actor_dims.insert(actor_dims.end(), config.actor_hidden.begin(), config.actor_hidden.end());
    actor_dims.push_back(kActionDim);
    std::vector<Activation> actor_acts(actor_dims.size() - 1, Activation::kTanh);
    actor_acts.back() = Activation::kIdentity;
    actor = Network::glorot(std::move(actor_dims), std::move(actor_acts), init_rng);
  }

  TrainResult result{std::move(critic), std::move(actor), {}, 0};
  AdamState critic_opt = make_adam(result.critic.param_count(), config.critic_lr);
  AdamState actor_opt =
      result.actor ? make_adam(result.actor->param_count(), config.actor_lr) : make_adam(0, 1.0);

  auto checkpoint = [&](int iteration) {
    if (hooks.on_checkpoint)
      hooks.on_checkpoint(iteration, result.critic, result.actor ? &*result.actor : nullptr);
  };
  checkpoint(0);

  auto started = std::chrono::steady_clock::now();
  SplitMix64 shuffle_rng(mix_seed(seed, 1));
  std::uint64_t episode_counter = 0;
  int iteration = 0;

  while (result.env_steps < total_steps) {
    ++iteration;

    std::vector<EpisodeBuffer> episodes;
    episodes.reserve(static_cast<std::size_t>(config.episodes_per_iteration));
    for (int e = 0; e < config.episodes_per_iteration; ++e, ++episode_counter) {
      episodes.push_back(play_episode(env, config, result.critic,
                                      result.actor ? &*result.actor : nullptr, embedding, encoding,
                                      mix_seed(seed, 10 + 2 * episode_counter),
                                      mix_seed(seed, 11 + 2 * episode_counter)));
    }

    double return_sum = 0.0;
    std::vector<CriticExample> examples;
    std::vector<StateFeatures> states;
    for (const EpisodeBuffer& episode : episodes) {
      return_sum += episode.episode_return;
      std::vector<double> targets = mc_returns(episode);
      for (std::size_t i = 0; i < episode.steps.size(); ++i) {
        const StepRecord& step = episode.steps[i];
        examples.push_back(
            {step.s, critic_action_input(encoding, step.executed), targets[i]});
        states.push_back(step.s);
      }
    }
    result.env_steps += static_cast<long long>(examples.size());

    // Pre-update mean critic prediction on the executed pairs.
    double q_sum = 0.0;
    {
      Matrix inputs(static_cast<Eigen::Index>(examples.size()), result.critic.input_dim());
      for (std::size_t i = 0; i < examples.size(); ++i) {
        auto row = static_cast<Eigen::Index>(i);
        for (int j = 0; j < kStateFeatureDim; ++j)
          inputs(row, j) = examples[i].s[static_cast<std::size_t>(j)];
        for (std::size_t j = 0; j < examples[i].a.size(); ++j)
          inputs(row, kStateFeatureDim + static_cast<Eigen::Index>(j)) = examples[i].a[j];
      }
      q_sum = result.critic.forward_batch(inputs).sum();
    }

    auto batch_size = static_cast<std::size_t>(config.batch_size);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (int pass = 0; pass < config.update_passes; ++pass) {
      shuffle(order, shuffle_rng);
      for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
        std::size_t len = std::min(batch_size, order.size() - begin);
        std::vector<CriticExample> batch(len);
        for (std::size_t i = 0; i < len; ++i) batch[i] = examples[order[begin + i]];
        loss_sum += critic_update(result.critic, critic_opt, batch) * static_cast<double>(len);
        loss_count += len;
      }
    }

    if (result.actor) {
      for (int pass = 0; pass < config.update_passes; ++pass) {
        shuffle(order, shuffle_rng);
        for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
          std::size_t len = std::min(batch_size, order.size() - begin);
          std::vector<StateFeatures> batch(len);
          for (std::size_t i = 0; i < len; ++i) batch[i] = states[order[begin + i]];
          actor_update(*result.actor, actor_opt, result.critic, batch);
        }
      }
    }

    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    IterationMetrics metrics{iteration, result.env_steps,
                             return_sum / static_cast<double>(episodes.size()),
                             loss_sum / static_cast<double>(loss_count),
                             q_sum / static_cast<double>(examples.size()), elapsed};
    result.metrics.push_back(metrics);
    if (hooks.on_metrics) hooks.on_metrics(metrics);
    if (iteration % config.checkpoint_every == 0) checkpoint(iteration);
  }

  if (iteration > 0 && iteration % config.checkpoint_every != 0) checkpoint(iteration);
  return result;
}

namespace {

constexpr char kAgentMagic[4] = {'M', 'X', 'A', 'G'};
constexpr std::uint32_t kAgentVersion = 1;

}  // namespace

void save_agent_checkpoint(const AgentCheckpoint& ckpt, const std::string& path) {
  std::string out;
  out.append(kAgentMagic, sizeof(kAgentMagic));
  detail::put<std::uint32_t>(out, kAgentVersion);
  detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(ckpt.variant));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.k));
  detail::put<std::uint64_t>(out, ckpt.env_digest);
  detail::put<std::uint64_t>(out, ckpt.config_digest);
  std::uint8_t flags = (ckpt.actor ? 1 : 0) | (ckpt.embedding ? 2 : 0);
  detail::put<std::uint8_t>(out, flags);
  append_blob(out, save_params(ckpt.critic));
  if (ckpt.actor) append_blob(out, save_params(*ckpt.actor));
  if (ckpt.embedding) append_blob(out, save_params(*ckpt.embedding));
  detail::write_file(path, out);
}

AgentCheckpoint load_agent_checkpoint(const std::string& path) {
  std::string raw = detail::read_file(path);
  std::string_view data = raw;
  if (data.size() < sizeof(kAgentMagic) ||
      std::memcmp(data.data(), kAgentMagic, sizeof(kAgentMagic)) != 0)
    throw CheckpointError(path + ": not an agent checkpoint");
  data.remove_prefix(sizeof(kAgentMagic));
  auto version = detail::get<std::uint32_t>(data, "agent checkpoint version");
  if (version != kAgentVersion)
    throw CheckpointError(path + ": unsupported agent checkpoint version");
  auto variant_code = detail::get<std::uint8_t>(data, "agent variant");
  if (variant_code > 2) throw CheckpointError(path + ": unknown agent variant code");
  auto k = static_cast<int>(detail::get<std::uint32_t>(data, "retrieval width"));
  auto env_dig = detail::get<std::uint64_t>(data, "env digest");
  auto config_dig = detail::get<std::uint64_t>(data, "config digest");
  auto flags = detail::get<std::uint8_t>(data, "content flags");

  Network critic = read_network(take_blob(data, "critic"));
  std::optional<Network> actor;
  std::optional<Network> embedding;
  if (flags & 1) actor = read_network(take_blob(data, "actor"));
  if (flags & 2) embedding = read_network(take_blob(data, "embedding"));

  AgentCheckpoint ckpt{static_cast<AgentVariant>(variant_code), k,
                       env_dig, config_dig,
                       std::move(critic), std::move(actor), std::move(embedding)};
  if (ckpt.variant == AgentVariant::kLatentRetrieval && (!ckpt.actor || !ckpt.embedding))
    throw CheckpointError(path + ": latent-retrieval checkpoint is missing actor or embedding");
  return ckpt;
}

std::string metrics_header() {
  return "iteration,env_steps,mean_return,critic_loss,mean_q,wall_clock_ms";
}

std::string metrics_row(const IterationMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%lld,%.17g,%.17g,%.17g,%lld", m.iteration, m.env_steps,
                m.mean_return, m.critic_loss, m.mean_q, m.wall_clock_ms);
  return buf;
}

}  // namespace miniaxie
