#include "miniaxie/config.hpp"

#include <cstdio>

#include <json.hpp>

#include "miniaxie/errors.hpp"

#include "blob_io.hpp"

namespace miniaxie {

using json = nlohmann::json;

PretrainOptions pretrain_options(const EmbeddingSettings& settings) {
  PretrainOptions options;
  options.latent_dim = settings.latent_dim;
  options.epochs = settings.epochs;
  options.batch_size = settings.batch_size;
  options.learning_rate = settings.learning_rate;
  options.f_hidden = settings.f_hidden;
  options.m_hidden = settings.m_hidden;
  return options;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ull;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x00000100000001B3ull;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

namespace {

std::string opponent_name(OpponentMode mode) {
  return mode == OpponentMode::kUniform ? "uniform" : "greedy";
}

OpponentMode opponent_from_name(const std::string& name) {
  if (name == "uniform") return OpponentMode::kUniform;
  if (name == "greedy") return OpponentMode::kGreedy;
  throw ConfigError("env.opponent must be \"uniform\" or \"greedy\", got \"" + name + "\"");
}

void reject_unknown(const json& section, const std::string& prefix,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, _] : section.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config key \"" + prefix + key + "\"");
  }
}

template <typename T>
void read_field(const json& section, const std::string& prefix, const char* key, T& into) {
  if (!section.contains(key)) return;
  try {
    into = section.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key \"" + prefix + key + "\" has the wrong type");
  }
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(detail::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
  reject_unknown(doc, "", {"env", "embedding", "agent", "arena", "seed", "out", "workers"});

  RunConfig config;
  if (doc.contains("env")) {
    const json& env = doc.at("env");
    reject_unknown(env, "env.",
                   {"team_a", "team_b", "round_limit", "discard_penalty", "opponent"});
    read_field(env, "env.", "team_a", config.team_a_file);
    read_field(env, "env.", "team_b", config.team_b_file);
    read_field(env, "env.", "round_limit", config.env.round_limit);
    read_field(env, "env.", "discard_penalty", config.env.discard_penalty);
    std::string opponent = opponent_name(config.env.opponent);
    read_field(env, "env.", "opponent", opponent);
    config.env.opponent = opponent_from_name(opponent);
  }
  if (doc.contains("embedding")) {
    const json& emb = doc.at("embedding");
    reject_unknown(emb, "embedding.",
                   {"latent_dim", "dataset_size", "epochs", "batch_size", "learning_rate",
                    "f_hidden", "m_hidden"});
    read_field(emb, "embedding.", "latent_dim", config.embedding.latent_dim);
    read_field(emb, "embedding.", "dataset_size", config.embedding.dataset_size);
    read_field(emb, "embedding.", "epochs", config.embedding.epochs);
    read_field(emb, "embedding.", "batch_size", config.embedding.batch_size);
    read_field(emb, "embedding.", "learning_rate", config.embedding.learning_rate);
    read_field(emb, "embedding.", "f_hidden", config.embedding.f_hidden);
    read_field(emb, "embedding.", "m_hidden", config.embedding.m_hidden);
  }
  if (doc.contains("agent")) {
    const json& agent = doc.at("agent");
    reject_unknown(agent, "agent.",
                   {"variant", "k", "c", "sigma", "epsilon", "actor_lr", "critic_lr",
                    "batch_size", "episodes_per_iteration", "update_passes", "checkpoint_every",
                    "actor_hidden", "critic_hidden", "total_steps"});
    std::string variant = variant_name(config.agent.variant);
    read_field(agent, "agent.", "variant", variant);
    config.agent.variant = variant_from_name(variant);
    read_field(agent, "agent.", "k", config.agent.k);
    read_field(agent, "agent.", "c", config.agent.c);
    read_field(agent, "agent.", "sigma", config.agent.sigma);
    read_field(agent, "agent.", "epsilon", config.agent.epsilon);
    read_field(agent, "agent.", "actor_lr", config.agent.actor_lr);
    read_field(agent, "agent.", "critic_lr", config.agent.critic_lr);
    read_field(agent, "agent.", "batch_size", config.agent.batch_size);
    read_field(agent, "agent.", "episodes_per_iteration", config.agent.episodes_per_iteration);
    read_field(agent, "agent.", "update_passes", config.agent.update_passes);
    read_field(agent, "agent.", "checkpoint_every", config.agent.checkpoint_every);
    read_field(agent, "agent.", "actor_hidden", config.agent.actor_hidden);
    read_field(agent, "agent.", "critic_hidden", config.agent.critic_hidden);
    read_field(agent, "agent.", "total_steps", config.total_steps);
  }
  if (doc.contains("arena")) {
    const json& arena = doc.at("arena");
    reject_unknown(arena, "arena.", {"opponent", "n_games", "keep_replays"});
    read_field(arena, "arena.", "opponent", config.arena.opponent);
    read_field(arena, "arena.", "n_games", config.arena.n_games);
    read_field(arena, "arena.", "keep_replays", config.arena.keep_replays);
  }
  read_field(doc, "", "seed", config.seed);
  read_field(doc, "", "out", config.out_dir);
  read_field(doc, "", "workers", config.workers);

  if (!config.team_a_file.empty()) config.env.team_a = load_team_file(config.team_a_file);
  if (!config.team_b_file.empty()) config.env.team_b = load_team_file(config.team_b_file);
  if (config.env.round_limit < 1) throw ConfigError("env.round_limit must be >= 1");
  if (config.env.discard_penalty < 0) throw ConfigError("env.discard_penalty must be >= 0");
  if (config.total_steps < 0) throw ConfigError("agent.total_steps must be >= 0");
  if (config.arena.n_games < 1) throw ConfigError("arena.n_games must be >= 1");
  if (config.workers < 1) throw ConfigError("workers must be >= 1");
  validate(config.agent);
  return config;
}

namespace {

json run_config_to_json(const RunConfig& config) {
  json doc;
  doc["env"] = {{"team_a", config.team_a_file},
                {"team_b", config.team_b_file},
                {"round_limit", config.env.round_limit},
                {"discard_penalty", config.env.discard_penalty},
                {"opponent", opponent_name(config.env.opponent)}};
  doc["embedding"] = {{"latent_dim", config.embedding.latent_dim},
                      {"dataset_size", config.embedding.dataset_size},
                      {"epochs", config.embedding.epochs},
                      {"batch_size", config.embedding.batch_size},
                      {"learning_rate", config.embedding.learning_rate},
                      {"f_hidden", config.embedding.f_hidden},
                      {"m_hidden", config.embedding.m_hidden}};
  doc["agent"] = {{"variant", variant_name(config.agent.variant)},
                  {"k", config.agent.k},
                  {"c", config.agent.c},
                  {"sigma", config.agent.sigma},
                  {"epsilon", config.agent.epsilon},
                  {"actor_lr", config.agent.actor_lr},
                  {"critic_lr", config.agent.critic_lr},
                  {"batch_size", config.agent.batch_size},
                  {"episodes_per_iteration", config.agent.episodes_per_iteration},
                  {"update_passes", config.agent.update_passes},
                  {"checkpoint_every", config.agent.checkpoint_every},
                  {"actor_hidden", config.agent.actor_hidden},
                  {"critic_hidden", config.agent.critic_hidden},
                  {"total_steps", config.total_steps}};
  doc["arena"] = {{"opponent", config.arena.opponent},
                  {"n_games", config.arena.n_games},
                  {"keep_replays", config.arena.keep_replays}};
  doc["seed"] = config.seed;
  doc["out"] = config.out_dir;
  doc["workers"] = config.workers;
  return doc;
}

}  // namespace

std::string run_config_text(const RunConfig& config) {
  return run_config_to_json(config).dump(2);  // object keys are already sorted
}

std::uint64_t config_digest(const RunConfig& config) {
  return fnv1a(run_config_to_json(config).dump());
}

void write_manifest(const std::string& path, const std::string& command,
                    const RunConfig& config, const std::vector<ArtifactRef>& artifacts) {
  json doc;
  doc["command"] = command;
  doc["config"] = run_config_to_json(config);
  doc["config_digest"] = hex64(config_digest(config));
  doc["env_digest"] = hex64(env_digest(config.env));
  doc["seed"] = config.seed;
  doc["formats"] = {{"network", 1}, {"dataset", 1}, {"embedding", 1}, {"agent", 1}};
  json arts = json::object();
  for (const ArtifactRef& artifact : artifacts) {
    arts[artifact.name] = {{"path", artifact.path},
                           {"fnv64", hex64(fnv1a(detail::read_file(artifact.path)))}};
  }
  doc["artifacts"] = arts;
  detail::write_file(path, doc.dump(2) + "\n");
}

}  // namespace miniaxie
