#include "miniaxie/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "miniaxie/errors.hpp"

#include "blob_io.hpp"

namespace miniaxie {

TransitionDataset collect_random_transitions(const EnvConfig& config,
                                             std::size_t n_transitions, std::uint64_t seed) {
  if (n_transitions == 0) throw UsageError("collect_random_transitions: n_transitions must be > 0");
  TransitionDataset dataset;
  dataset.seed = seed;
  dataset.env_digest = env_digest(config);
  dataset.records.reserve(n_transitions);

  std::uint64_t episode = 0;
  while (dataset.records.size() < n_transitions) {
    GameState state = new_game(config, mix_seed(seed, 2 * episode));
    SplitMix64 pick(mix_seed(seed, 2 * episode + 1));
    while (!state.terminal && dataset.records.size() < n_transitions) {
      std::vector<RoundAction> legal = enumerate_actions(state);
      const RoundAction& action = legal[pick.uniform_int(legal.size())];
      TransitionRecord rec;
      rec.s = featurize(state);
      rec.a = flatten(encode(action));
      StepResult step_result = step(state, action);
      rec.s_next = featurize(step_result.state);
      dataset.records.push_back(std::move(rec));
      state = std::move(step_result.state);
    }
    ++episode;
  }
  return dataset;
}

namespace {

// Stacks the selected records into (state | action | next-state) matrices.
struct BatchMatrices {
  Matrix s;
  Matrix a;
  Matrix s_next;
};

BatchMatrices stack(std::span<const TransitionRecord> records,
                    std::span<const std::size_t> indices) {
  auto rows = static_cast<Eigen::Index>(indices.size());
  BatchMatrices out{Matrix(rows, kStateFeatureDim), Matrix(rows, kActionDim),
                    Matrix(rows, kStateFeatureDim)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    const TransitionRecord& rec = records[indices[static_cast<std::size_t>(r)]];
    for (int j = 0; j < kStateFeatureDim; ++j) out.s(r, j) = rec.s[static_cast<std::size_t>(j)];
    for (int j = 0; j < kActionDim; ++j) out.a(r, j) = rec.a[static_cast<std::size_t>(j)];
    for (int j = 0; j < kStateFeatureDim; ++j)
      out.s_next(r, j) = rec.s_next[static_cast<std::size_t>(j)];
  }
  return out;
}

void check_dims(const Network& f, const Network& m) {
  if (f.input_dim() != kActionDim)
    throw UsageError("embedding network expects input dim " + std::to_string(kActionDim));
  if (m.input_dim() != kStateFeatureDim + f.output_dim())
    throw UsageError("transition model input dim must be state dim + latent dim");
  if (m.output_dim() != kStateFeatureDim)
    throw UsageError("transition model must predict state features");
}

// Residuals (prediction - target) along with the concatenated model input.
struct ForwardPass {
  Matrix model_input;  // s ++ f(a)
  Matrix residual;
};

ForwardPass j1_forward(const Network& f, const Network& m, const BatchMatrices& batch) {
  Matrix latent = f.forward_batch(batch.a);
  Matrix input(batch.s.rows(), batch.s.cols() + latent.cols());
  input << batch.s, latent;
  Matrix prediction = m.forward_batch(input);
  return {std::move(input), prediction - batch.s_next};
}

double loss_from_residual(const Matrix& residual) {
  return residual.squaredNorm() /
         static_cast<double>(residual.rows() * residual.cols());
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

// Chunked full-set evaluation so 50k-record datasets never materialize one
// giant matrix.
double eval_loss(const Network& f, const Network& m,
                 std::span<const TransitionRecord> records,
                 std::span<const std::size_t> indices) {
  constexpr std::size_t kChunk = 8192;
  double total_sq = 0.0;
  for (std::size_t begin = 0; begin < indices.size(); begin += kChunk) {
    std::size_t len = std::min(kChunk, indices.size() - begin);
    ForwardPass pass = j1_forward(f, m, stack(records, indices.subspan(begin, len)));
    total_sq += pass.residual.squaredNorm();
  }
  return total_sq / static_cast<double>(indices.size() * kStateFeatureDim);
}

}  // namespace

double j1_loss(const Network& f, const Network& m, std::span<const TransitionRecord> batch) {
  if (batch.empty()) throw UsageError("j1_loss: empty batch");
  check_dims(f, m);
  ForwardPass pass = j1_forward(f, m, stack(batch, all_indices(batch.size())));
  return loss_from_residual(pass.residual);
}

J1Gradients j1_gradients(const Network& f, const Network& m,
                         std::span<const TransitionRecord> batch) {
  if (batch.empty()) throw UsageError("j1_gradients: empty batch");
  check_dims(f, m);
  BatchMatrices mats = stack(batch, all_indices(batch.size()));
  ForwardPass pass = j1_forward(f, m, mats);

  J1Gradients out;
  out.loss = loss_from_residual(pass.residual);
  Matrix upstream =
      pass.residual * (2.0 / static_cast<double>(pass.residual.rows() * pass.residual.cols()));
  BackwardResult m_back = m.backward_batch(pass.model_input, upstream);
  out.m_grad = std::move(m_back.param_grad);

  // Only the latent columns of the model input flow back into f.
  Matrix latent_upstream =
      m_back.input_grad.rightCols(f.output_dim());
  BackwardResult f_back = f.backward_batch(mats.a, latent_upstream);
  out.f_grad = std::move(f_back.param_grad);
  return out;
}

PretrainResult pretrain(const TransitionDataset& dataset, const PretrainOptions& options,
                        std::uint64_t seed) {
  if (dataset.records.empty()) throw UsageError("pretrain: empty dataset");
  if (options.epochs < 0) throw UsageError("pretrain: negative epoch count");
  if (options.batch_size < 1) throw UsageError("pretrain: batch_size must be >= 1");
  if (options.latent_dim < 1 || options.latent_dim >= kActionDim)
    throw UsageError("pretrain: latent dim must be in [1, 72)");

  std::vector<int> f_dims{kActionDim};
  f_dims.insert(f_dims.end(), options.f_hidden.begin(), options.f_hidden.end());
  f_dims.push_back(options.latent_dim);
  std::vector<Activation> f_acts(f_dims.size() - 1, Activation::kTanh);
  f_acts.back() = Activation::kIdentity;

  std::vector<int> m_dims{kStateFeatureDim + options.latent_dim};
  m_dims.insert(m_dims.end(), options.m_hidden.begin(), options.m_hidden.end());
  m_dims.push_back(kStateFeatureDim);
  std::vector<Activation> m_acts(m_dims.size() - 1, Activation::kTanh);
  m_acts.back() = Activation::kIdentity;

  SplitMix64 init_rng(mix_seed(seed, 0));
  Network f = Network::glorot(std::move(f_dims), std::move(f_acts), init_rng);
  Network m = Network::glorot(std::move(m_dims), std::move(m_acts), init_rng);

  // Seeded 90/10 split.
  std::vector<std::size_t> order = all_indices(dataset.records.size());
  SplitMix64 split_rng(mix_seed(seed, 1));
  shuffle(order, split_rng);
  std::size_t holdout_count =
      dataset.records.size() >= 2
          ? std::clamp<std::size_t>(dataset.records.size() / 10, 1, dataset.records.size() - 1)
          : 0;
  std::vector<std::size_t> holdout(order.begin(),
                                   order.begin() + static_cast<std::ptrdiff_t>(holdout_count));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(holdout_count),
                                 order.end());
  if (holdout.empty()) holdout = train;  // single-record degenerate case

  PretrainResult result{std::move(f), std::move(m), {}};
  auto evaluate = [&](int epoch) {
    result.history.push_back({epoch, eval_loss(result.f, result.m, dataset.records, train),
                              eval_loss(result.f, result.m, dataset.records, holdout)});
  };
  evaluate(0);

  AdamState f_opt = make_adam(result.f.param_count(), options.learning_rate);
  AdamState m_opt = make_adam(result.m.param_count(), options.learning_rate);
  SplitMix64 epoch_rng(mix_seed(seed, 2));
  auto batch_size = static_cast<std::size_t>(options.batch_size);

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    shuffle(train, epoch_rng);
    int batch_index = 0;
    for (std::size_t begin = 0; begin < train.size(); begin += batch_size, ++batch_index) {
      std::size_t len = std::min(batch_size, train.size() - begin);
      std::vector<TransitionRecord> batch(len);
      for (std::size_t i = 0; i < len; ++i) batch[i] = dataset.records[train[begin + i]];
      J1Gradients grads = j1_gradients(result.f, result.m, batch);
      if (!std::isfinite(grads.loss))
        throw TrainingError("J1 diverged at epoch " + std::to_string(epoch) + " batch " +
                            std::to_string(batch_index));
      opt_step(f_opt, result.f.params(), grads.f_grad);
      opt_step(m_opt, result.m.params(), grads.m_grad);
    }
    evaluate(epoch);
  }
  return result;
}

LatentAction embed(const Network& f, const FlatAction& a) {
  if (f.input_dim() != kActionDim)
    throw UsageError("embed: network input dim " + std::to_string(f.input_dim()) +
                     " does not match action dim");
  return f.forward(a);
}

namespace {

constexpr char kDatasetMagic[4] = {'M', 'X', 'D', 'S'};
constexpr std::uint32_t kDatasetVersion = 1;
constexpr char kEmbeddingMagic[4] = {'M', 'X', 'E', 'C'};
constexpr std::uint32_t kEmbeddingVersion = 1;

}  // namespace

void save_dataset(const TransitionDataset& dataset, const std::string& path) {
  std::string out;
  out.append(kDatasetMagic, sizeof(kDatasetMagic));
  detail::put<std::uint32_t>(out, kDatasetVersion);
  detail::put<std::uint64_t>(out, dataset.records.size());
  detail::put<std::uint32_t>(out, kStateFeatureDim);
  detail::put<std::uint32_t>(out, kActionDim);
  detail::put<std::uint32_t>(out, kStateFeatureDim);
  detail::put<std::uint64_t>(out, dataset.seed);
  detail::put<std::uint64_t>(out, dataset.env_digest);
  for (const TransitionRecord& rec : dataset.records) {
    out.append(reinterpret_cast<const char*>(rec.s.data()), sizeof(rec.s));
    out.append(reinterpret_cast<const char*>(rec.a.data()), sizeof(rec.a));
    out.append(reinterpret_cast<const char*>(rec.s_next.data()), sizeof(rec.s_next));
  }
  detail::write_file(path, out);
}

TransitionDataset load_dataset(const std::string& path) {
  std::string raw = detail::read_file(path);
  std::string_view data = raw;
  if (data.size() < sizeof(kDatasetMagic) ||
      std::memcmp(data.data(), kDatasetMagic, sizeof(kDatasetMagic)) != 0)
    throw ParseError(path + ": not a transition dataset file");
  data.remove_prefix(sizeof(kDatasetMagic));
  auto version = detail::get<std::uint32_t, ParseError>(data, "dataset version");
  if (version != kDatasetVersion)
    throw ParseError(path + ": unsupported dataset version " + std::to_string(version));
  auto count = detail::get<std::uint64_t, ParseError>(data, "record count");
  auto s_dim = detail::get<std::uint32_t, ParseError>(data, "state dim");
  auto a_dim = detail::get<std::uint32_t, ParseError>(data, "action dim");
  auto s2_dim = detail::get<std::uint32_t, ParseError>(data, "next-state dim");
  if (s_dim != kStateFeatureDim || a_dim != kActionDim || s2_dim != kStateFeatureDim)
    throw ParseError(path + ": unexpected record dimensions");

  TransitionDataset dataset;
  dataset.seed = detail::get<std::uint64_t, ParseError>(data, "seed");
  dataset.env_digest = detail::get<std::uint64_t, ParseError>(data, "env digest");
  constexpr std::size_t kRecordBytes =
      sizeof(double) * (2 * kStateFeatureDim + kActionDim);
  if (data.size() != count * kRecordBytes)
    throw ParseError(path + ": record payload size mismatch");
  dataset.records.resize(count);
  for (TransitionRecord& rec : dataset.records) {
    std::memcpy(rec.s.data(), data.data(), sizeof(rec.s));
    data.remove_prefix(sizeof(rec.s));
    std::memcpy(rec.a.data(), data.data(), sizeof(rec.a));
    data.remove_prefix(sizeof(rec.a));
    std::memcpy(rec.s_next.data(), data.data(), sizeof(rec.s_next));
    data.remove_prefix(sizeof(rec.s_next));
  }
  return dataset;
}

void export_dataset_text(const TransitionDataset& dataset, std::ostream& out) {
  out << "# records=" << dataset.records.size() << " s_dim=" << kStateFeatureDim
      << " a_dim=" << kActionDim << " seed=" << dataset.seed
      << " env_digest=" << dataset.env_digest << '\n';
  out.precision(17);
  for (const TransitionRecord& rec : dataset.records) {
    const char* sep = "";
    auto emit = [&](double v) { out << sep << v; sep = " "; };
    for (double v : rec.s) emit(v);
    for (double v : rec.a) emit(v);
    for (double v : rec.s_next) emit(v);
    out << '\n';
  }
}

void save_embedding_checkpoint(const EmbeddingCheckpoint& ckpt, const std::string& path) {
  std::string out;
  out.append(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  detail::put<std::uint32_t>(out, kEmbeddingVersion);
  detail::put<std::uint64_t>(out, ckpt.env_digest);
  append_blob(out, save_params(ckpt.f));
  append_blob(out, save_params(ckpt.m));
  detail::write_file(path, out);
}

EmbeddingCheckpoint load_embedding_checkpoint(const std::string& path) {
  std::string raw = detail::read_file(path);
  std::string_view data = raw;
  if (data.size() < sizeof(kEmbeddingMagic) ||
      std::memcmp(data.data(), kEmbeddingMagic, sizeof(kEmbeddingMagic)) != 0)
    throw CheckpointError(path + ": not an embedding checkpoint");
  data.remove_prefix(sizeof(kEmbeddingMagic));
  auto version = detail::get<std::uint32_t>(data, "embedding checkpoint version");
  if (version != kEmbeddingVersion)
    throw CheckpointError(path + ": unsupported embedding checkpoint version");
  auto digest = detail::get<std::uint64_t>(data, "env digest");
  Network f = read_network(take_blob(data, "embedding network"));
  Network m = read_network(take_blob(data, "transition model"));
  return {std::move(f), std::move(m), digest};
}

}  // namespace miniaxie
