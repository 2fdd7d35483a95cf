#include <cmath>
#include <set>
#include <sstream>

#include <doctest.h>

#include "miniaxie/embedding.hpp"
#include "miniaxie/errors.hpp"
#include "test_util.hpp"

using namespace miniaxie;

namespace {

Network zero_net(std::vector<int> dims, std::vector<Activation> acts) {
  Network net(std::move(dims), std::move(acts));
  std::fill(net.params().begin(), net.params().end(), 0.0);
  return net;
}

TransitionDataset tiny_dataset(std::size_t n, std::uint64_t seed) {
  return collect_random_transitions(EnvConfig{}, n, seed);
}

}  // namespace

TEST_SUITE_BEGIN("embedding");

TEST_CASE("collect with n=1 yields one record whose action decodes legally") {
  TransitionDataset d = tiny_dataset(1, 5);
  REQUIRE(d.records.size() == 1);
  const TransitionRecord& r = d.records[0];
  RoundAction a = decode(unflatten(r.a));  // throws if the encoding is inconsistent
  CHECK(a.total_cards() <= 12);
  for (double v : r.s) CHECK((v >= 0.0 && v <= 1.0));
  for (double v : r.s_next) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(d.env_digest == env_digest(EnvConfig{}));
  CHECK(d.seed == 5);
}

TEST_CASE("collect is seed-deterministic") {
  CHECK(tiny_dataset(300, 9) == tiny_dataset(300, 9));
  CHECK(tiny_dataset(300, 9) != tiny_dataset(300, 10));
}

TEST_CASE("collect returns exactly the requested number of records") {
  CHECK(tiny_dataset(257, 1).records.size() == 257);
}

TEST_CASE("collect rejects a zero transition count") {
  CHECK_THROWS_AS(collect_random_transitions(EnvConfig{}, 0, 1), UsageError);
}

TEST_CASE("the empty action appears at the rate of mean 1/|U(s)|") {
  // The dataset's states expose hand counts, energy and aliveness, which is
  // everything |U(s)| depends on; reconstruct and compare frequencies.
  const std::size_t n = 100000;
  TransitionDataset d = tiny_dataset(n, 2024);
  const FlatAction zero{};
  double empties = 0, expected_sum = 0, expected_sq = 0;
  GameState probe = new_game(EnvConfig{}, 1);
  for (const TransitionRecord& r : d.records) {
    empties += r.a == zero;
    for (int axie = 0; axie < 3; ++axie)
      probe.axie_health[axie] = r.s[3 * axie] > 0 ? 1 : 0;
    for (int c = 0; c < kCardTypes; ++c)
      probe.players[0].hand[c] = (int)std::lround(2 * r.s[18 + c]);
    probe.players[0].energy = (int)std::lround(10 * r.s[42]);
    double p = 1.0 / (double)enumerate_actions(probe).size();
    expected_sum += p;
    expected_sq += p * p;
  }
  double freq = empties / n;
  double expect = expected_sum / n;
  double var = expect * (1 - expect) / n + (expected_sq / n - expect * expect) / n;
  CHECK(std::abs(freq - expect) <= 3 * std::sqrt(var));
}

TEST_CASE("j1_loss is zero when predictions equal targets") {
  // Zero networks predict zero; zero targets give a perfect fit.
  Network f = zero_net({72, 4}, {Activation::kIdentity});
  Network m = zero_net({50, 46}, {Activation::kIdentity});
  TransitionRecord r{};
  CHECK(j1_loss(f, m, std::vector<TransitionRecord>{r}) == 0.0);
}

TEST_CASE("j1_loss of a zero-output model is the target mean square") {
  Network f = zero_net({72, 4}, {Activation::kIdentity});
  Network m = zero_net({50, 46}, {Activation::kIdentity});
  TransitionRecord a{}, b{};
  a.s_next.fill(0.5);
  b.s_next.fill(1.0);
  double v = (46 * 0.25 + 46 * 1.0) / (2 * 46);
  CHECK(j1_loss(f, m, std::vector<TransitionRecord>{a, b}) == doctest::Approx(v).epsilon(1e-14));
}

TEST_CASE("j1 gradients match finite differences") {
  SplitMix64 rng(77);
  Network f = Network::glorot({72, 10, 4}, {Activation::kTanh, Activation::kIdentity}, rng);
  Network m = Network::glorot({50, 12, 46}, {Activation::kTanh, Activation::kIdentity}, rng);
  TransitionDataset d = tiny_dataset(6, 3);

  J1Gradients g = j1_gradients(f, m, d.records);
  CHECK(g.loss == doctest::Approx(j1_loss(f, m, d.records)).epsilon(1e-12));

  auto fd_f = finite_difference_gradient(
      [&](const std::vector<double>& p) {
        Network fp = f;
        fp.params() = p;
        return j1_loss(fp, m, d.records);
      },
      f.params());
  auto fd_m = finite_difference_gradient(
      [&](const std::vector<double>& p) {
        Network mp = m;
        mp.params() = p;
        return j1_loss(f, mp, d.records);
      },
      m.params());
  CHECK(max_relative_error(g.f_grad, fd_f) < 1e-4);
  CHECK(max_relative_error(g.m_grad, fd_m) < 1e-4);
}

TEST_CASE("pretrain with zero epochs only evaluates the initial networks") {
  TransitionDataset d = tiny_dataset(64, 11);
  PretrainOptions opts;
  opts.epochs = 0;
  PretrainResult r = pretrain(d, opts, 4);
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].epoch == 0);
  CHECK(r.history[0].train > 0.0);

  PretrainResult again = pretrain(d, opts, 4);
  CHECK(r.f == again.f);  // untouched glorot init, same seed
  CHECK(r.m == again.m);
}

TEST_CASE("pretrain is reproducible and improves the holdout loss") {
  TransitionDataset d = tiny_dataset(600, 21);
  PretrainOptions opts;
  opts.epochs = 4;
  opts.batch_size = 64;
  PretrainResult r1 = pretrain(d, opts, 7);
  PretrainResult r2 = pretrain(d, opts, 7);
  CHECK(r1.f == r2.f);
  CHECK(r1.m == r2.m);
  REQUIRE(r1.history.size() == 5);
  for (std::size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].train == r2.history[i].train);
    CHECK(r1.history[i].holdout == r2.history[i].holdout);
  }
  double best = r1.history[0].holdout;
  for (const LossRow& row : r1.history) best = std::min(best, row.holdout);
  CHECK(best <= r1.history[0].holdout);
  CHECK(r1.history.back().holdout < r1.history[0].holdout);
}

TEST_CASE("pretrain reports divergence with epoch and batch") {
  TransitionDataset d = tiny_dataset(300, 31);
  PretrainOptions opts;
  opts.epochs = 3;
  opts.learning_rate = 1e300;  // guaranteed overflow into non-finite J1
  CHECK_THROWS_WITH_AS(pretrain(d, opts, 1), doctest::Contains("epoch"), TrainingError);
}

TEST_CASE("embed is pure and zero weights map everything to the bias") {
  SplitMix64 rng(41);
  Network f = Network::glorot({72, 8, 4}, {Activation::kTanh, Activation::kIdentity}, rng);
  FlatAction a = flatten(encode(testutil::make_action({0, 1})));
  CHECK(embed(f, a) == embed(f, a));

  Network zero = zero_net({72, 4}, {Activation::kIdentity});
  LatentAction e = embed(zero, a);
  CHECK(e == LatentAction(4, 0.0));
}

TEST_CASE("pretrained embeddings separate all 285 sequences") {
  TransitionDataset d = tiny_dataset(1500, 51);
  PretrainOptions opts;
  opts.epochs = 3;
  opts.latent_dim = 8;
  PretrainResult r = pretrain(d, opts, 3);

  std::set<LatentAction> seen;
  std::array<int, kCardsPerAxie> hand;
  hand.fill(kCopiesPerCard);
  for (const auto& seq : enumerate_sequences(default_team().axies[0], hand, 1 << 30)) {
    RoundAction a;
    a.sequences[0] = seq;
    seen.insert(embed(r.f, flatten(encode(a))));
  }
  CHECK(seen.size() == 285);
}

TEST_CASE("datasets round-trip through their binary file format") {
  testutil::TempDir dir("dataset");
  TransitionDataset d = tiny_dataset(123, 61);
  save_dataset(d, dir.file("d.bin"));
  TransitionDataset back = load_dataset(dir.file("d.bin"));
  CHECK(back == d);

  save_dataset(d, dir.file("d2.bin"));
  CHECK(testutil::slurp(dir.file("d.bin")) == testutil::slurp(dir.file("d2.bin")));
}

TEST_CASE("dataset loading rejects corrupt files") {
  testutil::TempDir dir("datasetbad");
  TransitionDataset d = tiny_dataset(5, 71);
  save_dataset(d, dir.file("d.bin"));
  std::string bytes = testutil::slurp(dir.file("d.bin"));

  SUBCASE("bad magic") {
    bytes[0] = 'Z';
    FILE* fp = std::fopen(dir.file("bad.bin").c_str(), "wb");
    std::fwrite(bytes.data(), 1, bytes.size(), fp);
    std::fclose(fp);
    CHECK_THROWS_AS(load_dataset(dir.file("bad.bin")), ParseError);
  }
  SUBCASE("truncated records") {
    FILE* fp = std::fopen(dir.file("bad.bin").c_str(), "wb");
    std::fwrite(bytes.data(), 1, bytes.size() - 7, fp);
    std::fclose(fp);
    CHECK_THROWS_AS(load_dataset(dir.file("bad.bin")), ParseError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_dataset(dir.file("nope.bin")), ConfigError); }
}

TEST_CASE("dataset text export emits one line per record") {
  TransitionDataset d = tiny_dataset(4, 81);
  std::ostringstream out;
  export_dataset_text(d, out);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.find("# records=4 ") == 0);
  int lines = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    double v;
    int fields = 0;
    while (row >> v) ++fields;
    CHECK(fields == 46 + 72 + 46);
    ++lines;
  }
  CHECK(lines == 4);
}

TEST_CASE("embedding checkpoints round-trip") {
  testutil::TempDir dir("embck");
  SplitMix64 rng(91);
  EmbeddingCheckpoint ck{
      Network::glorot({72, 6, 4}, {Activation::kTanh, Activation::kIdentity}, rng),
      Network::glorot({50, 6, 46}, {Activation::kTanh, Activation::kIdentity}, rng),
      env_digest(EnvConfig{})};
  save_embedding_checkpoint(ck, dir.file("e.ckpt"));
  EmbeddingCheckpoint back = load_embedding_checkpoint(dir.file("e.ckpt"));
  CHECK(back.f == ck.f);
  CHECK(back.m == ck.m);
  CHECK(back.env_digest == ck.env_digest);

  std::string bytes = testutil::slurp(dir.file("e.ckpt"));
  FILE* fp = std::fopen(dir.file("bad.ckpt").c_str(), "wb");
  std::fwrite(bytes.data(), 1, bytes.size() / 2, fp);
  std::fclose(fp);
  CHECK_THROWS_AS(load_embedding_checkpoint(dir.file("bad.ckpt")), CheckpointError);
}

TEST_SUITE_END();
