#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "miniaxie/errors.hpp"
#include "miniaxie/nn.hpp"
#include "test_util.hpp"

using namespace miniaxie;

namespace {

double mse_loss(const Network& net, const Matrix& x, const Matrix& y,
                const std::vector<double>& params) {
  Network copy = net;
  copy.params() = params;
  Matrix diff = copy.forward_batch(x) - y;
  return diff.squaredNorm() / diff.size();
}

}  // namespace

TEST_SUITE_BEGIN("nn");

TEST_CASE("parameter count follows sum (in+1)*out") {
  Network net({5, 7, 3}, {Activation::kTanh, Activation::kIdentity});
  CHECK(net.param_count() == (5 + 1) * 7 + (7 + 1) * 3);
  CHECK(net.input_dim() == 5);
  CHECK(net.output_dim() == 3);
}

TEST_CASE("forward matches a hand-computed two-layer example") {
  // 2 -> 2 (tanh) -> 1 (identity); weights chosen for easy arithmetic.
  Network net({2, 2, 1}, {Activation::kTanh, Activation::kIdentity});
  // layer 0: W = [[1, -1], [0.5, 0]], b = [0, 0.25]
  // layer 1: W = [[2, -3]], b = [0.125]
  net.params() = {1.0, -1.0, 0.5, 0.0, 0.0, 0.25, 2.0, -3.0, 0.125};
  auto out = net.forward(std::vector<double>{0.5, -0.5});
  double h0 = std::tanh(0.5 * 1.0 + (-0.5) * -1.0);
  double h1 = std::tanh(0.5 * 0.5 + 0.25);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == doctest::Approx(2 * h0 - 3 * h1 + 0.125).epsilon(1e-14));
}

TEST_CASE("rectifier clamps negatives to zero") {
  Network net({1, 1}, {Activation::kRectifier});
  net.params() = {1.0, 0.0};  // identity weight, zero bias
  CHECK(net.forward(std::vector<double>{2.0})[0] == 2.0);
  CHECK(net.forward(std::vector<double>{-2.0})[0] == 0.0);
}

TEST_CASE("batched forward equals per-row forward") {
  SplitMix64 rng(1);
  Network net = Network::glorot({4, 6, 2}, {Activation::kTanh, Activation::kIdentity}, rng);
  Matrix x(5, 4);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.gaussian();
  Matrix y = net.forward_batch(x);
  for (int r = 0; r < 5; ++r) {
    std::vector<double> row(x.row(r).data(), x.row(r).data() + 4);
    auto single = net.forward(row);
    for (int c = 0; c < 2; ++c) CHECK(y(r, c) == doctest::Approx(single[c]).epsilon(1e-14));
  }
}

TEST_CASE("glorot initialization is seed-deterministic and bounded") {
  SplitMix64 a(3), b(3);
  Network n1 = Network::glorot({8, 8, 1}, {Activation::kTanh, Activation::kIdentity}, a);
  Network n2 = Network::glorot({8, 8, 1}, {Activation::kTanh, Activation::kIdentity}, b);
  CHECK(n1 == n2);
  double mx = 0;
  for (double p : n1.params()) mx = std::max(mx, std::abs(p));
  CHECK(mx > 0.0);
  CHECK(mx < 2.0);
}

TEST_CASE("backward gradients match central finite differences") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    Network net = Network::glorot({3, 5, 4, 2}, {Activation::kTanh, Activation::kTanh,
                                                 Activation::kIdentity}, rng);
    Matrix x(4, 3), y(4, 2);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.gaussian();
    for (int i = 0; i < y.size(); ++i) y.data()[i] = rng.gaussian();

    // loss = mean (net(x) - y)^2; upstream = 2*(pred-y)/n
    Matrix pred = net.forward_batch(x);
    Matrix upstream = 2.0 * (pred - y) / pred.size();
    auto back = net.backward_batch(x, upstream);

    auto fd = finite_difference_gradient(
        [&](const std::vector<double>& p) { return mse_loss(net, x, y, p); }, net.params());
    CHECK(max_relative_error(back.param_grad, fd) < 1e-4);
  }
}

TEST_CASE("backward input gradients match finite differences") {
  SplitMix64 rng(23);
  Network net = Network::glorot({3, 6, 1}, {Activation::kTanh, Activation::kIdentity}, rng);
  std::vector<double> x = {0.3, -0.7, 0.2};
  std::vector<double> upstream = {1.0};
  auto back = net.backward(x, upstream);

  auto fd = finite_difference_gradient(
      [&](const std::vector<double>& input) { return net.forward(input)[0]; }, x);
  std::vector<double> got(back.input_grad.data(), back.input_grad.data() + 3);
  CHECK(max_relative_error(got, fd) < 1e-4);
}

TEST_CASE("the optimizer matches a reference adaptive-moment implementation") {
  AdamState opt = make_adam(2, 0.05);
  std::vector<double> params = {1.0, -2.0};

  // Reference: textbook bias-corrected moments on f = p0^2 + p1^2.
  std::vector<double> ref = params, m(2, 0.0), v(2, 0.0);
  for (int t = 1; t <= 25; ++t) {
    std::vector<double> grad = {2 * params[0], 2 * params[1]};
    opt_step(opt, params, grad);

    std::vector<double> rgrad = {2 * ref[0], 2 * ref[1]};
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + (1 - 0.9) * rgrad[i];
      v[i] = 0.999 * v[i] + (1 - 0.999) * rgrad[i] * rgrad[i];
      double mhat = m[i] / (1 - std::pow(0.9, t));
      double vhat = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.05 * mhat / (std::sqrt(vhat) + 1e-8);
    }
    for (int i = 0; i < 2; ++i) CHECK(params[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
  CHECK(std::abs(params[0]) < 1.0);  // actually descending
}

TEST_CASE("the optimizer rejects non-finite gradients") {
  AdamState opt = make_adam(1, 0.1);
  std::vector<double> params = {0.0};
  std::vector<double> grad = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(opt_step(opt, params, grad), TrainingError);
}

TEST_CASE("parameter blobs round-trip bit-identically") {
  SplitMix64 rng(31);
  Network net = Network::glorot({4, 3, 2}, {Activation::kRectifier, Activation::kIdentity}, rng);
  std::string blob = save_params(net);
  CHECK(blob == save_params(net));  // stable bytes

  Network same({4, 3, 2}, {Activation::kRectifier, Activation::kIdentity});
  load_params(same, blob);
  CHECK(same == net);

  Network reread = read_network(blob);
  CHECK(reread == net);
}

TEST_CASE("loading rejects mismatched or corrupt blobs") {
  SplitMix64 rng(37);
  Network net = Network::glorot({4, 3, 2}, {Activation::kTanh, Activation::kIdentity}, rng);
  std::string blob = save_params(net);

  SUBCASE("architecture mismatch") {
    Network other({4, 5, 2}, {Activation::kTanh, Activation::kIdentity});
    CHECK_THROWS_AS(load_params(other, blob), CheckpointError);
  }
  SUBCASE("truncation") {
    Network same({4, 3, 2}, {Activation::kTanh, Activation::kIdentity});
    CHECK_THROWS_AS(load_params(same, blob.substr(0, blob.size() - 3)), CheckpointError);
  }
  SUBCASE("bad magic") {
    std::string bad = blob;
    bad[0] = 'x';
    Network same({4, 3, 2}, {Activation::kTanh, Activation::kIdentity});
    CHECK_THROWS_AS(load_params(same, bad), CheckpointError);
  }
}

TEST_CASE("blob framing helpers round-trip") {
  std::string buf;
  append_blob(buf, "hello");
  append_blob(buf, std::string(3, '\0'));
  std::string_view view = buf;
  CHECK(take_blob(view, "first") == "hello");
  CHECK(take_blob(view, "second") == std::string(3, '\0'));
  CHECK(view.empty());
  CHECK_THROWS_AS(take_blob(view, "third"), CheckpointError);
}

TEST_SUITE_END();
