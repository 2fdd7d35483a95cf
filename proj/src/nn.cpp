#include "miniaxie/nn.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "miniaxie/errors.hpp"

#include "blob_io.hpp"

namespace miniaxie {

namespace {

using WeightMap = Eigen::Map<const Matrix>;
using BiasMap = Eigen::Map<const Eigen::RowVectorXd>;

std::size_t expected_param_count(const std::vector<int>& dims) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    n += static_cast<std::size_t>(dims[l] + 1) * static_cast<std::size_t>(dims[l + 1]);
  return n;
}

void apply_activation(Matrix& z, Activation act) {
  switch (act) {
    case Activation::kRectifier:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::kIdentity:
      break;
  }
}

// Derivative expressed through the activation output y = act(z).
Matrix activation_derivative(const Matrix& y, Activation act) {
  switch (act) {
    case Activation::kRectifier:
      return (y.array() > 0.0).cast<double>().matrix();
    case Activation::kTanh:
      return (1.0 - y.array().square()).matrix();
    case Activation::kIdentity:
      return Matrix::Ones(y.rows(), y.cols());
  }
  return Matrix::Ones(y.rows(), y.cols());
}

}  // namespace

Network::Network(std::vector<int> layer_dims, std::vector<Activation> activations)
    : layer_dims_(std::move(layer_dims)), activations_(std::move(activations)) {
  if (layer_dims_.size() < 2) throw UsageError("network needs at least one layer");
  if (activations_.size() != layer_dims_.size() - 1)
    throw UsageError("need one activation per non-input layer");
  for (int d : layer_dims_)
    if (d <= 0) throw UsageError("layer dimensions must be positive");
  params_.assign(expected_param_count(layer_dims_), 0.0);
}

Network Network::glorot(std::vector<int> layer_dims, std::vector<Activation> activations,
                        SplitMix64& rng) {
  Network net(std::move(layer_dims), std::move(activations));
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < net.layer_dims_.size(); ++l) {
    auto fan_in = static_cast<std::size_t>(net.layer_dims_[l]);
    auto fan_out = static_cast<std::size_t>(net.layer_dims_[l + 1]);
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < fan_in * fan_out; ++i)
      net.params_[offset + i] = (2.0 * rng.uniform_double() - 1.0) * bound;
    offset += fan_in * fan_out + fan_out;  // biases stay zero
  }
  return net;
}

Matrix Network::forward_batch(const Matrix& inputs) const {
  if (inputs.cols() != input_dim())
    throw UsageError("forward: input dim " + std::to_string(inputs.cols()) +
                     ", network expects " + std::to_string(input_dim()));
  Matrix x = inputs;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
    int in = layer_dims_[l];
    int out = layer_dims_[l + 1];
    WeightMap w(params_.data() + offset, out, in);
    BiasMap b(params_.data() + offset + static_cast<std::size_t>(in) * out, out);
    Matrix z = x * w.transpose();
    z.rowwise() += b;
    apply_activation(z, activations_[l]);
    x = std::move(z);
    offset += static_cast<std::size_t>(in + 1) * out;
  }
  return x;
}

std::vector<double> Network::forward(std::span<const double> input) const {
  Eigen::Map<const Matrix> x(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  Matrix y = forward_batch(x);
  return std::vector<double>(y.data(), y.data() + y.cols());
}

BackwardResult Network::backward_batch(const Matrix& inputs, const Matrix& upstream) const {
  if (upstream.cols() != output_dim() || upstream.rows() != inputs.rows())
    throw UsageError("backward: upstream gradient shape mismatch");

  std::size_t layers = layer_dims_.size() - 1;
  std::vector<Matrix> acts(layers + 1);
  acts[0] = inputs;
  std::vector<std::size_t> offsets(layers);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = offset;
    int in = layer_dims_[l];
    int out = layer_dims_[l + 1];
    WeightMap w(params_.data() + offset, out, in);
    BiasMap b(params_.data() + offset + static_cast<std::size_t>(in) * out, out);
    Matrix z = acts[l] * w.transpose();
    z.rowwise() += b;
    apply_activation(z, activations_[l]);
    acts[l + 1] = std::move(z);
    offset += static_cast<std::size_t>(in + 1) * out;
  }

  BackwardResult result;
  result.param_grad.assign(params_.size(), 0.0);
  Matrix grad = upstream;
  for (std::size_t l = layers; l-- > 0;) {
    int in = layer_dims_[l];
    int out = layer_dims_[l + 1];
    Matrix dz = grad.cwiseProduct(activation_derivative(acts[l + 1], activations_[l]));
    Eigen::Map<Matrix> dw(result.param_grad.data() + offsets[l], out, in);
    Eigen::Map<Eigen::RowVectorXd> db(
        result.param_grad.data() + offsets[l] + static_cast<std::size_t>(in) * out, out);
    dw = dz.transpose() * acts[l];
    db = dz.colwise().sum();
    WeightMap w(params_.data() + offsets[l], out, in);
    grad = dz * w;
  }
  result.input_grad = std::move(grad);
  return result;
}

BackwardResult Network::backward(std::span<const double> input,
                                 std::span<const double> upstream) const {
  Eigen::Map<const Matrix> x(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  Eigen::Map<const Matrix> g(upstream.data(), 1, static_cast<Eigen::Index>(upstream.size()));
  return backward_batch(x, g);
}

AdamState make_adam(std::size_t param_count, double lr) {
  AdamState state;
  state.m.assign(param_count, 0.0);
  state.v.assign(param_count, 0.0);
  state.lr = lr;
  return state;
}

void opt_step(AdamState& state, std::vector<double>& params, std::span<const double> grad) {
  if (params.size() != state.m.size() || grad.size() != params.size())
    throw UsageError("opt_step: parameter/gradient length mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i]))
      throw TrainingError("non-finite gradient at index " + std::to_string(i) + " (value " +
                          std::to_string(grad[i]) + ") at optimizer step " +
                          std::to_string(state.step + 1));
  }
  state.step += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    double m_hat = state.m[i] / bc1;
    double v_hat = state.v[i] / bc2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

namespace {

constexpr char kNetMagic[4] = {'M', 'X', 'N', 'N'};
constexpr std::uint32_t kNetVersion = 1;

using detail::get;
using detail::put;

}  // namespace

std::string save_params(const Network& net) {
  std::string out;
  out.append(kNetMagic, sizeof(kNetMagic));
  put<std::uint32_t>(out, kNetVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_dims().size()));
  for (int d : net.layer_dims()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (Activation a : net.activations()) put<std::uint8_t>(out, static_cast<std::uint8_t>(a));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(net.param_count()));
  out.append(reinterpret_cast<const char*>(net.params().data()),
             net.param_count() * sizeof(double));
  return out;
}

Network read_network(std::string_view blob) {
  if (blob.size() < sizeof(kNetMagic) ||
      std::memcmp(blob.data(), kNetMagic, sizeof(kNetMagic)) != 0)
    throw CheckpointError("bad network magic");
  blob.remove_prefix(sizeof(kNetMagic));
  auto version = get<std::uint32_t>(blob, "format version");
  if (version != kNetVersion)
    throw CheckpointError("unsupported network format version " + std::to_string(version));
  auto n_dims = get<std::uint32_t>(blob, "layer count");
  if (n_dims < 2 || n_dims > 64) throw CheckpointError("implausible layer count");
  std::vector<int> dims(n_dims);
  for (auto& d : dims) d = static_cast<int>(get<std::uint32_t>(blob, "layer dim"));
  std::vector<Activation> acts(n_dims - 1);
  for (auto& a : acts) {
    auto raw = get<std::uint8_t>(blob, "activation");
    if (raw > 2) throw CheckpointError("unknown activation code");
    a = static_cast<Activation>(raw);
  }
  auto count = get<std::uint64_t>(blob, "parameter count");
  Network net(dims, acts);
  if (count != net.param_count())
    throw CheckpointError("parameter count " + std::to_string(count) +
                          " does not match architecture");
  if (blob.size() < count * sizeof(double))
    throw CheckpointError("truncated blob while reading parameters");
  std::memcpy(net.params().data(), blob.data(), count * sizeof(double));
  return net;
}

void load_params(Network& net, std::string_view blob) {
  Network loaded = read_network(blob);
  if (loaded.layer_dims() != net.layer_dims())
    throw CheckpointError("checkpoint architecture does not match the expected network");
  if (loaded.activations() != net.activations())
    throw CheckpointError("checkpoint activations do not match the expected network");
  net.params() = loaded.params();
}

void append_blob(std::string& out, std::string_view blob) {
  std::uint64_t len = blob.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof(len));
  out.append(blob.data(), blob.size());
}

std::string_view take_blob(std::string_view& data, const std::string& context) {
  auto len = get<std::uint64_t>(data, context + " length");
  if (data.size() < len) throw CheckpointError("truncated blob while reading " + context);
  std::string_view blob = data.substr(0, len);
  data.remove_prefix(len);
  return blob;
}

std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double eps) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double saved = x[i];
    x[i] = saved + eps;
    double plus = f(x);
    x[i] = saved - eps;
    double minus = f(x);
    x[i] = saved;
    grad[i] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw UsageError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace miniaxie
