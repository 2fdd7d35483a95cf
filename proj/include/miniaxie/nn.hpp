#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "miniaxie/rng.hpp"

namespace miniaxie {

enum class Activation : std::uint8_t { kRectifier = 0, kTanh = 1, kIdentity = 2 };

// Row = one sample throughout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BackwardResult {
  std::vector<double> param_grad;  // same layout as Network::params()
  Matrix input_grad;               // one row per sample
};

// Fixed-architecture fully connected network over a flat 64-bit parameter
// vector. Layout: per layer, the out x in weight matrix row-major, then the
// bias vector.
class Network {
 public:
  Network(std::vector<int> layer_dims, std::vector<Activation> activations);

  static Network glorot(std::vector<int> layer_dims, std::vector<Activation> activations,
                        SplitMix64& rng);

  int input_dim() const { return layer_dims_.front(); }
  int output_dim() const { return layer_dims_.back(); }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<int>& layer_dims() const { return layer_dims_; }
  const std::vector<Activation>& activations() const { return activations_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::vector<double> forward(std::span<const double> input) const;
  Matrix forward_batch(const Matrix& inputs) const;

  // Gradient of sum_i upstream_i . output_i with respect to parameters and
  // inputs. Exact (verified against central finite differences in tests).
  BackwardResult backward_batch(const Matrix& inputs, const Matrix& upstream) const;
  BackwardResult backward(std::span<const double> input,
                          std::span<const double> upstream) const;

  bool operator==(const Network&) const = default;

 private:
  std::vector<int> layer_dims_;
  std::vector<Activation> activations_;  // one per non-input layer
  std::vector<double> params_;
};

// Adaptive-moment estimation state. Bias-corrected first/second moments.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(std::size_t param_count, double lr);

// One optimizer step in place. Throws TrainingError on non-finite gradient
// entries, reporting the offending index.
void opt_step(AdamState& state, std::vector<double>& params, std::span<const double> grad);

// Versioned binary blob: magic, format version, layer dims, activations,
// then parameters as 64-bit little-endian reals.
std::string save_params(const Network& net);

// Restores parameters into `net`; the blob's architecture must match.
// Throws CheckpointError on truncation, version or dimension mismatch.
void load_params(Network& net, std::string_view blob);

// Reconstructs a network (architecture + parameters) from a blob.
Network read_network(std::string_view blob);

// Blob helpers for composite checkpoint files.
void append_blob(std::string& out, std::string_view blob);
std::string_view take_blob(std::string_view& data, const std::string& context);

// Central finite differences of f at x; the oracle used by gradient tests.
std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double eps = 1e-5);

// Max over coordinates of |a-b| / max(|a|, |b|, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-6);

}  // namespace miniaxie
