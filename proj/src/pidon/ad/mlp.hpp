#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace pidon::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense feed-forward network: tanh on hidden layers, identity on the output.
/// weights[l] maps layer l (layer_sizes[l] units) to layer l+1.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static MlpParams zeros(std::vector<int> layer_sizes);
  /// Glorot-uniform weights, zero biases.
  static MlpParams glorot(std::vector<int> layer_sizes, std::mt19937_64& rng);

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;

  /// Throws kInvalidInput on inconsistent shapes or non-finite entries.
  void validate() const;

  bool operator==(const MlpParams& o) const;
};

/// Shape-congruent container for dL/dtheta (also used for optimizer moments).
struct ParamGradient {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static ParamGradient zeros_like(const MlpParams& p);
  bool congruent(const MlpParams& p) const;
  bool all_finite() const;
  ParamGradient& operator+=(const ParamGradient& o);
  double squared_norm() const;
};

/// Visits every scalar parameter with its gradient entry, in a fixed order.
void for_each_entry(MlpParams& p, const ParamGradient& g,
                    const std::function<void(double& param, double grad)>& fn);

/// Number of scalar entries and flat access in the same fixed order.
double& flat_entry(MlpParams& p, std::size_t i);
double flat_entry(const ParamGradient& g, std::size_t i);

/// Plain evaluation; `input` has length layer_sizes[0].
Vector mlp_forward(const MlpParams& p, std::span<const double> input);
/// Column-batched evaluation (one input per column).
Matrix mlp_forward(const MlpParams& p, const Matrix& inputs);

/// Default 5x50 hidden architecture for the given input/output widths.
std::vector<int> default_layers(int in, int out, int hidden_layers = 5, int width = 50);

}  // namespace pidon::ad
