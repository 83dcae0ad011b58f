#include "pidon/ad/mlp.hpp"

#include <cmath>
#include <string>

#include "pidon/error.hpp"

namespace pidon::ad {

MlpParams MlpParams::zeros(std::vector<int> layer_sizes) {
  require(layer_sizes.size() >= 2, ErrorCode::kInvalidInput, "mlp needs at least input and output layers");
  MlpParams p;
  p.layer_sizes = std::move(layer_sizes);
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    require(p.layer_sizes[l] > 0 && p.layer_sizes[l + 1] > 0, ErrorCode::kInvalidInput,
            "layer sizes must be positive");
    p.weights.push_back(Matrix::Zero(p.layer_sizes[l + 1], p.layer_sizes[l]));
    p.biases.push_back(Vector::Zero(p.layer_sizes[l + 1]));
  }
  return p;
}

MlpParams MlpParams::glorot(std::vector<int> layer_sizes, std::mt19937_64& rng) {
  MlpParams p = zeros(std::move(layer_sizes));
  for (auto& w : p.weights) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // column-major fill order is part of the seed contract
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
  }
  return p;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void MlpParams::validate() const {
  require(layer_sizes.size() >= 2, ErrorCode::kInvalidInput, "mlp needs at least two layer sizes");
  require(weights.size() + 1 == layer_sizes.size() && biases.size() == weights.size(),
          ErrorCode::kInvalidInput, "mlp layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    require(weights[l].rows() == layer_sizes[l + 1] && weights[l].cols() == layer_sizes[l],
            ErrorCode::kInvalidInput, "weight shape mismatch at layer " + std::to_string(l));
    require(biases[l].size() == layer_sizes[l + 1], ErrorCode::kInvalidInput,
            "bias shape mismatch at layer " + std::to_string(l));
    require(weights[l].allFinite() && biases[l].allFinite(), ErrorCode::kInvalidInput,
            "non-finite parameter at layer " + std::to_string(l));
  }
}

bool MlpParams::operator==(const MlpParams& o) const {
  if (layer_sizes != o.layer_sizes) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != o.weights[l] || biases[l] != o.biases[l]) return false;
  }
  return true;
}

ParamGradient ParamGradient::zeros_like(const MlpParams& p) {
  ParamGradient g;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    g.weights.push_back(Matrix::Zero(p.weights[l].rows(), p.weights[l].cols()));
    g.biases.push_back(Vector::Zero(p.biases[l].size()));
  }
  return g;
}

bool ParamGradient::congruent(const MlpParams& p) const {
  if (weights.size() != p.weights.size() || biases.size() != p.biases.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != p.weights[l].rows() || weights[l].cols() != p.weights[l].cols()) return false;
    if (biases[l].size() != p.biases[l].size()) return false;
  }
  return true;
}

bool ParamGradient::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l)
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  return true;
}

ParamGradient& ParamGradient::operator+=(const ParamGradient& o) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += o.weights[l];
    biases[l] += o.biases[l];
  }
  return *this;
}

double ParamGradient::squared_norm() const {
  double s = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) s += weights[l].squaredNorm() + biases[l].squaredNorm();
  return s;
}

void for_each_entry(MlpParams& p, const ParamGradient& g,
                    const std::function<void(double& param, double grad)>& fn) {
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    double* w = p.weights[l].data();
    const double* gw = g.weights[l].data();
    for (Eigen::Index i = 0; i < p.weights[l].size(); ++i) fn(w[i], gw[i]);
    double* b = p.biases[l].data();
    const double* gb = g.biases[l].data();
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) fn(b[i], gb[i]);
  }
}

namespace {

template <class Tree>
auto& flat_ref(Tree& t, std::size_t i) {
  for (std::size_t l = 0; l < t.weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(t.weights[l].size());
    if (i < nw) return t.weights[l].data()[i];
    i -= nw;
    const auto nb = static_cast<std::size_t>(t.biases[l].size());
    if (i < nb) return t.biases[l].data()[i];
    i -= nb;
  }
  fail(ErrorCode::kInvalidInput, "flat parameter index out of range");
}

}  // namespace

double& flat_entry(MlpParams& p, std::size_t i) { return flat_ref(p, i); }
double flat_entry(const ParamGradient& g, std::size_t i) { return flat_ref(g, i); }

Matrix mlp_forward(const MlpParams& p, const Matrix& inputs) {
  require(inputs.rows() == p.input_size(), ErrorCode::kInvalidInput,
          "input width " + std::to_string(inputs.rows()) + " does not match network input " +
              std::to_string(p.input_size()));
  Matrix a = inputs;
  const int last = p.num_layers() - 1;
  for (int l = 0; l <= last; ++l) {
    Matrix z = p.weights[l] * a;
    z.colwise() += p.biases[l];
    if (l < last) z = z.array().tanh().matrix();
    a = std::move(z);
  }
  return a;
}

Vector mlp_forward(const MlpParams& p, std::span<const double> input) {
  const Matrix x = Eigen::Map<const Matrix>(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  return mlp_forward(p, x).col(0);
}

std::vector<int> default_layers(int in, int out, int hidden_layers, int width) {
  std::vector<int> sizes{in};
  for (int i = 0; i < hidden_layers; ++i) sizes.push_back(width);
  sizes.push_back(out);
  return sizes;
}

}  // namespace pidon::ad
