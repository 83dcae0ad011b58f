#pragma once

// Matrix-valued reverse-mode tape. Every node holds a dense matrix; derivative
// information with respect to network inputs travels forward as extra column
// blocks (see jet.hpp), so a single reverse sweep yields parameter gradients of
// losses built from values, first and second input derivatives.

#include <Eigen/Dense>

#include <functional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pidon/ad/mlp.hpp"

namespace pidon::ad {

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Gradients of one backward sweep, keyed by parameter set.
class Gradients {
 public:
  /// True when the loss depended on at least one trainable parameter.
  bool connected() const { return connected_; }
  bool contains(const MlpParams& p) const { return grads_.count(&p) != 0; }
  /// Gradient for `p`; zeros of the right shape when `p` did not contribute.
  ParamGradient get(const MlpParams& p) const;

 private:
  friend class Tape;
  std::unordered_map<const MlpParams*, ParamGradient> grads_;
  bool connected_ = false;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var scalar_constant(double v);

  /// Records a node. `backward` is only invoked when `requires_grad` holds and
  /// the node received a gradient.
  Var push(Matrix value, bool requires_grad, Backward backward);

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, zero-initialized on first access.
  Matrix& grad(int id);
  bool has_grad(int id) const { return nodes_[id].grad.size() != 0; }

  /// Parameters marked frozen receive no gradient and stop backpropagation.
  void freeze(const MlpParams& p) { frozen_.insert(&p); }
  bool is_frozen(const MlpParams& p) const { return frozen_.count(&p) != 0; }

  /// Accumulator for `p`, created on first use.
  ParamGradient& param_grad(const MlpParams& p);

  /// Reverse sweep from a 1x1 node.
  Gradients backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  std::vector<Node> nodes_;
  std::unordered_set<const MlpParams*> frozen_;
  std::unordered_map<const MlpParams*, ParamGradient> param_grads_;
};

/// Convenience wrapper matching the library vocabulary.
inline Gradients scalar_backward(Var loss) { return loss.tape()->backward(loss); }

// Elementwise and reduction ops. Shapes must agree exactly unless noted.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator-(Var a);
Var operator*(double c, Var a);
inline Var operator*(Var a, double c) { return c * a; }
Var operator+(Var a, double c);
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return a + (-c); }
Var operator-(double c, Var a);
/// Multiplies by a constant matrix of the same shape (no gradient to `c`).
Var operator*(const Matrix& c, Var a);
inline Var operator*(Var a, const Matrix& c) { return c * a; }
/// Adds a constant matrix of the same shape.
Var operator+(Var a, const Matrix& c);
inline Var operator-(Var a, const Matrix& c) { return a + Matrix(-c); }
inline Var operator-(const Matrix& c, Var a) { return (-1.0 * a) + c; }
inline Var operator+(const Matrix& c, Var a) { return a + c; }

Var square(Var a);
Var sum(Var a);
Var mean(Var a);

/// Elementwise f(a) with derivative df.
Var map(Var a, const std::function<double(double)>& f, const std::function<double(double)>& df);

/// Elementwise f(a, b); `partials` returns (df/da, df/db).
Var map2(Var a, Var b, const std::function<double(double, double)>& f,
         const std::function<std::pair<double, double>(double, double)>& partials);

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var gather_cols(Var a, const std::vector<int>& cols);

}  // namespace pidon::ad
