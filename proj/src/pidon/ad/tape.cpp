#include "pidon/ad/tape.hpp"

#include <string>

#include "pidon/error.hpp"

namespace pidon::ad {

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  require(v.rows() == 1 && v.cols() == 1, ErrorCode::kInvalidInput, "node is not a scalar");
  return v(0, 0);
}

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

ParamGradient Gradients::get(const MlpParams& p) const {
  auto it = grads_.find(&p);
  if (it == grads_.end()) return ParamGradient::zeros_like(p);
  return it->second;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::scalar_constant(double v) { return constant(Matrix::Constant(1, 1, v)); }

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, std::move(backward)});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

ParamGradient& Tape::param_grad(const MlpParams& p) {
  auto it = param_grads_.find(&p);
  if (it == param_grads_.end()) it = param_grads_.emplace(&p, ParamGradient::zeros_like(p)).first;
  return it->second;
}

Gradients Tape::backward(Var loss) {
  require(loss.tape() == this, ErrorCode::kInvalidInput, "loss belongs to another tape");
  require(value(loss.id()).size() == 1, ErrorCode::kInvalidInput, "backward needs a scalar loss");
  for (auto& [p, g] : param_grads_) g = ParamGradient::zeros_like(*p);
  for (auto& n : nodes_) n.grad.resize(0, 0);

  Gradients out;
  if (!requires_grad(loss.id())) return out;
  grad(loss.id())(0, 0) = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, id);
  }
  out.grads_ = param_grads_;
  out.connected_ = !param_grads_.empty();
  return out;
}

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.tape() == b.tape(), ErrorCode::kInvalidInput, std::string(op) + ": operands on different tapes");
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::kInvalidInput,
          std::string(op) + ": shape mismatch");
}

void accumulate(Tape& t, int id, const Matrix& g) {
  if (t.requires_grad(id)) t.grad(id) += g;
}

}  // namespace

Var operator+(Var a, Var b) {
  check_same_shape(a, b, "add");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), a.requires_grad() || b.requires_grad(), [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    accumulate(t, ia, g);
    accumulate(t, ib, g);
  });
}

Var operator-(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), a.requires_grad() || b.requires_grad(), [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    accumulate(t, ia, g);
    if (t.requires_grad(ib)) t.grad(ib) -= g;
  });
}

Var operator*(Var a, Var b) {
  check_same_shape(a, b, "mul");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()), a.requires_grad() || b.requires_grad(),
                [ia, ib](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  if (t.requires_grad(ia)) t.grad(ia) += g.cwiseProduct(t.value(ib));
                  if (t.requires_grad(ib)) t.grad(ib) += g.cwiseProduct(t.value(ia));
                });
}

Var operator-(Var a) { return -1.0 * a; }

Var operator*(double c, Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(c * a.value(), a.requires_grad(), [ia, c](Tape& t, int self) { t.grad(ia) += c * t.grad(self); });
}

Var operator+(Var a, double c) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push((a.value().array() + c).matrix(), a.requires_grad(),
                [ia](Tape& t, int self) { t.grad(ia) += t.grad(self); });
}

Var operator-(double c, Var a) { return (-1.0 * a) + c; }

Var operator*(const Matrix& c, Var a) {
  require(c.rows() == a.rows() && c.cols() == a.cols(), ErrorCode::kInvalidInput, "scale: shape mismatch");
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(c.cwiseProduct(a.value()), a.requires_grad(),
                [ia, c](Tape& t, int self) { t.grad(ia) += c.cwiseProduct(t.grad(self)); });
}

Var operator+(Var a, const Matrix& c) {
  require(c.rows() == a.rows() && c.cols() == a.cols(), ErrorCode::kInvalidInput, "shift: shape mismatch");
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value() + c, a.requires_grad(), [ia](Tape& t, int self) { t.grad(ia) += t.grad(self); });
}

Var square(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value().array().square().matrix(), a.requires_grad(), [ia](Tape& t, int self) {
    t.grad(ia) += 2.0 * t.grad(self).cwiseProduct(t.value(ia));
  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(Matrix::Constant(1, 1, a.value().sum()), a.requires_grad(),
                [ia](Tape& t, int self) { t.grad(ia).array() += t.grad(self)(0, 0); });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  require(n > 0, ErrorCode::kInvalidInput, "mean of empty node");
  return (1.0 / n) * sum(a);
}

Var map(Var a, const std::function<double(double)>& f, const std::function<double(double)>& df) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value().unaryExpr(f), a.requires_grad(), [ia, df](Tape& t, int self) {
    t.grad(ia) += t.grad(self).cwiseProduct(t.value(ia).unaryExpr(df));
  });
}

Var map2(Var a, Var b, const std::function<double(double, double)>& f,
         const std::function<std::pair<double, double>(double, double)>& partials) {
  check_same_shape(a, b, "map2");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().binaryExpr(b.value(), f), a.requires_grad() || b.requires_grad(),
                [ia, ib, partials](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  const Matrix& va = t.value(ia);
                  const Matrix& vb = t.value(ib);
                  const bool ga = t.requires_grad(ia), gb = t.requires_grad(ib);
                  Matrix da = ga ? Matrix(Matrix::Zero(g.rows(), g.cols())) : Matrix();
                  Matrix db = gb ? Matrix(Matrix::Zero(g.rows(), g.cols())) : Matrix();
                  for (Eigen::Index j = 0; j < g.cols(); ++j)
                    for (Eigen::Index i = 0; i < g.rows(); ++i) {
                      const auto [pa, pb] = partials(va(i, j), vb(i, j));
                      if (ga) da(i, j) = g(i, j) * pa;
                      if (gb) db(i, j) = g(i, j) * pb;
                    }
                  if (ga) t.grad(ia) += da;
                  if (gb) t.grad(ib) += db;
                });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), ErrorCode::kInvalidInput, "slice out of range");
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value().middleCols(start, count), a.requires_grad(), [ia, start, count](Tape& t, int self) {
    t.grad(ia).middleCols(start, count) += t.grad(self);
  });
}

Var gather_cols(Var a, const std::vector<int>& cols) {
  Tape& t = *a.tape();
  const Matrix& v = a.value();
  Matrix out(v.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    require(cols[j] >= 0 && cols[j] < v.cols(), ErrorCode::kInvalidInput, "gather index out of range");
    out.col(static_cast<Eigen::Index>(j)) = v.col(cols[j]);
  }
  const int ia = a.id();
  return t.push(std::move(out), a.requires_grad(), [ia, cols](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ia);
    for (std::size_t j = 0; j < cols.size(); ++j) ga.col(cols[j]) += g.col(static_cast<Eigen::Index>(j));
  });
}

}  // namespace pidon::ad
