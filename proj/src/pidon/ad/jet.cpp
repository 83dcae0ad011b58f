#include "pidon/ad/jet.hpp"

#include <algorithm>
#include <string>

#include "pidon/error.hpp"

namespace pidon::ad {

JetLayout::JetLayout(std::vector<TrackedInput> tracked) : tracked_(std::move(tracked)) {
  int c = 1;
  for (const auto& t : tracked_) {
    require(t.order == 1 || t.order == 2, ErrorCode::kInvalidInput, "jet order must be 1 or 2");
    require(t.index >= 0, ErrorCode::kInvalidInput, "tracked index must be non-negative");
    d1_.push_back(c++);
    d2_.push_back(t.order == 2 ? c++ : -1);
  }
  channels_ = c;
}

int JetLayout::find(int index) const {
  for (std::size_t k = 0; k < tracked_.size(); ++k)
    if (tracked_[k].index == index) return static_cast<int>(k);
  return -1;
}

bool JetLayout::operator==(const JetLayout& o) const {
  if (tracked_.size() != o.tracked_.size()) return false;
  for (std::size_t k = 0; k < tracked_.size(); ++k)
    if (tracked_[k].index != o.tracked_[k].index || tracked_[k].order != o.tracked_[k].order) return false;
  return true;
}

JetBatch seed_inputs(Tape& tape, const Matrix& inputs, const JetLayout& layout) {
  const Eigen::Index P = inputs.cols();
  Matrix data = Matrix::Zero(inputs.rows(), layout.channels() * P);
  data.leftCols(P) = inputs;
  for (std::size_t k = 0; k < layout.tracked().size(); ++k) {
    const int idx = layout.tracked()[k].index;
    require(idx < inputs.rows(), ErrorCode::kInvalidInput,
            "tracked input " + std::to_string(idx) + " out of range");
    data.block(idx, layout.d1_channel(k) * P, 1, P).setOnes();
  }
  return JetBatch{tape.constant(std::move(data)), layout, P};
}

JetBatch as_jet(Var values) { return JetBatch{values, JetLayout{}, values.cols()}; }

JetBatch linear_jet(Tape& tape, const MlpParams& p, int layer, const JetBatch& x) {
  const Matrix& W = p.weights[layer];
  const Vector& b = p.biases[layer];
  require(x.width() == W.cols(), ErrorCode::kInvalidInput,
          "layer " + std::to_string(layer) + " expects width " + std::to_string(W.cols()) + ", got " +
              std::to_string(x.width()));
  const Eigen::Index P = x.points;
  const Matrix& X = x.data.value();
  Matrix Y(W.rows(), X.cols());
  {
    // same expression as mlp_forward so the value block matches it bitwise
    Matrix z = W * Matrix(X.leftCols(P));
    z.colwise() += b;
    Y.leftCols(P) = z;
  }
  if (X.cols() > P) Y.rightCols(X.cols() - P).noalias() = W * X.rightCols(X.cols() - P);

  const bool train = !tape.is_frozen(p);
  const int ix = x.data.id();
  const MlpParams* pp = &p;
  Var y = tape.push(std::move(Y), train || x.data.requires_grad(), [pp, layer, ix, P, train](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    if (train) {
      ParamGradient& pg = t.param_grad(*pp);
      pg.weights[layer].noalias() += G * t.value(ix).transpose();
      pg.biases[layer] += G.leftCols(P).rowwise().sum();
    }
    if (t.requires_grad(ix)) t.grad(ix).noalias() += pp->weights[layer].transpose() * G;
  });
  return JetBatch{y, x.layout, P};
}

JetBatch tanh_jet(Tape& tape, const JetBatch& z) {
  const Eigen::Index P = z.points;
  const JetLayout& L = z.layout;
  const Matrix& Z = z.data.value();
  Matrix Y(Z.rows(), Z.cols());
  const Matrix zv = Z.leftCols(P);
  const Matrix s = zv.array().tanh().matrix();
  Y.leftCols(P) = s;
  const Eigen::ArrayXXd g = 1.0 - s.array().square();
  for (std::size_t k = 0; k < L.tracked().size(); ++k) {
    const int c1 = L.d1_channel(k), c2 = L.d2_channel(k);
    const auto z1 = Z.middleCols(c1 * P, P).array();
    Y.middleCols(c1 * P, P) = (g * z1).matrix();
    if (c2 >= 0) {
      const auto z2 = Z.middleCols(c2 * P, P).array();
      Y.middleCols(c2 * P, P) = (g * z2 - 2.0 * s.array() * g * z1.square()).matrix();
    }
  }
  const int iz = z.data.id();
  Var y = tape.push(std::move(Y), z.data.requires_grad(), [iz, P, L](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& Zin = t.value(iz);
    const auto s = t.value(self).leftCols(P).array();
    const Eigen::ArrayXXd g = 1.0 - s.square();
    Matrix& GZ = t.grad(iz);
    Eigen::ArrayXXd gz = G.leftCols(P).array() * g;
    for (std::size_t k = 0; k < L.tracked().size(); ++k) {
      const int c1 = L.d1_channel(k), c2 = L.d2_channel(k);
      const auto z1 = Zin.middleCols(c1 * P, P).array();
      const auto g1 = G.middleCols(c1 * P, P).array();
      // s1 = g z1
      gz += g1 * (-2.0) * s * g * z1;
      Eigen::ArrayXXd gz1 = g1 * g;
      if (c2 >= 0) {
        const auto z2 = Zin.middleCols(c2 * P, P).array();
        const auto g2 = G.middleCols(c2 * P, P).array();
        // s2 = g z2 - 2 s g z1^2
        gz += g2 * (-2.0 * s * g * z2 - 2.0 * (1.0 - 3.0 * s.square()) * g * z1.square());
        gz1 += g2 * (-4.0) * s * g * z1;
        GZ.middleCols(c2 * P, P).array() += g2 * g;
      }
      GZ.middleCols(c1 * P, P).array() += gz1;
    }
    GZ.leftCols(P).array() += gz;
  });
  return JetBatch{y, L, P};
}

JetBatch mlp_forward_jet(Tape& tape, const MlpParams& p, const JetBatch& x) {
  JetBatch a = x;
  const int last = p.num_layers() - 1;
  for (int l = 0; l <= last; ++l) {
    a = linear_jet(tape, p, l, a);
    if (l < last) a = tanh_jet(tape, a);
  }
  return a;
}

JetBatch scale_channels(Tape& tape, const JetBatch& x, Var m) {
  const Eigen::Index P = x.points;
  const int C = x.layout.channels();
  require(m.rows() == x.width() && m.cols() == P, ErrorCode::kInvalidInput, "scale_channels: shape mismatch");
  const Matrix& X = x.data.value();
  const Matrix& M = m.value();
  Matrix Y(X.rows(), X.cols());
  for (int c = 0; c < C; ++c) Y.middleCols(c * P, P) = X.middleCols(c * P, P).cwiseProduct(M);
  const int ix = x.data.id(), im = m.id();
  Var y = tape.push(std::move(Y), x.data.requires_grad() || m.requires_grad(), [ix, im, P, C](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    if (t.requires_grad(ix)) {
      const Matrix& M = t.value(im);
      Matrix& GX = t.grad(ix);
      for (int c = 0; c < C; ++c) GX.middleCols(c * P, P) += G.middleCols(c * P, P).cwiseProduct(M);
    }
    if (t.requires_grad(im)) {
      const Matrix& X = t.value(ix);
      Matrix& GM = t.grad(im);
      for (int c = 0; c < C; ++c) GM += G.middleCols(c * P, P).cwiseProduct(X.middleCols(c * P, P));
    }
  });
  return JetBatch{y, x.layout, P};
}

JetBatch gather_points(Tape& tape, const JetBatch& x, const std::vector<int>& points) {
  const auto P = static_cast<int>(x.points);
  const auto n = static_cast<int>(points.size());
  std::vector<int> cols;
  cols.reserve(static_cast<std::size_t>(n) * x.layout.channels());
  for (int c = 0; c < x.layout.channels(); ++c)
    for (int j : points) {
      require(j >= 0 && j < P, ErrorCode::kInvalidInput, "gather_points index out of range");
      cols.push_back(c * P + j);
    }
  (void)tape;
  return JetBatch{gather_cols(x.data, cols), x.layout, n};
}

JetBatch scatter_points(Tape& tape, const std::vector<JetBatch>& parts, const std::vector<std::vector<int>>& idx,
                        Eigen::Index total_points) {
  require(!parts.empty() && parts.size() == idx.size(), ErrorCode::kInvalidInput, "scatter_points: bad partition");
  const JetLayout layout = parts.front().layout;
  const int C = layout.channels();
  const Eigen::Index width = parts.front().width();
  const Eigen::Index P = total_points;
  Matrix Y = Matrix::Zero(width, C * P);
  std::vector<int> ids;
  bool needs = false;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const JetBatch& part = parts[k];
    require(part.layout == layout && part.width() == width &&
                part.points == static_cast<Eigen::Index>(idx[k].size()),
            ErrorCode::kInvalidInput, "scatter_points: inconsistent part");
    const Matrix& V = part.data.value();
    const Eigen::Index n = part.points;
    for (int c = 0; c < C; ++c)
      for (Eigen::Index j = 0; j < n; ++j) Y.col(c * P + idx[k][j]) = V.col(c * n + j);
    ids.push_back(part.data.id());
    needs = needs || part.data.requires_grad();
  }
  Var y = tape.push(std::move(Y), needs, [ids, idx, C, P](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.requires_grad(ids[k])) continue;
      Matrix& GP = t.grad(ids[k]);
      const auto n = static_cast<Eigen::Index>(idx[k].size());
      for (int c = 0; c < C; ++c)
        for (Eigen::Index j = 0; j < n; ++j) GP.col(c * n + j) += G.col(c * P + idx[k][j]);
    }
  });
  return JetBatch{y, layout, P};
}

JetBatch sum_rows(Tape& tape, const JetBatch& x) {
  const int ix = x.data.id();
  Var y = tape.push(x.data.value().colwise().sum(), x.data.requires_grad(), [ix](Tape& t, int self) {
    t.grad(ix).rowwise() += t.grad(self).row(0);
  });
  return JetBatch{y, x.layout, x.points};
}

std::vector<Jet2<double>> mlp_forward_jet(const MlpParams& p, std::span<const double> input,
                                          const JetLayout& layout) {
  require(static_cast<int>(input.size()) == p.input_size(), ErrorCode::kInvalidInput,
          "input width does not match network input");
  Tape tape;
  const Matrix x = Eigen::Map<const Matrix>(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  const JetBatch out = mlp_forward_jet(tape, p, seed_inputs(tape, x, layout));
  const Matrix& V = out.data.value();
  std::vector<Jet2<double>> jets(static_cast<std::size_t>(p.output_size()));
  for (Eigen::Index o = 0; o < V.rows(); ++o) {
    auto& j = jets[static_cast<std::size_t>(o)];
    j.value = V(o, 0);
    for (std::size_t k = 0; k < layout.tracked().size(); ++k) {
      j.d1.push_back(V(o, layout.d1_channel(k)));
      const int c2 = layout.d2_channel(k);
      j.d2.push_back(c2 >= 0 ? V(o, c2) : 0.0);
    }
  }
  return jets;
}

}  // namespace pidon::ad
