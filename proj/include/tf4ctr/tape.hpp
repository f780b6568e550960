#pragma once

#include "tf4ctr/rng.hpp"
#include "tf4ctr/types.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace tf4ctr {

// Reverse-mode tape over dense matrices.
//
// Nodes are appended in topological order (inputs always precede consumers)
// and backward() replays them in exact reverse order. Leaf gradients are never
// implicitly cleared — the trainer zeroes parameters between steps — while op
// adjoints are rebuilt on each backward pass.
//
// The op set is intentionally limited to what the model needs; there is no
// general broadcasting beyond scalar-with-tensor.
template <class Scalar>
class Tape {
 public:
  using M = Mat<Scalar>;

  struct Node {
    M value;
    M grad;  // empty while gradients are disabled
    std::vector<int> inputs;
    std::function<void(Tape&, int)> backward;  // null for leaves
    bool trainable = false;
  };

  int leaf(M v, bool trainable = false) {
    check_value(v);
    Node n;
    n.value = std::move(v);
    n.trainable = trainable;
    if (grad_enabled) n.grad = M::Zero(n.value.rows(), n.value.cols());
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

  int constant(M v) { return leaf(std::move(v), false); }

  // Low-level append; also the hook tests use to register deliberately broken
  // backward rules as negative controls.
  int apply(M value, std::vector<int> inputs, std::function<void(Tape&, int)> bwd) {
    check_value(value);
    Node n;
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    if (grad_enabled) {
      n.grad = M::Zero(n.value.rows(), n.value.cols());
      n.backward = std::move(bwd);
    }
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

  const M& value(int id) const { return nodes_[std::size_t(id)].value; }
  M& value_mut(int id) { return nodes_[std::size_t(id)].value; }
  const M& grad(int id) const { return nodes_[std::size_t(id)].grad; }
  M& grad_mut(int id) { return nodes_[std::size_t(id)].grad; }
  bool trainable(int id) const { return nodes_[std::size_t(id)].trainable; }
  const std::vector<int>& inputs(int id) const { return nodes_[std::size_t(id)].inputs; }

  int size() const { return int(nodes_.size()); }

  // Drops every node with id >= mark. Leaves below the mark keep their
  // accumulated gradients.
  void truncate(int mark) {
    if (mark < 0 || mark > size()) throw Error("tape truncate: bad mark");
    nodes_.resize(std::size_t(mark));
  }

  void zero_grad() {
    for (auto& n : nodes_)
      if (n.grad.size() > 0) n.grad.setZero();
  }

  // Seeds d(loss) = 1 and replays registered ops in reverse. Op-node adjoints
  // are recomputed from scratch on every call; leaf gradients accumulate, so
  // two backward passes double every parameter gradient exactly.
  void backward(int loss) {
    if (!grad_enabled) throw Error("backward: gradients are disabled");
    if (value(loss).size() != 1) throw DimensionError("backward: loss node must be scalar");
    for (int i = 0; i <= loss; ++i) {
      auto& n = nodes_[std::size_t(i)];
      if (n.backward && n.grad.size() > 0) n.grad.setZero();
    }
    nodes_[std::size_t(loss)].grad(0, 0) += Scalar(1);
    for (int i = loss; i >= 0; --i) {
      auto& n = nodes_[std::size_t(i)];
      if (n.backward) n.backward(*this, i);
    }
  }

  bool grad_enabled = true;
  bool check_finite = true;

 private:
  void check_value(const M& v) const {
    if (check_finite && !v.allFinite())
      throw DomainError("tape: non-finite value produced");
  }

  std::vector<Node> nodes_;
};

struct NoGradGuard {
  template <class S>
  explicit NoGradGuard(Tape<S>& t) : flag_(&t.grad_enabled), prev_(t.grad_enabled) {
    t.grad_enabled = false;
  }
  ~NoGradGuard() { *flag_ = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool* flag_;
  bool prev_;
};

// ---------------------------------------------------------------------------
// Ops. Free functions append one node and return its id.
// ---------------------------------------------------------------------------

template <class S>
int matmul(Tape<S>& t, int a, int b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.cols() != B.rows()) throw DimensionError("matmul: inner dimensions differ");
  Mat<S> out = A * B;
  return t.apply(std::move(out), {a, b}, [a, b](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    t.grad_mut(a).noalias() += g * t.value(b).transpose();
    t.grad_mut(b).noalias() += t.value(a).transpose() * g;
  });
}

namespace detail {

template <class S>
inline bool is_scalar_node(const Tape<S>& t, int id) {
  return t.value(id).size() == 1;
}

template <class S>
inline void require_same_shape(const Tape<S>& t, int a, int b, const char* op) {
  if (t.value(a).rows() != t.value(b).rows() || t.value(a).cols() != t.value(b).cols())
    throw DimensionError(std::string(op) + ": shapes differ and neither operand is scalar");
}

}  // namespace detail

// add/sub/mul accept equal shapes or a 1x1 operand broadcast over the other.
template <class S>
int add(Tape<S>& t, int a, int b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (detail::is_scalar_node(t, a) && !detail::is_scalar_node(t, b)) return add(t, b, a);
  Mat<S> out;
  if (detail::is_scalar_node(t, b) && !detail::is_scalar_node(t, a)) {
    out = A.array() + B(0, 0);
    return t.apply(std::move(out), {a, b}, [a, b](Tape<S>& t, int self) {
      const auto& g = t.grad(self);
      t.grad_mut(a) += g;
      t.grad_mut(b)(0, 0) += g.sum();
    });
  }
  detail::require_same_shape(t, a, b, "add");
  out = A + B;
  return t.apply(std::move(out), {a, b}, [a, b](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    t.grad_mut(a) += g;
    t.grad_mut(b) += g;
  });
}

template <class S>
int sub(Tape<S>& t, int a, int b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  Mat<S> out;
  if (detail::is_scalar_node(t, b) && !detail::is_scalar_node(t, a)) {
    out = A.array() - B(0, 0);
    return t.apply(std::move(out), {a, b}, [a, b](Tape<S>& t, int self) {
      const auto& g = t.grad(self);
      t.grad_mut(a) += g;
      t.grad_mut(b)(0, 0) -= g.sum();
    });
  }
  if (detail::is_scalar_node(t, a) && !detail::is_scalar_node(t, b)) {
    out = (A(0, 0) - B.array()).matrix();
    return t.apply(std::move(out), {a, b}, [a, b](Tape<S>& t, int self) {
      const auto& g = t.grad(self);
      t.grad_mut(a)(0, 0) += g.sum();
      t.grad_mut(b) -= g;
    });
  }
  detail::require_same_shape(t, a, b, "sub");
  out = A - B;
  return t.apply(std::move(out), {a, b}, [a, b](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    t.grad_mut(a) += g;
    t.grad_mut(b) -= g;
  });
}

template <class S>
int mul(Tape<S>& t, int a, int b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (detail::is_scalar_node(t, a) && !detail::is_scalar_node(t, b)) return mul(t, b, a);
  Mat<S> out;
  if (detail::is_scalar_node(t, b) && !detail::is_scalar_node(t, a)) {
    out = A * B(0, 0);
    return t.apply(std::move(out), {a, b}, [a, b](Tape<S>& t, int self) {
      const auto& g = t.grad(self);
      t.grad_mut(a) += g * t.value(b)(0, 0);
      t.grad_mut(b)(0, 0) += g.cwiseProduct(t.value(a)).sum();
    });
  }
  detail::require_same_shape(t, a, b, "mul");
  out = A.cwiseProduct(B);
  return t.apply(std::move(out), {a, b}, [a, b](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    t.grad_mut(a) += g.cwiseProduct(t.value(b));
    t.grad_mut(b) += g.cwiseProduct(t.value(a));
  });
}

template <class S>
int relu(Tape<S>& t, int x) {
  Mat<S> out = t.value(x).cwiseMax(S(0));
  return t.apply(std::move(out), {x}, [x](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    t.grad_mut(x).array() +=
        g.array() * (t.value(x).array() > S(0)).template cast<S>();
  });
}

template <class S>
int sigmoid(Tape<S>& t, int x) {
  // Branching form avoids exp overflow on either tail.
  Mat<S> out = t.value(x).unaryExpr([](S v) {
    if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
    S e = std::exp(v);
    return e / (S(1) + e);
  });
  return t.apply(std::move(out), {x}, [x](Tape<S>& t, int self) {
    const auto& s = t.value(self).array();
    t.grad_mut(x).array() += t.grad(self).array() * s * (S(1) - s);
  });
}

template <class S>
int log_(Tape<S>& t, int x) {
  if ((t.value(x).array() <= S(0)).any())
    throw DomainError("log: non-positive input (clamp probabilities first)");
  Mat<S> out = t.value(x).array().log();
  return t.apply(std::move(out), {x}, [x](Tape<S>& t, int self) {
    t.grad_mut(x).array() += t.grad(self).array() / t.value(x).array();
  });
}

template <class S>
int softplus(Tape<S>& t, int x) {
  Mat<S> out = t.value(x).unaryExpr([](S v) {
    return v > S(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  });
  return t.apply(std::move(out), {x}, [x](Tape<S>& t, int self) {
    t.grad_mut(x).array() +=
        t.grad(self).array() *
        t.value(x).unaryExpr([](S v) {
          if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
          S e = std::exp(v);
          return e / (S(1) + e);
        }).array();
  });
}

// x^p elementwise for constant p. p = 0 yields exactly 1 (and zero gradient).
template <class S>
int pow_scalar(Tape<S>& t, int x, S p) {
  Mat<S> out = t.value(x).array().pow(p);
  return t.apply(std::move(out), {x}, [x, p](Tape<S>& t, int self) {
    if (p == S(0)) return;
    t.grad_mut(x).array() +=
        t.grad(self).array() * p * t.value(x).array().pow(p - S(1));
  });
}

template <class S>
int add_scalar(Tape<S>& t, int x, S c) {
  Mat<S> out = t.value(x).array() + c;
  return t.apply(std::move(out), {x},
                 [x](Tape<S>& t, int self) { t.grad_mut(x) += t.grad(self); });
}

template <class S>
int mul_scalar(Tape<S>& t, int x, S c) {
  Mat<S> out = t.value(x) * c;
  return t.apply(std::move(out), {x}, [x, c](Tape<S>& t, int self) {
    t.grad_mut(x) += t.grad(self) * c;
  });
}

// Gradient passes only strictly inside (lo, hi).
template <class S>
int clamp(Tape<S>& t, int x, S lo, S hi) {
  Mat<S> out = t.value(x).cwiseMax(lo).cwiseMin(hi);
  return t.apply(std::move(out), {x}, [x, lo, hi](Tape<S>& t, int self) {
    const auto& v = t.value(x).array();
    t.grad_mut(x).array() +=
        t.grad(self).array() * ((v > lo) && (v < hi)).template cast<S>();
  });
}

template <class S>
int concat_cols(Tape<S>& t, const std::vector<int>& parts) {
  if (parts.empty()) throw Error("concat: empty part list");
  const Eigen::Index rows = t.value(parts[0]).rows();
  Eigen::Index width = 0;
  for (int p : parts) {
    if (t.value(p).rows() != rows) throw DimensionError("concat: leading dimensions differ");
    width += t.value(p).cols();
  }
  Mat<S> out(rows, width);
  Eigen::Index off = 0;
  for (int p : parts) {
    out.middleCols(off, t.value(p).cols()) = t.value(p);
    off += t.value(p).cols();
  }
  return t.apply(std::move(out), parts, [parts](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    Eigen::Index off = 0;
    for (int p : parts) {
      Eigen::Index w = t.value(p).cols();
      t.grad_mut(p) += g.middleCols(off, w);
      off += w;
    }
  });
}

template <class S>
int slice_cols(Tape<S>& t, int x, Eigen::Index begin, Eigen::Index width) {
  if (begin < 0 || width < 1 || begin + width > t.value(x).cols())
    throw DimensionError("slice_cols: range out of bounds");
  Mat<S> out = t.value(x).middleCols(begin, width);
  return t.apply(std::move(out), {x}, [x, begin, width](Tape<S>& t, int self) {
    t.grad_mut(x).middleCols(begin, width) += t.grad(self);
  });
}

// Row-wise softmax with max subtraction.
template <class S>
int softmax_rows(Tape<S>& t, int x) {
  const auto& X = t.value(x);
  if (X.cols() < 1) throw DimensionError("softmax_rows: needs at least one column");
  Mat<S> out = (X.array().colwise() - X.array().rowwise().maxCoeff()).exp();
  out.array().colwise() /= out.array().rowwise().sum();
  return t.apply(std::move(out), {x}, [x](Tape<S>& t, int self) {
    const auto& y = t.value(self);
    const auto& g = t.grad(self);
    Eigen::Array<S, Eigen::Dynamic, 1> dots = g.cwiseProduct(y).array().rowwise().sum();
    t.grad_mut(x).array() += y.array() * (g.array().colwise() - dots);
  });
}

// Per-row scalar scale: out[r, :] = s[r, 0] * x[r, :].
template <class S>
int scale_rows(Tape<S>& t, int s, int x) {
  const auto& Sv = t.value(s);
  const auto& X = t.value(x);
  if (Sv.cols() != 1 || Sv.rows() != X.rows())
    throw DimensionError("scale_rows: scale must be n x 1 matching x rows");
  Mat<S> out = X.array().colwise() * Sv.col(0).array();
  return t.apply(std::move(out), {s, x}, [s, x](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    t.grad_mut(x).array() += g.array().colwise() * t.value(s).col(0).array();
    t.grad_mut(s).col(0).array() +=
        g.cwiseProduct(t.value(x)).array().rowwise().sum();
  });
}

// Broadcast a 1 x k row (bias) over every row of x.
template <class S>
int add_rowvec(Tape<S>& t, int x, int row) {
  const auto& X = t.value(x);
  const auto& R = t.value(row);
  if (R.rows() != 1 || R.cols() != X.cols())
    throw DimensionError("add_rowvec: bias must be 1 x cols(x)");
  Mat<S> out = X.rowwise() + R.row(0);
  return t.apply(std::move(out), {x, row}, [x, row](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    t.grad_mut(x) += g;
    t.grad_mut(row).row(0) += g.colwise().sum();
  });
}

template <class S>
int sum_all(Tape<S>& t, int x) {
  Mat<S> out(1, 1);
  out(0, 0) = t.value(x).sum();
  return t.apply(std::move(out), {x}, [x](Tape<S>& t, int self) {
    t.grad_mut(x).array() += t.grad(self)(0, 0);
  });
}

template <class S>
int mean_all(Tape<S>& t, int x) {
  const S inv = S(1) / S(t.value(x).size());
  Mat<S> out(1, 1);
  out(0, 0) = t.value(x).sum() * inv;
  return t.apply(std::move(out), {x}, [x, inv](Tape<S>& t, int self) {
    t.grad_mut(x).array() += t.grad(self)(0, 0) * inv;
  });
}

// Embedding gather: out[r, :] = table[ids[r], :]. Backward scatters into the
// looked-up rows only; untouched rows keep exactly zero gradient.
template <class S>
int embed(Tape<S>& t, int table, std::vector<std::int32_t> ids) {
  const auto& T = t.value(table);
  for (std::int32_t id : ids)
    if (id < 0 || id >= T.rows()) throw IndexError("embed: id out of range");
  Mat<S> out(Eigen::Index(ids.size()), T.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) out.row(Eigen::Index(r)) = T.row(ids[r]);
  auto shared = std::make_shared<const std::vector<std::int32_t>>(std::move(ids));
  return t.apply(std::move(out), {table}, [table, shared](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    auto& gt = t.grad_mut(table);
    const auto& v = *shared;
    for (std::size_t r = 0; r < v.size(); ++r) gt.row(v[r]) += g.row(Eigen::Index(r));
  });
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

// Xavier-uniform: U(-sqrt(6/(fan_in+fan_out)), +...). Row-major fill order,
// so a given (seed, shape) always yields the same tensor.
template <class S>
Mat<S> xavier_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  if (rows < 1 || cols < 1) throw DimensionError("xavier_init: needs a 2-D shape");
  const double limit = std::sqrt(6.0 / double(rows + cols));
  Mat<S> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = S(rng.uniform(-limit, limit));
  return m;
}

using TapeR = Tape<Real>;

}  // namespace tf4ctr
