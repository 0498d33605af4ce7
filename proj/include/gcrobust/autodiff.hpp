#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gcrobust/linalg.hpp"

namespace gcr {

/// A trainable matrix with its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) { zero_grad(); }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over dense matrices.
///
/// Every op records its value and, in Record mode, a closure that pushes the
/// upstream gradient into its parents. Values are checked for NaN/Inf as
/// they are produced. Leaves created with `param()` route their gradient
/// into Parameter::grad on backward(). References returned by value() stay
/// valid while the tape grows.
class Tape {
 public:
  enum class Mode { Record, Inference };

  using BackwardFn = std::function<void(Tape&, const Matrix& upstream)>;

  explicit Tape(Mode mode = Mode::Record) : mode_(mode) {}

  bool recording() const { return mode_ == Mode::Record; }
  std::size_t size() const { return nodes_.size(); }

  Var param(Parameter& p) {
    Var v = push(p.value, "param " + p.name, nullptr);
    nodes_.back().param = &p;
    return v;
  }

  Var constant(Matrix m) { return push(std::move(m), "constant", nullptr); }

  const Matrix& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }

  /// Gradient of the last backward() target with respect to v; empty if v
  /// did not influence it.
  const Matrix& grad(Var v) const { return grads_.at(static_cast<std::size_t>(v.id)); }

  /// Records a node with a caller-supplied backward rule. The rule receives
  /// the upstream gradient and calls accumulate() on its parents.
  Var record(Matrix value, const std::string& op, BackwardFn fn) {
    return push(std::move(value), op, recording() ? std::move(fn) : BackwardFn{});
  }

  void accumulate(Var v, const Matrix& g) {
    auto& slot = grads_[static_cast<std::size_t>(v.id)];
    if (slot.size() == 0) {
      slot = g;
    } else {
      slot += g;
    }
  }

  Var matmul(Var a, Var b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (av.cols() != bv.rows()) throw DimensionError("matmul: inner dimensions differ");
    return record(av * bv, "matmul", [a, b](Tape& t, const Matrix& g) {
      t.accumulate(a, g * t.value(b).transpose());
      t.accumulate(b, t.value(a).transpose() * g);
    });
  }

  /// Constant sparse operator times x.
  Var spmm(std::shared_ptr<const SparseMatrix> s, Var x) {
    const Matrix& xv = value(x);
    if (s->cols() != xv.rows()) throw DimensionError("spmm: operator width does not match rows");
    Matrix out = (*s) * xv;
    return record(std::move(out), "spmm", [s, x](Tape& t, const Matrix& g) {
      t.accumulate(x, s->transpose() * g);
    });
  }

  Var add(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
      throw DimensionError("add: shape mismatch");
    }
    return record(value(a) + value(b), "add", [a, b](Tape& t, const Matrix& g) {
      t.accumulate(a, g);
      t.accumulate(b, g);
    });
  }

  /// wa * a + wb * b.
  Var lincomb(Var a, double wa, Var b, double wb) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
      throw DimensionError("lincomb: shape mismatch");
    }
    return record(wa * value(a) + wb * value(b), "lincomb", [a, b, wa, wb](Tape& t, const Matrix& g) {
      t.accumulate(a, wa * g);
      t.accumulate(b, wb * g);
    });
  }

  /// Adds a 1 x n row to every row of x.
  Var add_row(Var x, Var row) {
    const Matrix& xv = value(x);
    const Matrix& rv = value(row);
    if (rv.rows() != 1 || rv.cols() != xv.cols()) throw DimensionError("add_row: bias shape mismatch");
    Matrix out = xv.rowwise() + rv.row(0);
    return record(std::move(out), "add_row", [x, row](Tape& t, const Matrix& g) {
      t.accumulate(x, g);
      t.accumulate(row, g.colwise().sum());
    });
  }

  Var scale(Var x, double c) {
    return record(c * value(x), "scale", [x, c](Tape& t, const Matrix& g) { t.accumulate(x, c * g); });
  }

  /// x times a 1x1 variable.
  Var mul_scalar(Var x, Var s) {
    if (value(s).size() != 1) throw DimensionError("mul_scalar: expected a 1x1 factor");
    const double sv = value(s)(0, 0);
    return record(sv * value(x), "mul_scalar", [x, s](Tape& t, const Matrix& g) {
      t.accumulate(x, t.value(s)(0, 0) * g);
      Matrix gs(1, 1);
      gs(0, 0) = g.cwiseProduct(t.value(x)).sum();
      t.accumulate(s, gs);
    });
  }

  Var relu(Var x) {
    Matrix out = value(x).cwiseMax(0.0);
    return record(std::move(out), "relu", [x](Tape& t, const Matrix& g) {
      t.accumulate(x, Matrix((t.value(x).array() > 0.0).select(g.array(), 0.0)));
    });
  }

  /// Sum of all entries, as a 1x1 node.
  Var sum(Var x) {
    Matrix out(1, 1);
    out(0, 0) = value(x).sum();
    return record(std::move(out), "sum", [x](Tape& t, const Matrix& g) {
      t.accumulate(x, Matrix::Constant(t.value(x).rows(), t.value(x).cols(), g(0, 0)));
    });
  }

  /// Row-segment reduction: output row i sums (or averages) rows
  /// [offsets[i], offsets[i] + sizes[i]) of x.
  Var segment_reduce(Var x, std::vector<int> offsets, std::vector<int> sizes, bool mean) {
    const Matrix& xv = value(x);
    if (offsets.size() != sizes.size()) throw DimensionError("segment_reduce: offsets/sizes length mismatch");
    Matrix out(static_cast<Eigen::Index>(sizes.size()), xv.cols());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] < 1 || offsets[i] + sizes[i] > xv.rows()) throw DimensionError("segment_reduce: bad segment");
      RowVector acc = xv.middleRows(offsets[i], sizes[i]).colwise().sum();
      if (mean) acc /= static_cast<double>(sizes[i]);
      out.row(static_cast<Eigen::Index>(i)) = acc;
    }
    return record(std::move(out), mean ? "segment_mean" : "segment_sum",
                  [x, offsets = std::move(offsets), sizes = std::move(sizes), mean](Tape& t, const Matrix& g) {
                    Matrix gx = Matrix::Zero(t.value(x).rows(), t.value(x).cols());
                    for (std::size_t i = 0; i < sizes.size(); ++i) {
                      RowVector row = g.row(static_cast<Eigen::Index>(i));
                      if (mean) row /= static_cast<double>(sizes[i]);
                      gx.middleRows(offsets[i], sizes[i]).rowwise() = row;
                    }
                    t.accumulate(x, gx);
                  });
  }

  /// Propagates d(loss)/d(node) for every node and adds leaf gradients into
  /// their Parameters. May be called more than once on the same tape.
  void backward(Var loss) {
    if (!recording()) throw std::logic_error("backward: tape was recorded in inference mode");
    if (value(loss).size() != 1) throw DimensionError("backward: loss must be a 1x1 node");
    grads_.assign(nodes_.size(), Matrix());
    grads_[static_cast<std::size_t>(loss.id)] = Matrix::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
      const auto& g = grads_[static_cast<std::size_t>(i)];
      if (g.size() == 0) continue;
      auto& node = nodes_[static_cast<std::size_t>(i)];
      if (!g.allFinite()) throw NumericalError("backward: non-finite gradient at " + node.op);
      if (node.backward) node.backward(*this, g);
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      auto& node = nodes_[i];
      if (node.param != nullptr && grads_[i].size() != 0) node.param->grad += grads_[i];
    }
  }

 private:
  struct Node {
    Matrix value;
    std::string op;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  Var push(Matrix value, const std::string& op, BackwardFn fn) {
    if (!value.allFinite()) throw NumericalError("non-finite value produced by " + op);
    nodes_.push_back(Node{std::move(value), op, std::move(fn), nullptr});
    grads_.emplace_back();
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Mode mode_;
  std::deque<Node> nodes_;  // deque keeps value() references stable across pushes
  std::vector<Matrix> grads_;
};

struct GradcheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t entries_checked = 0;
};

/// Compares analytic gradients with central differences.
///
/// `loss` evaluates the scalar objective at the current parameter values;
/// `analytic` must leave d(loss)/d(param) in each Parameter::grad. Relative
/// error per entry is |a − n| / max(|a|, |n|, floor).
inline GradcheckReport gradcheck(const std::function<double()>& loss, const std::function<void()>& analytic,
                                 std::span<Parameter* const> params, double h = 1e-5, double floor = 1e-6) {
  for (Parameter* p : params) p->zero_grad();
  analytic();
  std::vector<Matrix> analytic_grads;
  analytic_grads.reserve(params.size());
  for (Parameter* p : params) analytic_grads.push_back(p->grad);

  GradcheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double saved = p.value.data()[i];
      p.value.data()[i] = saved + h;
      const double up = loss();
      p.value.data()[i] = saved - h;
      const double down = loss();
      p.value.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double exact = analytic_grads[k].data()[i];
      const double rel = std::abs(exact - numeric) / std::max({std::abs(exact), std::abs(numeric), floor});
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = p.name + "[" + std::to_string(i) + "]";
      }
      ++report.entries_checked;
    }
  }
  return report;
}

}  // namespace gcr
