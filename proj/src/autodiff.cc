#include "gpl/autodiff.h"

#include <cmath>
#include <limits>
#include <utility>

#include "gpl/errors.h"

namespace gpl {
namespace ad {

namespace {

constexpr double kCosineEps = 1e-12;

void RequireSameTape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw InvalidArgument("ad: vars from different tapes");
}

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch(std::string("ad::") + op + ": shape mismatch " +
                            std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  }
}

}  // namespace

const Matrix& Var::value() const { return tape_->ValueOf(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw DimensionMismatch("ad: scalar() on non-1x1 var");
  return v(0, 0);
}

Var Tape::Leaf(Matrix value) { return Record(std::move(value), true, nullptr); }

Var Tape::Constant(Matrix value) { return Record(std::move(value), false, nullptr); }

Var Tape::Record(Matrix value, bool requires_grad, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::Accumulate(const Var& v, const Matrix& grad) {
  Node& node = nodes_[v.id_];
  if (!node.requires_grad) return;
  if (!node.has_grad) {
    node.grad = grad;
    node.has_grad = true;
  } else {
    node.grad += grad;
  }
}

void Tape::Backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw DimensionMismatch("ad: Backward() requires a 1x1 root");
  }
  for (Node& node : nodes_) {
    node.has_grad = false;
    node.grad.resize(0, 0);
  }
  Accumulate(root, Matrix::Ones(1, 1));
  for (int id = root.id_; id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.has_grad || !node.backward) continue;
    node.backward(node.grad);
  }
}

Matrix Tape::Grad(const Var& v) const {
  const Node& node = nodes_[v.id_];
  if (!node.has_grad) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

namespace {

bool AnyGrad(std::initializer_list<Var> vars) {
  for (const Var& v : vars) {
    if (v.tape()->RequiresGrad(v)) return true;
  }
  return false;
}

}  // namespace

Var MatMul(const Var& a, const Var& b) {
  RequireSameTape(a, b);
  if (a.cols() != b.rows()) {
    throw DimensionMismatch("ad::MatMul: inner dimensions " + std::to_string(a.cols()) +
                            " vs " + std::to_string(b.rows()));
  }
  Tape* t = a.tape();
  return t->Record(a.value() * b.value(), AnyGrad({a, b}), [t, a, b](const Matrix& g) {
    if (t->RequiresGrad(a)) t->Accumulate(a, g * b.value().transpose());
    if (t->RequiresGrad(b)) t->Accumulate(b, a.value().transpose() * g);
  });
}

Var Add(const Var& a, const Var& b) {
  RequireSameTape(a, b);
  RequireSameShape(a, b, "Add");
  Tape* t = a.tape();
  return t->Record(a.value() + b.value(), AnyGrad({a, b}), [t, a, b](const Matrix& g) {
    t->Accumulate(a, g);
    t->Accumulate(b, g);
  });
}

Var Sub(const Var& a, const Var& b) {
  RequireSameTape(a, b);
  RequireSameShape(a, b, "Sub");
  Tape* t = a.tape();
  return t->Record(a.value() - b.value(), AnyGrad({a, b}), [t, a, b](const Matrix& g) {
    t->Accumulate(a, g);
    t->Accumulate(b, -g);
  });
}

Var Hadamard(const Var& a, const Var& b) {
  RequireSameTape(a, b);
  RequireSameShape(a, b, "Hadamard");
  Tape* t = a.tape();
  return t->Record(a.value().cwiseProduct(b.value()), AnyGrad({a, b}),
                   [t, a, b](const Matrix& g) {
                     if (t->RequiresGrad(a)) t->Accumulate(a, g.cwiseProduct(b.value()));
                     if (t->RequiresGrad(b)) t->Accumulate(b, g.cwiseProduct(a.value()));
                   });
}

Var Scale(const Var& a, double s) {
  Tape* t = a.tape();
  return t->Record(a.value() * s, AnyGrad({a}),
                   [t, a, s](const Matrix& g) { t->Accumulate(a, g * s); });
}

Var AddScalar(const Var& a, double s) {
  Tape* t = a.tape();
  return t->Record(a.value().array() + s, AnyGrad({a}),
                   [t, a](const Matrix& g) { t->Accumulate(a, g); });
}

Var AddRowBroadcast(const Var& a, const Var& row) {
  RequireSameTape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionMismatch("ad::AddRowBroadcast: row must be 1 x " + std::to_string(a.cols()));
  }
  Tape* t = a.tape();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t->Record(std::move(out), AnyGrad({a, row}), [t, a, row](const Matrix& g) {
    t->Accumulate(a, g);
    if (t->RequiresGrad(row)) t->Accumulate(row, g.colwise().sum());
  });
}

Var MulRowBroadcast(const Var& a, const Var& row) {
  RequireSameTape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionMismatch("ad::MulRowBroadcast: row must be 1 x " + std::to_string(a.cols()));
  }
  Tape* t = a.tape();
  Matrix out = a.value().array().rowwise() * row.value().row(0).array();
  return t->Record(std::move(out), AnyGrad({a, row}), [t, a, row](const Matrix& g) {
    if (t->RequiresGrad(a)) {
      Matrix ga = g.array().rowwise() * row.value().row(0).array();
      t->Accumulate(a, ga);
    }
    if (t->RequiresGrad(row)) {
      t->Accumulate(row, g.cwiseProduct(a.value()).colwise().sum());
    }
  });
}

Var LeakyRelu(const Var& a, double slope) {
  Tape* t = a.tape();
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  return t->Record(std::move(out), AnyGrad({a}), [t, a, slope](const Matrix& g) {
    Matrix d = a.value().unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; });
    t->Accumulate(a, g.cwiseProduct(d));
  });
}

Var Exp(const Var& a) {
  Tape* t = a.tape();
  Matrix out = a.value().array().exp();
  Matrix saved = out;
  return t->Record(std::move(out), AnyGrad({a}), [t, a, saved](const Matrix& g) {
    t->Accumulate(a, g.cwiseProduct(saved));
  });
}

Var Log(const Var& a) {
  Tape* t = a.tape();
  return t->Record(a.value().array().log(), AnyGrad({a}), [t, a](const Matrix& g) {
    t->Accumulate(a, g.cwiseQuotient(a.value()));
  });
}

Var Transpose(const Var& a) {
  Tape* t = a.tape();
  return t->Record(a.value().transpose(), AnyGrad({a}),
                   [t, a](const Matrix& g) { t->Accumulate(a, g.transpose()); });
}

Var VStack(const Var& top, const Var& bottom) {
  RequireSameTape(top, bottom);
  if (top.cols() != bottom.cols()) {
    throw DimensionMismatch("ad::VStack: column counts " + std::to_string(top.cols()) + " vs " +
                            std::to_string(bottom.cols()));
  }
  Tape* t = top.tape();
  const Eigen::Index n_top = top.rows();
  const Eigen::Index n_bottom = bottom.rows();
  Matrix out(n_top + n_bottom, top.cols());
  out << top.value(), bottom.value();
  return t->Record(std::move(out), AnyGrad({top, bottom}),
                   [t, top, bottom, n_top, n_bottom](const Matrix& g) {
                     if (t->RequiresGrad(top)) t->Accumulate(top, g.topRows(n_top));
                     if (t->RequiresGrad(bottom)) t->Accumulate(bottom, g.bottomRows(n_bottom));
                   });
}

Var OuterSum(const Var& col_a, const Var& col_b) {
  RequireSameTape(col_a, col_b);
  if (col_a.cols() != 1 || col_b.cols() != 1) {
    throw DimensionMismatch("ad::OuterSum: inputs must be column vectors");
  }
  Tape* t = col_a.tape();
  const Eigen::Index n = col_a.rows();
  const Eigen::Index m = col_b.rows();
  Matrix out = col_a.value() * Matrix::Ones(1, m) + Matrix::Ones(n, 1) * col_b.value().transpose();
  return t->Record(std::move(out), AnyGrad({col_a, col_b}), [t, col_a, col_b](const Matrix& g) {
    if (t->RequiresGrad(col_a)) t->Accumulate(col_a, g.rowwise().sum());
    if (t->RequiresGrad(col_b)) t->Accumulate(col_b, g.colwise().sum().transpose());
  });
}

Var MaskedSoftmaxRows(const Var& scores, const Matrix& mask) {
  if (scores.rows() != mask.rows() || scores.cols() != mask.cols()) {
    throw DimensionMismatch("ad::MaskedSoftmaxRows: mask shape mismatch");
  }
  Tape* t = scores.tape();
  const Matrix& s = scores.value();
  Matrix out = Matrix::Zero(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    double max_score = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (mask(i, j) != 0.0) max_score = std::max(max_score, s(i, j));
    }
    if (!std::isfinite(max_score)) {
      throw InvalidArgument("ad::MaskedSoftmaxRows: empty mask row " + std::to_string(i));
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (mask(i, j) != 0.0) {
        out(i, j) = std::exp(s(i, j) - max_score);
        total += out(i, j);
      }
    }
    out.row(i) /= total;
  }
  Matrix saved = out;
  return t->Record(std::move(out), AnyGrad({scores}), [t, scores, saved](const Matrix& g) {
    // d s_ij = y_ij (g_ij - sum_k g_ik y_ik); masked entries have y = 0.
    Eigen::VectorXd inner = g.cwiseProduct(saved).rowwise().sum();
    Matrix d = saved.cwiseProduct(g - inner * Matrix::Ones(1, g.cols()));
    t->Accumulate(scores, d);
  });
}

Var SumRows(const Var& a) {
  Tape* t = a.tape();
  const Eigen::Index n = a.rows();
  return t->Record(a.value().colwise().sum(), AnyGrad({a}), [t, a, n](const Matrix& g) {
    t->Accumulate(a, Matrix::Ones(n, 1) * g);
  });
}

Var MeanRows(const Var& a) {
  if (a.rows() == 0) throw InvalidArgument("ad::MeanRows: empty input");
  return Scale(SumRows(a), 1.0 / static_cast<double>(a.rows()));
}

Var Row(const Var& a, Eigen::Index i) {
  if (i < 0 || i >= a.rows()) throw IndexOutOfRange("ad::Row: index out of range");
  Tape* t = a.tape();
  return t->Record(a.value().row(i), AnyGrad({a}), [t, a, i](const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.row(i) = g.row(0);
    t->Accumulate(a, full);
  });
}

Var Entry(const Var& a, Eigen::Index i, Eigen::Index j) {
  if (i < 0 || i >= a.rows() || j < 0 || j >= a.cols()) {
    throw IndexOutOfRange("ad::Entry: index out of range");
  }
  Tape* t = a.tape();
  return t->Record(Matrix::Constant(1, 1, a.value()(i, j)), AnyGrad({a}),
                   [t, a, i, j](const Matrix& g) {
                     Matrix full = Matrix::Zero(a.rows(), a.cols());
                     full(i, j) = g(0, 0);
                     t->Accumulate(a, full);
                   });
}

Var Sum(const Var& a) {
  Tape* t = a.tape();
  return t->Record(Matrix::Constant(1, 1, a.value().sum()), AnyGrad({a}),
                   [t, a](const Matrix& g) {
                     t->Accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
                   });
}

Var AddN(const std::vector<Var>& terms) {
  if (terms.empty()) throw InvalidArgument("ad::AddN: no terms");
  Tape* t = terms.front().tape();
  Matrix out = terms.front().value();
  bool needs = false;
  for (size_t k = 0; k < terms.size(); ++k) {
    if (k > 0) {
      RequireSameShape(terms[0], terms[k], "AddN");
      out += terms[k].value();
    }
    needs = needs || t->RequiresGrad(terms[k]);
  }
  return t->Record(std::move(out), needs, [t, terms](const Matrix& g) {
    for (const Var& v : terms) t->Accumulate(v, g);
  });
}

Var Mean(const std::vector<Var>& scalars) {
  return Scale(AddN(scalars), 1.0 / static_cast<double>(scalars.size()));
}

Var Cosine(const Var& u, const Var& v) {
  RequireSameTape(u, v);
  if (u.rows() != 1 || v.rows() != 1 || u.cols() != v.cols()) {
    throw DimensionMismatch("ad::Cosine: expects two row vectors of equal length");
  }
  Tape* t = u.tape();
  const double nu = u.value().norm();
  const double nv = v.value().norm();
  if (nu < kCosineEps || nv < kCosineEps) {
    return t->Constant(Matrix::Zero(1, 1));
  }
  const double c = u.value().cwiseProduct(v.value()).sum() / (nu * nv);
  return t->Record(Matrix::Constant(1, 1, c), AnyGrad({u, v}), [t, u, v, nu, nv, c](const Matrix& g) {
    const double s = g(0, 0);
    if (t->RequiresGrad(u)) {
      t->Accumulate(u, s * (v.value() / (nu * nv) - c * u.value() / (nu * nu)));
    }
    if (t->RequiresGrad(v)) {
      t->Accumulate(v, s * (u.value() / (nu * nv) - c * v.value() / (nv * nv)));
    }
  });
}

Var PackScalars(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw InvalidArgument("ad::PackScalars: no scalars");
  Tape* t = scalars.front().tape();
  Matrix out(1, static_cast<Eigen::Index>(scalars.size()));
  bool needs = false;
  for (size_t k = 0; k < scalars.size(); ++k) {
    out(0, static_cast<Eigen::Index>(k)) = scalars[k].scalar();
    needs = needs || t->RequiresGrad(scalars[k]);
  }
  return t->Record(std::move(out), needs, [t, scalars](const Matrix& g) {
    for (size_t k = 0; k < scalars.size(); ++k) {
      t->Accumulate(scalars[k], Matrix::Constant(1, 1, g(0, static_cast<Eigen::Index>(k))));
    }
  });
}

Var LogSumExp(const Var& row) {
  if (row.rows() != 1 || row.cols() == 0) throw DimensionMismatch("ad::LogSumExp: expects a row");
  Tape* t = row.tape();
  const double m = row.value().maxCoeff();
  Matrix shifted = (row.value().array() - m).exp();
  const double total = shifted.sum();
  Matrix softmax = shifted / total;
  return t->Record(Matrix::Constant(1, 1, m + std::log(total)), AnyGrad({row}),
                   [t, row, softmax](const Matrix& g) { t->Accumulate(row, g(0, 0) * softmax); });
}

}  // namespace ad
}  // namespace gpl
