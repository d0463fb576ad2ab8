#ifndef GPL_AUTODIFF_H_
#define GPL_AUTODIFF_H_

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace gpl {
namespace ad {

using Matrix = Eigen::MatrixXd;

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;  // value of a 1x1 var
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode differentiation over dense matrices. Every op appends one node;
// Backward() walks the nodes in reverse insertion order. Nodes whose inputs
// carry no gradient skip their backward closure entirely.
class Tape {
 public:
  using BackwardFn = std::function<void(const Matrix& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Leaf(Matrix value);
  Var Constant(Matrix value);

  // Seeds d(root)/d(root) = 1; root must be 1x1.
  void Backward(const Var& root);

  // Zero matrix of the right shape when no gradient reached the node.
  Matrix Grad(const Var& v) const;
  bool RequiresGrad(const Var& v) const { return nodes_[v.id_].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var Record(Matrix value, bool requires_grad, BackwardFn backward);
  void Accumulate(const Var& v, const Matrix& grad);
  const Matrix& ValueOf(int id) const { return nodes_[id].value; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Dense ops. Shapes follow Eigen conventions; row vectors are 1 x n.
Var MatMul(const Var& a, const Var& b);
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Hadamard(const Var& a, const Var& b);
Var Scale(const Var& a, double s);
Var AddScalar(const Var& a, double s);
Var AddRowBroadcast(const Var& a, const Var& row);
Var MulRowBroadcast(const Var& a, const Var& row);
Var LeakyRelu(const Var& a, double slope);
Var Exp(const Var& a);
Var Log(const Var& a);
Var Transpose(const Var& a);
Var VStack(const Var& top, const Var& bottom);
// out(i, j) = col_a(i) + col_b(j); both inputs are n x 1.
Var OuterSum(const Var& col_a, const Var& col_b);
// Row-wise softmax restricted to entries where mask != 0; other entries are 0.
// Every row of the mask must have at least one nonzero entry.
Var MaskedSoftmaxRows(const Var& scores, const Matrix& mask);
Var SumRows(const Var& a);   // 1 x cols, column sums
Var MeanRows(const Var& a);  // 1 x cols
Var Row(const Var& a, Eigen::Index i);
Var Entry(const Var& a, Eigen::Index i, Eigen::Index j);
Var Sum(const Var& a);  // 1x1
Var AddN(const std::vector<Var>& terms);
Var Mean(const std::vector<Var>& scalars);
// Cosine of two row vectors; 0 with zero gradient when either norm < 1e-12.
Var Cosine(const Var& u, const Var& v);
// Packs 1x1 vars into a 1 x k row.
Var PackScalars(const std::vector<Var>& scalars);
Var LogSumExp(const Var& row);

inline Var operator+(const Var& a, const Var& b) { return Add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return Sub(a, b); }
inline Var operator*(double s, const Var& a) { return Scale(a, s); }
inline Var operator-(const Var& a) { return Scale(a, -1.0); }

}  // namespace ad
}  // namespace gpl

#endif  // GPL_AUTODIFF_H_
