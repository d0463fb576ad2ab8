#ifndef GPL_OPTIM_H_
#define GPL_OPTIM_H_

#include <cmath>
#include <string>
#include <vector>

#include "gpl/errors.h"
#include "gpl/graph.h"

namespace gpl {

enum class OptimizerKind { kAdam, kGradientDescent };

inline std::string OptimizerName(OptimizerKind kind) { return kind == OptimizerKind::kAdam ? "ADAM" : "GD"; }

inline OptimizerKind ParseOptimizer(const std::string& name) {
  if (name == "ADAM" || name == "adam") return OptimizerKind::kAdam;
  if (name == "GD" || name == "gd") return OptimizerKind::kGradientDescent;
  throw InvalidArgument("unknown optimizer '" + name + "' (expected ADAM or GD)");
}

// Adam with bias correction, or plain gradient descent, over a fixed list of
// parameter tensors. State is sized lazily on the first step.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}

  double lr() const { return lr_; }
  OptimizerKind kind() const { return kind_; }
  int steps() const { return t_; }

  void Step(std::vector<Matrix*> params, const std::vector<Matrix>& grads) {
    if (params.size() != grads.size()) throw DimensionMismatch("optimizer: param/grad count");
    for (const Matrix& g : grads) {
      if (!g.allFinite()) throw DivergenceError("optimizer: non-finite gradient");
    }
    if (kind_ == OptimizerKind::kGradientDescent) {
      for (size_t i = 0; i < params.size(); ++i) *params[i] -= lr_ * grads[i];
      ++t_;
      return;
    }
    if (m_.empty()) {
      for (const Matrix& g : grads) {
        m_.push_back(Matrix::Zero(g.rows(), g.cols()));
        v_.push_back(Matrix::Zero(g.rows(), g.cols()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i].cwiseProduct(grads[i]);
      const Matrix mhat = m_[i] / c1;
      const Matrix vhat = v_[i] / c2;
      *params[i] -= (lr_ * mhat.array() / (vhat.array().sqrt() + kEps)).matrix();
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  OptimizerKind kind_ = OptimizerKind::kAdam;
  double lr_ = 1e-3;
  int t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace gpl

#endif  // GPL_OPTIM_H_
