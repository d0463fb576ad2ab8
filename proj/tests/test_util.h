#ifndef GPL_TESTS_TEST_UTIL_H_
#define GPL_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "gpl/graph.h"

namespace gpl::testing {

// Central differences of a scalar function of one matrix argument.
inline Matrix NumericGrad(const std::function<double(const Matrix&)>& f, Matrix x,
                          double step = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double keep = x(i, j);
      x(i, j) = keep + step;
      const double up = f(x);
      x(i, j) = keep - step;
      const double down = f(x);
      x(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, floor); the floor keeps vanishing gradients
// from turning rounding noise into a large ratio.
inline double RelativeError(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

inline Matrix RandomMatrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

inline Graph RandomGraph(std::mt19937_64& rng, int n, int d, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back(i, j);
    }
  }
  return Graph(RandomMatrix(rng, n, d), std::move(edges));
}

// Connected variant: a random spanning path plus extra edges.
inline Graph RandomConnectedGraph(std::mt19937_64& rng, int n, int d, double p) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(order[i], order[i + 1]);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back(i, j);
    }
  }
  return Graph(RandomMatrix(rng, n, d), std::move(edges));
}

}  // namespace gpl::testing

#endif  // GPL_TESTS_TEST_UTIL_H_
