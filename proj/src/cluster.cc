#include "gpl/cluster.h"

#include <random>
#include <string>

#include "gpl/errors.h"

namespace gpl {

namespace {

int Nearest(const Matrix& centers, const RowVector& x, double* dist2) {
  int best = 0;
  double best_d = (centers.row(0) - x).squaredNorm();
  for (int c = 1; c < centers.rows(); ++c) {
    const double d = (centers.row(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist2 != nullptr) *dist2 = best_d;
  return best;
}

}  // namespace

KMeansResult KMeans(const Matrix& points, int k, std::uint64_t seed, int iterations) {
  const int n = static_cast<int>(points.rows());
  if (k < 1) throw InvalidArgument("kmeans: k must be >= 1");
  if (n < k) {
    throw InvalidArgument("kmeans: " + std::to_string(n) + " points for " + std::to_string(k) + " clusters");
  }
  std::mt19937_64 rng(seed);
  KMeansResult out;
  out.centers.resize(k, points.cols());
  std::vector<bool> used(n, false);
  const int first = std::uniform_int_distribution<int>(0, n - 1)(rng);
  out.centers.row(0) = points.row(first);
  used[first] = true;
  std::vector<double> d2(n);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      Nearest(out.centers.topRows(c), points.row(i), &d2[i]);
      if (used[i]) d2[i] = 0.0;
      total += d2[i];
    }
    int pick = -1;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (int i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        r -= d2[i];
        if (r <= 0.0) break;
      }
    }
    if (pick < 0) {
      // All remaining points coincide with chosen centers.
      for (int i = 0; i < n && pick < 0; ++i) {
        if (!used[i]) pick = i;
      }
    }
    used[pick] = true;
    out.centers.row(c) = points.row(pick);
  }
  out.assignment.assign(n, 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = it == 0;
    for (int i = 0; i < n; ++i) {
      const int a = Nearest(out.centers, points.row(i), nullptr);
      if (a != out.assignment[i]) changed = true;
      out.assignment[i] = a;
    }
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(out.assignment[i]) += points.row(i);
      ++counts[out.assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) out.centers.row(c) = sums.row(c) / counts[c];
    }
    if (!changed) break;
  }
  for (int i = 0; i < n; ++i) out.assignment[i] = Nearest(out.centers, points.row(i), nullptr);
  return out;
}

}  // namespace gpl
