#include "gpl/linear_gin.h"

#include <string>

#include "gpl/errors.h"

namespace gpl {

Matrix GinPropagation(const Graph& g, double epsilon) {
  Matrix p = g.AdjacencyMatrix();
  p.diagonal().array() += 1.0 + epsilon;
  return p;
}

LinearGinOutput LinearGinEncode(const LinearGinParams& params, const Graph& g) {
  if (params.theta.rows() != g.feature_dim()) {
    throw DimensionMismatch("linear_gin_encode: theta has " + std::to_string(params.theta.rows()) +
                            " rows, features have dim " + std::to_string(g.feature_dim()));
  }
  LinearGinOutput out;
  out.nodes = GinPropagation(g, params.epsilon) * g.features() * params.theta;
  out.sum = out.nodes.colwise().sum();
  return out;
}

}  // namespace gpl
