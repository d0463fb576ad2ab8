#ifndef GPL_LINEAR_GIN_H_
#define GPL_LINEAR_GIN_H_

#include "gpl/graph.h"

namespace gpl {

// H = (A + (1 + epsilon) I) X theta.
struct LinearGinParams {
  double epsilon = 0.0;
  Matrix theta;  // d x h
};

struct LinearGinOutput {
  Matrix nodes;   // N x h
  RowVector sum;  // SUM readout
};

LinearGinOutput LinearGinEncode(const LinearGinParams& params, const Graph& g);

// Propagation matrix A + (1 + epsilon) I.
Matrix GinPropagation(const Graph& g, double epsilon);

}  // namespace gpl

#endif  // GPL_LINEAR_GIN_H_
