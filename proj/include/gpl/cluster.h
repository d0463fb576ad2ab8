#ifndef GPL_CLUSTER_H_
#define GPL_CLUSTER_H_

#include <cstdint>
#include <vector>

#include "gpl/graph.h"

namespace gpl {

struct KMeansResult {
  Matrix centers;                // k x d
  std::vector<int> assignment;   // per point
};

// Lloyd iterations from a k-means++ start. Ties in assignment go to the lower
// center index; an emptied cluster keeps its previous center.
KMeansResult KMeans(const Matrix& points, int k, std::uint64_t seed, int iterations = 50);

}  // namespace gpl

#endif  // GPL_CLUSTER_H_
