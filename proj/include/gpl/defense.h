#ifndef GPL_DEFENSE_H_
#define GPL_DEFENSE_H_

#include <string>
#include <vector>

#include "gpl/graph.h"

namespace gpl {

enum class ComponentPolicy { kRemoveSmaller };

struct PruneConfig {
  double threshold = 0.2;
  ComponentPolicy policy = ComponentPolicy::kRemoveSmaller;

  void Validate() const;
};

struct PruneResult {
  Graph graph;
  std::vector<int> kept;    // kept[i] = input id of output node i
  std::vector<int> new_id;  // input id -> output id, -1 when removed
  int edges_cut = 0;
};

// Edges are visited by ascending endpoint cosine, then (u, v). An edge below the
// threshold is cut; if that disconnects u from v, the smaller of their two
// components is removed. Equal sizes remove the component whose smallest node
// id is larger, so the one holding node 0 survives. Edges touching an already
// removed node are skipped. One side of every cut survives, so the result is
// never empty.
PruneResult PruneG(const Graph& g, const PruneConfig& cfg = {});

// A graph whose nodes from `num_host_nodes` on belong to an attached trigger.
struct TaggedGraph {
  Graph graph;
  int num_host_nodes = 0;
};

struct EdgeSimilarity {
  double similarity = 0.0;
  bool is_trigger = false;  // at least one endpoint is a trigger node
};

std::vector<EdgeSimilarity> EdgeSimilarityProfile(const std::vector<TaggedGraph>& graphs);

struct SimilaritySummary {
  double mean_clean = 0.0;
  double mean_trigger = 0.0;
  int clean_edges = 0;
  int trigger_edges = 0;

  // |mean_trigger - mean_clean|; 0 when either side is empty.
  double Gap() const;
};

SimilaritySummary SummarizeProfile(const std::vector<EdgeSimilarity>& profile);

// CSV with header "similarity,is_trigger"; `config_hash` goes in a leading comment.
void WriteProfileCsv(const std::string& path, const std::vector<EdgeSimilarity>& profile,
                     const std::string& config_hash);

}  // namespace gpl

#endif  // GPL_DEFENSE_H_
