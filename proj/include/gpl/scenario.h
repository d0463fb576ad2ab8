#ifndef GPL_SCENARIO_H_
#define GPL_SCENARIO_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gpl/graph.h"

namespace gpl {

enum class Scenario { kCrossTask, kCrossDomain, kCrossDataset, kCrossClass, kCrossDistribution };
enum class TaskLevel { kNode, kGraph };

std::string ScenarioName(Scenario s);
Scenario ParseScenario(const std::string& name);
std::string TaskName(TaskLevel t);

// A master graph with one class label per node.
struct LabeledGraph {
  Graph graph;
  std::vector<int> labels;
  std::string name = "synthetic";

  int NumClasses() const;
};

struct LabeledSample {
  Graph graph;
  int label = 0;
  int id = 0;  // center node id in the source master
};

struct SynthConfig {
  int num_blocks = 3;
  int nodes_per_block = 80;
  double p_intra = 0.08;
  double p_inter = 0.004;
  int feature_dim = 16;
  // Distance of each block mean from the shared base along a random unit direction.
  double separation = 1.0;
  double noise = 0.4;
  // Constant added to every feature; keeps feature cosines positive.
  double base_level = 1.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Stochastic block model with Gaussian features around per-block means.
LabeledGraph GenSyntheticCorpus(const SynthConfig& cfg);

// One induced graph per center: BFS ball of radius k_hops, nearest-first, capped
// at max_nodes; label = center's label. Empty `centers` means every node.
std::vector<LabeledSample> BuildInducedDataset(const LabeledGraph& master, int k_hops, int max_nodes,
                                               const std::vector<int>& centers = {});

struct Part {
  Graph graph;
  std::vector<int> nodes;  // master ids, graph node i is nodes[i]
};

// k-means on node features; one vertex-induced subgraph per non-empty cluster.
std::vector<Part> PartitionByClustering(const Graph& master, int num_parts, std::uint64_t seed);

struct SplitConfig {
  int k_hops = 2;
  int max_nodes = 30;
  int num_parts = 6;          // CROSS_DISTRIBUTION
  int pretrain_graphs = 60;   // 0 = all candidates
  int downstream_graphs = 150;
};

struct ScenarioSplit {
  Scenario scenario = Scenario::kCrossDistribution;
  TaskLevel task = TaskLevel::kNode;
  std::vector<Graph> pretrain;  // unlabeled by construction
  std::vector<int> pretrain_ids;
  std::vector<LabeledSample> downstream;
  int num_classes = 0;  // downstream labels are remapped to 0..num_classes-1
  std::map<std::string, std::string> metadata;
};

// `sources` holds one master, or two for CROSS_DOMAIN / CROSS_DATASET.
ScenarioSplit MakeSplit(const std::vector<LabeledGraph>& sources, Scenario scenario, std::uint64_t seed,
                        const SplitConfig& cfg = {});

struct FewShot {
  std::vector<LabeledSample> shots;
  std::vector<LabeledSample> test;
};

// Seeded per-class draw of `shots_per_class` training graphs; the rest is test.
FewShot SplitFewShot(const std::vector<LabeledSample>& data, int num_classes, int shots_per_class,
                     std::uint64_t seed);

struct SvdProjection {
  Matrix components;  // d x k, orthonormal columns
};

// Uncentered rank-k projection fit on the stacked node features of `fit_on`.
SvdProjection FitSvd(const std::vector<Graph>& fit_on, int k);
Graph ApplySvd(const SvdProjection& proj, const Graph& g);
// Fits on `split.pretrain` and projects every graph of the split.
SvdProjection SvdReduce(ScenarioSplit& split, int k);

// feature_file: CSV, one node per row. edge_file: "u v" per line. label_file:
// one integer per line. Duplicate edges are dropped and reported in `warnings`.
LabeledGraph LoadDataset(const std::string& feature_file, const std::string& edge_file,
                         const std::string& label_file, std::vector<std::string>* warnings = nullptr);
void SaveDataset(const LabeledGraph& data, const std::string& feature_file, const std::string& edge_file,
                 const std::string& label_file);

// Writes graph files under `dir` plus manifest.json; returns the manifest path.
std::string SaveSplit(const ScenarioSplit& split, const std::string& dir);
ScenarioSplit LoadSplit(const std::string& manifest_path);

}  // namespace gpl

#endif  // GPL_SCENARIO_H_
