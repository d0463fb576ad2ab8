#ifndef GPL_GRAPH_H_
#define GPL_GRAPH_H_

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gpl {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

// Unordered node pair, always stored with u < v.
struct Edge {
  int u = 0;
  int v = 0;

  Edge() = default;
  Edge(int a, int b) : u(a < b ? a : b), v(a < b ? b : a) {}
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Undirected simple graph with a dense node-feature matrix. Immutable once
// constructed; edges are deduplicated and kept sorted.
class Graph {
 public:
  // Throws InvalidArgument for zero nodes or self-loops, IndexOutOfRange for
  // endpoints outside [0, N).
  Graph(Matrix features, std::vector<Edge> edges);

  int num_nodes() const { return static_cast<int>(features_.rows()); }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const Matrix& features() const { return features_; }
  const std::vector<Edge>& edges() const { return edges_; }
  // Number of duplicate edges dropped at construction.
  int duplicates_dropped() const { return duplicates_dropped_; }

  bool HasEdge(int a, int b) const;
  std::vector<std::vector<int>> Neighbors() const;
  std::vector<int> Degrees() const;
  int TotalDegree() const { return 2 * num_edges(); }
  Matrix AdjacencyMatrix() const;
  // Adjacency plus identity: the neighborhood mask used by attention layers.
  Matrix SelfLoopMask() const;
  int NumComponents() const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.features_ == b.features_ && a.edges_ == b.edges_;
  }

 private:
  Matrix features_;
  std::vector<Edge> edges_;
  int duplicates_dropped_ = 0;
};

// Small complete graph with learnable node features.
struct TriggerGraph {
  Matrix features;  // C x d
  int attach_node = 0;

  int size() const { return static_cast<int>(features.rows()); }
  Graph AsGraph() const;
  static std::vector<Edge> CompleteEdges(int n);
};

struct PromptGraph {
  Matrix tokens;  // |P| x d
  std::vector<Edge> internal_edges;

  int size() const { return static_cast<int>(tokens.rows()); }
  static PromptGraph Complete(Matrix tokens);
  static PromptGraph Isolated(Matrix tokens);
};

struct AnchorChoice {
  int anchor_node = 0;
  std::uint64_t rng_seed = 0;

  // Uniform node of g drawn from rng_seed.
  static AnchorChoice Sample(const Graph& g, std::uint64_t seed);
};

enum class LinkMode { kFull, kSimilarity };

struct LinkRule {
  LinkMode mode = LinkMode::kSimilarity;
  int k = 3;  // used by kSimilarity only
};

// g ⊕ t: trigger nodes appended after g's nodes, complete trigger topology, and
// one cross edge (anchor, N + t.attach_node).
Graph AttachTrigger(const Graph& g, const TriggerGraph& t, const AnchorChoice& anchor);

// Disjoint union with the prompt graph appended after g's nodes.
Graph AttachPromptIsolated(const Graph& g, const PromptGraph& p);

// Disjoint union plus cross edges: kFull links every token to every node;
// kSimilarity links each token to its k most cosine-similar graph nodes
// (ties by lower node index). Throws InvalidArgument when k > N.
Graph AttachPromptCrosslinked(const Graph& g, const PromptGraph& p, const LinkRule& rule);

// Toggles every unordered node pair independently with probability flip_prob.
Graph AugmentLinks(const Graph& g, double flip_prob, std::uint64_t seed);

// Nodes within k_hops of center, nearest first (BFS order, ties by node id),
// truncated to max_nodes when max_nodes > 0.
std::vector<int> BfsBall(const Graph& g, int center, int k_hops, int max_nodes = 0);

// Vertex-induced subgraph; result node i is nodes[i].
Graph SubgraphOf(const Graph& g, const std::vector<int>& nodes);

// BFS ball of radius k_hops; center becomes node 0.
Graph InducedSubgraph(const Graph& g, int center, int k_hops);

// Cosine similarity; 0 when either norm is below 1e-12.
double CosineSim(const RowVector& u, const RowVector& v);

}  // namespace gpl

#endif  // GPL_GRAPH_H_
