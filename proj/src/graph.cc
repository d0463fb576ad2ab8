#include "gpl/graph.h"

#include <algorithm>
#include <numeric>
#include <queue>
#include <random>
#include <string>

#include "gpl/errors.h"

namespace gpl {

Graph::Graph(Matrix features, std::vector<Edge> edges) : features_(std::move(features)) {
  if (features_.rows() < 1) throw InvalidArgument("graph: at least one node required");
  const int n = num_nodes();
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v >= n) {
      throw IndexOutOfRange("graph: edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") outside [0, " + std::to_string(n) + ")");
    }
    if (e.u == e.v) throw InvalidArgument("graph: self-loop at node " + std::to_string(e.u));
  }
  std::sort(edges.begin(), edges.end());
  const auto last = std::unique(edges.begin(), edges.end());
  duplicates_dropped_ = static_cast<int>(edges.end() - last);
  edges.erase(last, edges.end());
  edges_ = std::move(edges);
}

bool Graph::HasEdge(int a, int b) const {
  if (a == b) return false;
  return std::binary_search(edges_.begin(), edges_.end(), Edge(a, b));
}

std::vector<std::vector<int>> Graph::Neighbors() const {
  std::vector<std::vector<int>> adj(num_nodes());
  for (const Edge& e : edges_) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

std::vector<int> Graph::Degrees() const {
  std::vector<int> deg(num_nodes(), 0);
  for (const Edge& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

Matrix Graph::AdjacencyMatrix() const {
  Matrix a = Matrix::Zero(num_nodes(), num_nodes());
  for (const Edge& e : edges_) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  return a;
}

Matrix Graph::SelfLoopMask() const {
  Matrix m = AdjacencyMatrix();
  m.diagonal().setOnes();
  return m;
}

int Graph::NumComponents() const {
  const auto adj = Neighbors();
  std::vector<bool> seen(num_nodes(), false);
  int count = 0;
  for (int s = 0; s < num_nodes(); ++s) {
    if (seen[s]) continue;
    ++count;
    std::queue<int> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      const int x = q.front();
      q.pop();
      for (int y : adj[x]) {
        if (!seen[y]) {
          seen[y] = true;
          q.push(y);
        }
      }
    }
  }
  return count;
}

std::vector<Edge> TriggerGraph::CompleteEdges(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  }
  return edges;
}

Graph TriggerGraph::AsGraph() const { return Graph(features, CompleteEdges(size())); }

PromptGraph PromptGraph::Complete(Matrix tokens) {
  const int n = static_cast<int>(tokens.rows());
  return PromptGraph{std::move(tokens), TriggerGraph::CompleteEdges(n)};
}

PromptGraph PromptGraph::Isolated(Matrix tokens) { return PromptGraph{std::move(tokens), {}}; }

AnchorChoice AnchorChoice::Sample(const Graph& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, g.num_nodes() - 1);
  return AnchorChoice{pick(rng), seed};
}

namespace {

Matrix StackRows(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) {
    throw DimensionMismatch("feature dimension mismatch: " + std::to_string(top.cols()) + " vs " +
                            std::to_string(bottom.cols()));
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

std::vector<Edge> ShiftedEdges(const std::vector<Edge>& edges, int offset) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (const Edge& e : edges) out.emplace_back(e.u + offset, e.v + offset);
  return out;
}

}  // namespace

Graph AttachTrigger(const Graph& g, const TriggerGraph& t, const AnchorChoice& anchor) {
  if (t.size() < 1) throw InvalidArgument("attach_trigger: empty trigger");
  if (anchor.anchor_node < 0 || anchor.anchor_node >= g.num_nodes()) {
    throw IndexOutOfRange("attach_trigger: anchor " + std::to_string(anchor.anchor_node) +
                          " outside graph of " + std::to_string(g.num_nodes()) + " nodes");
  }
  if (t.attach_node < 0 || t.attach_node >= t.size()) {
    throw IndexOutOfRange("attach_trigger: trigger attach node out of range");
  }
  Matrix x = StackRows(g.features(), t.features);
  const int n = g.num_nodes();
  std::vector<Edge> edges = g.edges();
  for (const Edge& e : ShiftedEdges(TriggerGraph::CompleteEdges(t.size()), n)) edges.push_back(e);
  edges.emplace_back(anchor.anchor_node, n + t.attach_node);
  return Graph(std::move(x), std::move(edges));
}

Graph AttachPromptIsolated(const Graph& g, const PromptGraph& p) {
  Matrix x = StackRows(g.features(), p.tokens);
  std::vector<Edge> edges = g.edges();
  for (const Edge& e : ShiftedEdges(p.internal_edges, g.num_nodes())) edges.push_back(e);
  return Graph(std::move(x), std::move(edges));
}

Graph AttachPromptCrosslinked(const Graph& g, const PromptGraph& p, const LinkRule& rule) {
  const int n = g.num_nodes();
  if (rule.mode == LinkMode::kSimilarity && (rule.k < 1 || rule.k > n)) {
    throw InvalidArgument("attach_prompt_crosslinked: k = " + std::to_string(rule.k) +
                          " outside [1, " + std::to_string(n) + "]");
  }
  Matrix x = StackRows(g.features(), p.tokens);
  std::vector<Edge> edges = g.edges();
  for (const Edge& e : ShiftedEdges(p.internal_edges, n)) edges.push_back(e);
  for (int t = 0; t < p.size(); ++t) {
    if (rule.mode == LinkMode::kFull) {
      for (int v = 0; v < n; ++v) edges.emplace_back(v, n + t);
      continue;
    }
    std::vector<std::pair<double, int>> scored;
    scored.reserve(n);
    const RowVector token = p.tokens.row(t);
    for (int v = 0; v < n; ++v) scored.emplace_back(-CosineSim(token, g.features().row(v)), v);
    std::partial_sort(scored.begin(), scored.begin() + rule.k, scored.end());
    for (int r = 0; r < rule.k; ++r) edges.emplace_back(scored[r].second, n + t);
  }
  return Graph(std::move(x), std::move(edges));
}

Graph AugmentLinks(const Graph& g, double flip_prob, std::uint64_t seed) {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) {
    throw InvalidArgument("augment_links: flip_prob must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(flip_prob);
  std::vector<Edge> edges;
  for (int i = 0; i < g.num_nodes(); ++i) {
    for (int j = i + 1; j < g.num_nodes(); ++j) {
      const bool present = g.HasEdge(i, j);
      if (present != flip(rng)) edges.emplace_back(i, j);
    }
  }
  return Graph(g.features(), std::move(edges));
}

std::vector<int> BfsBall(const Graph& g, int center, int k_hops, int max_nodes) {
  if (center < 0 || center >= g.num_nodes()) {
    throw IndexOutOfRange("induced_subgraph: center " + std::to_string(center) + " out of range");
  }
  if (k_hops < 0) throw InvalidArgument("induced_subgraph: k_hops must be >= 0");
  const auto adj = g.Neighbors();
  std::vector<int> dist(g.num_nodes(), -1);
  std::vector<int> order{center};
  dist[center] = 0;
  for (size_t head = 0; head < order.size(); ++head) {
    const int x = order[head];
    if (dist[x] == k_hops) continue;
    for (int y : adj[x]) {
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        order.push_back(y);
      }
    }
  }
  if (max_nodes > 0 && static_cast<int>(order.size()) > max_nodes) order.resize(max_nodes);
  return order;
}

Graph SubgraphOf(const Graph& g, const std::vector<int>& nodes) {
  std::vector<int> position(g.num_nodes(), -1);
  Matrix x(static_cast<Eigen::Index>(nodes.size()), g.feature_dim());
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 0 || nodes[i] >= g.num_nodes()) throw IndexOutOfRange("subgraph: node out of range");
    position[nodes[i]] = static_cast<int>(i);
    x.row(static_cast<Eigen::Index>(i)) = g.features().row(nodes[i]);
  }
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) {
    if (position[e.u] >= 0 && position[e.v] >= 0) edges.emplace_back(position[e.u], position[e.v]);
  }
  return Graph(std::move(x), std::move(edges));
}

Graph InducedSubgraph(const Graph& g, int center, int k_hops) {
  return SubgraphOf(g, BfsBall(g, center, k_hops));
}

double CosineSim(const RowVector& u, const RowVector& v) {
  if (u.size() != v.size()) {
    throw DimensionMismatch("cosine_sim: lengths " + std::to_string(u.size()) + " vs " +
                            std::to_string(v.size()));
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu < 1e-12 || nv < 1e-12) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

}  // namespace gpl
