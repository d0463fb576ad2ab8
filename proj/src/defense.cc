#include "gpl/defense.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <tuple>

#include "gpl/errors.h"
#include "gpl/io.h"

namespace gpl {

void PruneConfig::Validate() const {
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    throw InvalidArgument("prune: threshold must lie in [-1, 1], got " + FormatDouble(threshold));
  }
}

namespace {

// Nodes reachable from `start` over live edges among live nodes.
std::vector<int> Component(int start, const std::vector<std::vector<int>>& adj, const std::vector<bool>& alive_node,
                           const std::vector<std::vector<bool>>& alive_edge) {
  std::vector<int> out{start};
  std::vector<bool> seen(adj.size(), false);
  seen[start] = true;
  for (size_t i = 0; i < out.size(); ++i) {
    const int u = out[i];
    for (size_t k = 0; k < adj[u].size(); ++k) {
      const int v = adj[u][k];
      if (!seen[v] && alive_node[v] && alive_edge[u][k]) {
        seen[v] = true;
        out.push_back(v);
      }
    }
  }
  return out;
}

}  // namespace

PruneResult PruneG(const Graph& g, const PruneConfig& cfg) {
  cfg.Validate();
  const int n = g.num_nodes();
  const std::vector<Edge>& edges = g.edges();
  std::vector<double> sim(edges.size());
  for (size_t e = 0; e < edges.size(); ++e) {
    sim[e] = CosineSim(g.features().row(edges[e].u), g.features().row(edges[e].v));
  }
  std::vector<size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::tie(sim[a], edges[a].u, edges[a].v) < std::tie(sim[b], edges[b].u, edges[b].v);
  });

  // Adjacency with per-slot liveness so a cut edge can be disabled in O(deg).
  std::vector<std::vector<int>> adj(n);
  std::vector<std::vector<bool>> alive_edge(n);
  for (const Edge& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
    alive_edge[e.u].push_back(true);
    alive_edge[e.v].push_back(true);
  }
  auto kill = [&](int u, int v) {
    for (size_t k = 0; k < adj[u].size(); ++k) {
      if (adj[u][k] == v) alive_edge[u][k] = false;
    }
  };

  std::vector<bool> alive_node(n, true);
  std::vector<bool> cut(edges.size(), false);
  int edges_cut = 0;
  for (size_t e : order) {
    if (!(sim[e] < cfg.threshold)) break;
    const int u = edges[e].u;
    const int v = edges[e].v;
    if (!alive_node[u] || !alive_node[v]) continue;
    kill(u, v);
    kill(v, u);
    cut[e] = true;
    ++edges_cut;
    std::vector<int> cu = Component(u, adj, alive_node, alive_edge);
    if (std::find(cu.begin(), cu.end(), v) != cu.end()) continue;
    std::vector<int> cv = Component(v, adj, alive_node, alive_edge);
    const int min_u = *std::min_element(cu.begin(), cu.end());
    const int min_v = *std::min_element(cv.begin(), cv.end());
    const bool drop_u = cu.size() != cv.size() ? cu.size() < cv.size() : min_u > min_v;
    for (int w : drop_u ? cu : cv) alive_node[w] = false;
  }

  std::vector<int> kept;
  std::vector<int> new_id(n, -1);
  for (int v = 0; v < n; ++v) {
    if (alive_node[v]) {
      new_id[v] = static_cast<int>(kept.size());
      kept.push_back(v);
    }
  }
  std::vector<Edge> kept_edges;
  for (size_t e = 0; e < edges.size(); ++e) {
    if (!cut[e] && alive_node[edges[e].u] && alive_node[edges[e].v]) {
      kept_edges.emplace_back(new_id[edges[e].u], new_id[edges[e].v]);
    }
  }
  Matrix x(static_cast<Eigen::Index>(kept.size()), g.feature_dim());
  for (size_t i = 0; i < kept.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = g.features().row(kept[i]);
  return PruneResult{Graph(std::move(x), std::move(kept_edges)), std::move(kept), std::move(new_id), edges_cut};
}

std::vector<EdgeSimilarity> EdgeSimilarityProfile(const std::vector<TaggedGraph>& graphs) {
  std::vector<EdgeSimilarity> out;
  for (const TaggedGraph& t : graphs) {
    if (t.num_host_nodes < 0 || t.num_host_nodes > t.graph.num_nodes()) {
      throw InvalidArgument("edge_similarity_profile: host node count " + std::to_string(t.num_host_nodes) +
                            " outside [0, " + std::to_string(t.graph.num_nodes()) + "]");
    }
    for (const Edge& e : t.graph.edges()) {
      out.push_back({CosineSim(t.graph.features().row(e.u), t.graph.features().row(e.v)),
                     e.u >= t.num_host_nodes || e.v >= t.num_host_nodes});
    }
  }
  return out;
}

double SimilaritySummary::Gap() const {
  if (clean_edges == 0 || trigger_edges == 0) return 0.0;
  return std::abs(mean_trigger - mean_clean);
}

SimilaritySummary SummarizeProfile(const std::vector<EdgeSimilarity>& profile) {
  SimilaritySummary s;
  for (const EdgeSimilarity& e : profile) {
    if (e.is_trigger) {
      s.mean_trigger += e.similarity;
      ++s.trigger_edges;
    } else {
      s.mean_clean += e.similarity;
      ++s.clean_edges;
    }
  }
  if (s.trigger_edges > 0) s.mean_trigger /= s.trigger_edges;
  if (s.clean_edges > 0) s.mean_clean /= s.clean_edges;
  return s;
}

void WriteProfileCsv(const std::string& path, const std::vector<EdgeSimilarity>& profile,
                     const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "# config_hash=" << config_hash << "\n";
  out << "similarity,is_trigger\n";
  for (const EdgeSimilarity& e : profile) out << FormatDouble(e.similarity) << "," << (e.is_trigger ? 1 : 0) << "\n";
}

}  // namespace gpl
