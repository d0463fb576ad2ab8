#include "gpl/graph.h"

#include <gtest/gtest.h>

#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "gpl/errors.h"
#include "gpl/io.h"
#include "gpl/linear_gin.h"
#include "test_util.h"

namespace gpl {
namespace {

using testing::RandomGraph;
using testing::RandomMatrix;

Graph Path(int n, int d = 2) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph(Matrix::Ones(n, d), edges);
}

TriggerGraph Trigger(int c, int d = 2) { return TriggerGraph{Matrix::Constant(c, d, 0.5), 0}; }

TEST(Graph, RejectsSelfLoopsAndOutOfRangeEdges) {
  EXPECT_THROW(Graph(Matrix::Ones(2, 1), {Edge(1, 1)}), InvalidArgument);
  EXPECT_THROW(Graph(Matrix::Ones(2, 1), {Edge(0, 2)}), IndexOutOfRange);
  EXPECT_THROW(Graph(Matrix(0, 1), {}), InvalidArgument);
}

TEST(Graph, DeduplicatesEdges) {
  Graph g(Matrix::Ones(3, 1), {Edge(0, 1), Edge(1, 0), Edge(1, 2)});
  EXPECT_EQ(g.num_edges(), 2);
  EXPECT_EQ(g.duplicates_dropped(), 1);
}

TEST(AttachTrigger, PathPlusTrigger) {
  const Graph g = Path(2);
  const Graph out = AttachTrigger(g, Trigger(3), AnchorChoice{0, 0});
  EXPECT_EQ(out.num_nodes(), 5);
  EXPECT_EQ(out.num_edges(), 5);
  EXPECT_TRUE(out.HasEdge(0, 2));
  EXPECT_EQ(g, Path(2));
}

TEST(AttachTrigger, SingleNodeHost) {
  const Graph out = AttachTrigger(Graph(Matrix::Ones(1, 2), {}), Trigger(3), AnchorChoice{0, 0});
  EXPECT_EQ(out.num_nodes(), 4);
  EXPECT_EQ(out.num_edges(), 4);
}

TEST(AttachTrigger, TwiceAddsTwoCrossEdges) {
  const Graph g = Path(4);
  const Graph once = AttachTrigger(g, Trigger(3), AnchorChoice{1, 0});
  const Graph twice = AttachTrigger(once, Trigger(3), AnchorChoice{3, 0});
  EXPECT_EQ(twice.num_nodes(), 4 + 6);
  EXPECT_EQ(twice.num_edges(), 3 + 2 * (3 + 1));
  EXPECT_TRUE(twice.HasEdge(1, 4));
  EXPECT_TRUE(twice.HasEdge(3, 7));
}

TEST(AttachTrigger, EdgeCountInvariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Graph g = RandomGraph(rng, 1 + trial % 9, 3, 0.4);
    const int c = 1 + trial % 5;
    TriggerGraph t{RandomMatrix(rng, c, 3), c - 1};
    const Graph out = AttachTrigger(g, t, AnchorChoice::Sample(g, trial));
    EXPECT_EQ(out.num_edges(), g.num_edges() + c * (c - 1) / 2 + 1);
  }
}

TEST(AttachTrigger, Errors) {
  EXPECT_THROW(AttachTrigger(Path(2, 2), Trigger(3, 4), AnchorChoice{0, 0}), DimensionMismatch);
  EXPECT_THROW(AttachTrigger(Path(2), Trigger(3), AnchorChoice{2, 0}), IndexOutOfRange);
}

TEST(AttachPrompt, IsolatedTriangle) {
  const Graph tri(Matrix::Ones(3, 2), {Edge(0, 1), Edge(1, 2), Edge(0, 2)});
  PromptGraph p{Matrix::Ones(2, 2), {Edge(0, 1)}};
  const Graph out = AttachPromptIsolated(tri, p);
  EXPECT_EQ(out.num_nodes(), 5);
  EXPECT_EQ(out.num_edges(), 4);
  EXPECT_EQ(out.NumComponents(), 2);
}

TEST(AttachPrompt, EdgelessPromptAddsComponents) {
  const Graph g = Path(3);
  const Graph out = AttachPromptIsolated(g, PromptGraph::Isolated(Matrix::Ones(4, 2)));
  EXPECT_EQ(out.NumComponents(), g.NumComponents() + 4);
}

TEST(AttachPrompt, IsolatedSumReadoutSplitsOverComponents) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = RandomGraph(rng, 6, 3, 0.5);
    PromptGraph p = PromptGraph::Complete(RandomMatrix(rng, 3, 3));
    LinearGinParams params{0.3, RandomMatrix(rng, 3, 4)};
    const RowVector joint = LinearGinEncode(params, AttachPromptIsolated(g, p)).sum;
    const Graph pg(p.tokens, p.internal_edges);
    // Independent arithmetic: 1^T (A + (1+eps) I) X theta per component.
    auto sum_of = [&](const Graph& h) {
      Matrix prop = h.AdjacencyMatrix() + (1.0 + params.epsilon) * Matrix::Identity(h.num_nodes(), h.num_nodes());
      return RowVector((prop * h.features() * params.theta).colwise().sum());
    };
    EXPECT_LT((joint - sum_of(g) - sum_of(pg)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(AttachPrompt, CrosslinkedFull) {
  const Graph out = AttachPromptCrosslinked(Path(2), PromptGraph::Isolated(Matrix::Ones(3, 2)),
                                            LinkRule{LinkMode::kFull, 0});
  EXPECT_EQ(out.num_edges(), 1 + 6);
}

TEST(AttachPrompt, SimilarityPicksMostSimilarNode) {
  Matrix x(3, 2);
  x << 1, 0, 0, 1, -1, 0.2;
  const Graph g(x, {Edge(0, 1), Edge(1, 2)});
  Matrix tok(1, 2);
  tok << 1, 0;
  const Graph out = AttachPromptCrosslinked(g, PromptGraph::Isolated(tok), LinkRule{LinkMode::kSimilarity, 1});
  EXPECT_TRUE(out.HasEdge(0, 3));
  EXPECT_EQ(out.num_edges(), 3);
}

TEST(AttachPrompt, SimilarityWithKEqualNIsFull) {
  std::mt19937_64 rng(5);
  const Graph g = RandomGraph(rng, 5, 3, 0.3);
  PromptGraph p = PromptGraph::Complete(RandomMatrix(rng, 3, 3));
  EXPECT_EQ(AttachPromptCrosslinked(g, p, LinkRule{LinkMode::kSimilarity, 5}),
            AttachPromptCrosslinked(g, p, LinkRule{LinkMode::kFull, 0}));
  EXPECT_THROW(AttachPromptCrosslinked(g, p, LinkRule{LinkMode::kSimilarity, 6}), InvalidArgument);
}

TEST(AugmentLinks, IdentityComplementAndDeterminism) {
  const Graph tri(Matrix::Ones(3, 2), {Edge(0, 1), Edge(1, 2), Edge(0, 2)});
  EXPECT_EQ(AugmentLinks(tri, 0.0, 1), tri);
  EXPECT_EQ(AugmentLinks(tri, 1.0, 1).num_edges(), 0);
  std::mt19937_64 rng(2);
  const Graph g = RandomGraph(rng, 10, 2, 0.3);
  EXPECT_EQ(AugmentLinks(g, 0.3, 42), AugmentLinks(g, 0.3, 42));
  EXPECT_EQ(AugmentLinks(g, 0.3, 42).features(), g.features());
  EXPECT_THROW(AugmentLinks(g, 1.5, 0), InvalidArgument);
}

TEST(InducedSubgraph, SmallCases) {
  const Graph g = Path(3);
  EXPECT_EQ(InducedSubgraph(g, 1, 0).num_nodes(), 1);
  EXPECT_EQ(InducedSubgraph(g, 1, 0).num_edges(), 0);
  const Graph ball = InducedSubgraph(g, 1, 1);
  EXPECT_EQ(ball.num_nodes(), 3);
  EXPECT_EQ(ball.num_edges(), 2);
  EXPECT_THROW(InducedSubgraph(g, 3, 1), IndexOutOfRange);
}

// Distance by repeated relaxation over the edge list.
std::set<int> BallByRelaxation(const Graph& g, int center, int k) {
  const int n = g.num_nodes();
  std::vector<int> dist(n, n + 1);
  dist[center] = 0;
  for (int round = 0; round < n; ++round) {
    for (const Edge& e : g.edges()) {
      dist[e.v] = std::min(dist[e.v], dist[e.u] + 1);
      dist[e.u] = std::min(dist[e.u], dist[e.v] + 1);
    }
  }
  std::set<int> out;
  for (int v = 0; v < n; ++v) {
    if (dist[v] <= k) out.insert(v);
  }
  return out;
}

TEST(InducedSubgraph, MatchesRelaxationOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 25; ++trial) {
    const Graph g = RandomGraph(rng, 20, 2, 0.12);
    const int center = trial % 20;
    const int k = trial % 4;
    const std::vector<int> nodes = BfsBall(g, center, k);
    EXPECT_EQ(nodes.front(), center);
    EXPECT_EQ(std::set<int>(nodes.begin(), nodes.end()), BallByRelaxation(g, center, k));
    const Graph sub = InducedSubgraph(g, center, k);
    int expected_edges = 0;
    for (const Edge& e : g.edges()) {
      if (std::count(nodes.begin(), nodes.end(), e.u) && std::count(nodes.begin(), nodes.end(), e.v)) {
        ++expected_edges;
      }
    }
    EXPECT_EQ(sub.num_edges(), expected_edges);
  }
}

TEST(CosineSim, Basics) {
  RowVector a(2), b(2), c(2), z(2);
  a << 1, 0;
  b << 0, 1;
  c << -1, -1;
  z << 0, 0;
  EXPECT_DOUBLE_EQ(CosineSim(a, a), 1.0);
  EXPECT_DOUBLE_EQ(CosineSim(a, b), 0.0);
  EXPECT_NEAR(CosineSim(RowVector::Ones(2), c), -1.0, 1e-15);
  EXPECT_EQ(CosineSim(a, z), 0.0);
  EXPECT_THROW(CosineSim(a, RowVector::Ones(3)), DimensionMismatch);
}

TEST(GraphIo, RoundTripIsBitExact) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = RandomGraph(rng, 1 + trial, 3, 0.4);
    std::stringstream buf;
    WriteGraph(buf, g);
    const Graph back = ReadGraph(buf);
    EXPECT_EQ(back, g);
    std::stringstream again;
    WriteGraph(again, back);
    std::stringstream first;
    WriteGraph(first, g);
    EXPECT_EQ(again.str(), first.str());
  }
}

TEST(GraphIo, ReportsLineNumbers) {
  std::stringstream buf("2 1\n0.5\nabc\n");
  try {
    ReadGraph(buf, "toy");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

}  // namespace
}  // namespace gpl
