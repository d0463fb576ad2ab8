#include "gpl/encoder.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "gpl/errors.h"
#include "gpl/linear_gin.h"
#include "test_util.h"

namespace gpl {
namespace {

using testing::NumericGrad;
using testing::RandomGraph;
using testing::RandomMatrix;
using testing::RelativeError;

class EncoderArch : public ::testing::TestWithParam<Architecture> {};

Graph Permute(const Graph& g, const std::vector<int>& perm) {
  // Node i of the result is node perm[i] of g.
  std::vector<int> inverse(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = static_cast<int>(i);
  Matrix x(g.num_nodes(), g.feature_dim());
  for (int i = 0; i < g.num_nodes(); ++i) x.row(i) = g.features().row(perm[i]);
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) edges.emplace_back(inverse[e.u], inverse[e.v]);
  return Graph(x, edges);
}

TEST_P(EncoderArch, PermutationEquivariance) {
  std::mt19937_64 rng(1);
  const EncoderParams params = InitEncoder(GetParam(), 4, 6, 2, 7);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = RandomGraph(rng, 8, 4, 0.35);
    std::vector<int> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Matrix h = EncodeNodes(params, g);
    const Matrix hp = EncodeNodes(params, Permute(g, perm));
    for (int i = 0; i < 8; ++i) EXPECT_LT((hp.row(i) - h.row(perm[i])).norm(), 1e-12);
    EXPECT_LT((EncodeGraph(params, g) - EncodeGraph(params, Permute(g, perm))).norm(), 1e-11);
  }
}

TEST_P(EncoderArch, IdenticalIsolatedNodesGetIdenticalRows) {
  const EncoderParams params = InitEncoder(GetParam(), 3, 5, 2, 3);
  const Matrix h = EncodeNodes(params, Graph(Matrix::Constant(2, 3, 0.7), {}));
  EXPECT_EQ(h.row(0), h.row(1));
}

TEST_P(EncoderArch, DisjointUnionSumsComponents) {
  std::mt19937_64 rng(2);
  const EncoderParams params = InitEncoder(GetParam(), 3, 5, 2, 9);
  const Graph a = RandomGraph(rng, 5, 3, 0.5);
  const Graph b = RandomGraph(rng, 4, 3, 0.5);
  const Graph joint = AttachPromptIsolated(a, PromptGraph{b.features(), b.edges()});
  EXPECT_LT((EncodeGraph(params, joint) - EncodeGraph(params, a) - EncodeGraph(params, b)).norm(),
            1e-11);
}

TEST_P(EncoderArch, ZeroFeaturesGiveZeroEmbedding) {
  const EncoderParams params = InitEncoder(GetParam(), 3, 5, 2, 4);
  const Graph g(Matrix::Zero(4, 3), {Edge(0, 1), Edge(2, 3)});
  EXPECT_EQ(EncodeGraph(params, g).norm(), 0.0);
}

TEST_P(EncoderArch, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    EncoderParams params = InitEncoder(GetParam(), 3, 4, 2, 100 + trial);
    for (auto& kv : params.tensors) kv.second += RandomMatrix(rng, kv.second.rows(), kv.second.cols(), 0.3);
    const Graph g = RandomGraph(rng, 5, 3, 0.5);
    const Matrix mask = g.SelfLoopMask();
    const Matrix probe = RandomMatrix(rng, 5, 4);
    // Scalar objective: <probe, H>.
    auto objective = [&](const EncoderParams& p, const Matrix& x) {
      ad::Tape t;
      BoundEncoder enc = Bind(t, p, false);
      return EncodeNodes(enc, t.Constant(x), mask).value().cwiseProduct(probe).sum();
    };
    ad::Tape tape;
    BoundEncoder enc = Bind(tape, params, true);
    ad::Var x = tape.Leaf(g.features());
    tape.Backward(ad::Sum(ad::Hadamard(EncodeNodes(enc, x, mask), tape.Constant(probe))));
    EXPECT_LT(RelativeError(tape.Grad(x),
                            NumericGrad([&](const Matrix& m) { return objective(params, m); }, g.features())),
              1e-4);
    const auto grads = CollectGrads(tape, enc);
    for (size_t i = 0; i < params.tensors.size(); ++i) {
      auto f = [&](const Matrix& m) {
        EncoderParams q = params;
        q.tensors[i].second = m;
        return objective(q, g.features());
      };
      EXPECT_LT(RelativeError(grads[i], NumericGrad(f, params.tensors[i].second)), 1e-4)
          << params.tensors[i].first;
    }
  }
}

TEST_P(EncoderArch, CheckpointRoundTrip) {
  const EncoderParams params = InitEncoder(GetParam(), 3, 4, 2, 8);
  std::stringstream buf;
  WriteCheckpoint(buf, EncoderToCheckpoint(params));
  const EncoderParams back = EncoderFromCheckpoint(ReadCheckpoint(buf));
  EXPECT_EQ(back, params);
  EXPECT_EQ(EncoderHash(back), EncoderHash(params));
}

INSTANTIATE_TEST_SUITE_P(Both, EncoderArch,
                         ::testing::Values(Architecture::kAttention, Architecture::kTransformer),
                         [](const auto& info) { return ArchitectureName(info.param); });

TEST(Encoder, RejectsBadInput) {
  const EncoderParams params = InitEncoder(Architecture::kAttention, 3, 4, 2, 1);
  EXPECT_THROW(EncodeNodes(params, Graph(Matrix::Ones(2, 2), {})), DimensionMismatch);
  EncoderParams broken = params;
  broken.tensors[0].second(0, 0) = std::nan("");
  EXPECT_THROW(EncodeNodes(broken, Graph(Matrix::Ones(2, 3), {})), InvalidArgument);
}

TEST(Encoder, InitIsSeededAndBounded) {
  const EncoderParams a = InitEncoder(Architecture::kTransformer, 6, 4, 2, 3);
  EXPECT_EQ(a, InitEncoder(Architecture::kTransformer, 6, 4, 2, 3));
  EXPECT_LE(a.Tensor("layer0.query").cwiseAbs().maxCoeff(), 1.0 / std::sqrt(6.0));
  EXPECT_LE(a.Tensor("layer1.query").cwiseAbs().maxCoeff(), 1.0 / std::sqrt(4.0));
  EXPECT_EQ(a.Tensor("layer0.ffn_b1").norm(), 0.0);
}

TEST(Readout, SumAndMean) {
  Matrix rows(2, 2);
  rows << 1, 0, 0, 1;
  EXPECT_EQ(Readout(rows, ReadoutMode::kSum), RowVector::Ones(2));
  Matrix one(1, 3);
  one << 1, 2, 3;
  EXPECT_EQ(Readout(one, ReadoutMode::kMean), RowVector(one.row(0)));
  const Matrix same = Matrix::Constant(4, 2, 0.25);
  EXPECT_EQ(Readout(same, ReadoutMode::kSum), 4.0 * Readout(same, ReadoutMode::kMean));
  EXPECT_THROW(Readout(Matrix(0, 2), ReadoutMode::kSum), InvalidArgument);
}

TEST(LinearGin, TwoNodeArithmetic) {
  const Graph g(Matrix::Identity(2, 2), {Edge(0, 1)});
  const LinearGinOutput out = LinearGinEncode(LinearGinParams{0.0, Matrix::Identity(2, 2)}, g);
  EXPECT_EQ(out.nodes, Matrix::Ones(2, 2));
  EXPECT_EQ(out.sum, RowVector::Constant(2, 2.0));
}

TEST(LinearGin, EdgelessIsFeatureProjection) {
  std::mt19937_64 rng(1);
  const Graph g(RandomMatrix(rng, 4, 3), {});
  const LinearGinParams p{0.0, RandomMatrix(rng, 3, 2)};
  EXPECT_LT((LinearGinEncode(p, g).nodes - g.features() * p.theta).norm(), 1e-14);
}

TEST(LinearGin, MatchesLoopOracle) {
  std::mt19937_64 rng(6);
  const Graph g = RandomGraph(rng, 6, 3, 0.4);
  const LinearGinParams p{0.37, RandomMatrix(rng, 3, 4)};
  const auto adj = g.Neighbors();
  Matrix expected = Matrix::Zero(6, 4);
  for (int v = 0; v < 6; ++v) {
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) {
        double agg = (1.0 + p.epsilon) * g.features()(v, k);
        for (int u : adj[v]) agg += g.features()(u, k);
        acc += agg * p.theta(k, c);
      }
      expected(v, c) = acc;
    }
  }
  EXPECT_LT((LinearGinEncode(p, g).nodes - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LinearGin, LinearInFeatures) {
  std::mt19937_64 rng(7);
  const Graph g = RandomGraph(rng, 6, 3, 0.4);
  const Matrix y = RandomMatrix(rng, 6, 3);
  const LinearGinParams p{0.2, RandomMatrix(rng, 3, 4)};
  const double a = 1.7, b = -0.6;
  const Matrix lhs = LinearGinEncode(p, Graph(a * g.features() + b * y, g.edges())).nodes;
  const Matrix rhs = a * LinearGinEncode(p, g).nodes + b * LinearGinEncode(p, Graph(y, g.edges())).nodes;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(LinearGinEncode(LinearGinParams{0.0, Matrix::Ones(2, 2)}, g), DimensionMismatch);
}

}  // namespace
}  // namespace gpl
