#include "gpl/pretrain.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gpl/digest.h"
#include "gpl/errors.h"
#include "test_util.h"

namespace gpl {
namespace {

using testing::NumericGrad;
using testing::RandomConnectedGraph;
using testing::RandomGraph;
using testing::RandomMatrix;
using testing::RelativeError;

double Scalar(const ad::Var& v) { return v.scalar(); }

TEST(InfoNce, TwoGraphClosedForm) {
  // Positive sim 1, negative sim -1, tau 1.
  ad::Tape tape;
  Matrix a(1, 2), b(1, 2);
  a << 1, 0;
  b << -1, 0;
  std::vector<ad::Var> anchors{tape.Constant(a), tape.Constant(b)};
  const double loss = Scalar(InfoNceLoss(anchors, anchors, 1.0));
  const double oracle = -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0)));
  EXPECT_NEAR(loss, oracle, 1e-12);
  EXPECT_NEAR(loss, 0.1269, 1e-4);
}

TEST(InfoNce, UniformEmbeddingsGiveLogBatchSize) {
  for (int n : {2, 3, 7}) {
    ad::Tape tape;
    std::vector<ad::Var> same(n, tape.Constant(Matrix::Ones(1, 3)));
    EXPECT_NEAR(Scalar(InfoNceLoss(same, same, 0.5)), std::log(static_cast<double>(n)), 1e-12);
  }
}

TEST(InfoNce, RejectsSingletonBatch) {
  ad::Tape tape;
  std::vector<ad::Var> one{tape.Constant(Matrix::Ones(1, 2))};
  EXPECT_THROW(InfoNceLoss(one, one, 0.5), InvalidArgument);
}

PretrainConfig SmallConfig(Architecture arch = Architecture::kAttention) {
  PretrainConfig cfg;
  cfg.arch = arch;
  cfg.hidden_dim = 4;
  cfg.num_layers = 2;
  cfg.epochs = 0;
  cfg.flip_prob = 0.2;
  return cfg;
}

TEST(ContrastiveLoss, InvariantUnderBatchReorder) {
  std::mt19937_64 rng(1);
  std::vector<Graph> batch;
  for (int i = 0; i < 4; ++i) batch.push_back(RandomGraph(rng, 5, 3, 0.4));
  const EncoderParams p = InitEncoder(Architecture::kAttention, 3, 4, 2, 2);
  ad::Tape tape;
  BoundEncoder enc = Bind(tape, p, false);
  std::vector<ad::Var> anchors, positives;
  for (const Graph& g : batch) {
    anchors.push_back(EncodeGraph(enc, g));
    positives.push_back(EncodeGraph(enc, AugmentLinks(g, 0.3, 5)));
  }
  const double forward = InfoNceLoss(anchors, positives, 0.5).scalar();
  std::reverse(anchors.begin(), anchors.end());
  std::reverse(positives.begin(), positives.end());
  EXPECT_NEAR(InfoNceLoss(anchors, positives, 0.5).scalar(), forward, 1e-12);
}

class PretrainGradients : public ::testing::TestWithParam<int> {};

TEST_P(PretrainGradients, ContrastiveMatchesFiniteDifferences) {
  std::mt19937_64 rng(GetParam());
  const PretrainConfig cfg = SmallConfig(GetParam() % 2 ? Architecture::kTransformer : Architecture::kAttention);
  std::vector<Graph> batch;
  for (int i = 0; i < 3; ++i) batch.push_back(RandomGraph(rng, 4, 3, 0.5));
  EncoderParams params = InitEncoder(cfg.arch, 3, cfg.hidden_dim, 2, GetParam());
  ad::Tape tape;
  BoundEncoder enc = Bind(tape, params, true);
  tape.Backward(ContrastiveLoss(enc, batch, cfg, 77));
  const auto grads = CollectGrads(tape, enc);
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    auto f = [&](const Matrix& m) {
      EncoderParams q = params;
      q.tensors[i].second = m;
      return ContrastiveLossValue(q, batch, cfg, 77);
    };
    EXPECT_LT(RelativeError(grads[i], NumericGrad(f, params.tensors[i].second)), 1e-4) << params.tensors[i].first;
  }
}

TEST_P(PretrainGradients, LinkPredictionMatchesFiniteDifferences) {
  std::mt19937_64 rng(100 + GetParam());
  const Graph g = RandomConnectedGraph(rng, 6, 3, 0.2);
  LinkTriplet t;
  ASSERT_TRUE(SampleTriplet(g, GetParam(), &t));
  const Architecture arch = GetParam() % 2 ? Architecture::kTransformer : Architecture::kAttention;
  EncoderParams params = InitEncoder(arch, 3, 4, 2, GetParam());
  ad::Tape tape;
  BoundEncoder enc = Bind(tape, params, true);
  tape.Backward(LinkPredictionLoss(enc, g, t, 0.5));
  const auto grads = CollectGrads(tape, enc);
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    auto f = [&](const Matrix& m) {
      EncoderParams q = params;
      q.tensors[i].second = m;
      ad::Tape t2;
      return LinkPredictionLoss(Bind(t2, q, false), g, t, 0.5).scalar();
    };
    EXPECT_LT(RelativeError(grads[i], NumericGrad(f, params.tensors[i].second)), 1e-4) << params.tensors[i].first;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, PretrainGradients, ::testing::Range(0, 20));

TEST(LinkPrediction, ClosedForms) {
  Matrix h(3, 2);
  h << 1, 0, 1, 0, -1, 0;
  ad::Tape tape;
  const double loss = LinkPredictionLoss(tape.Constant(h), LinkTriplet{0, 1, 2}, 1.0).scalar();
  EXPECT_NEAR(loss, -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0))), 1e-12);
  Matrix tie(3, 2);
  tie << 1, 0, 0, 1, 0, 1;
  EXPECT_NEAR(LinkPredictionLoss(tape.Constant(tie), LinkTriplet{0, 1, 2}, 0.5).scalar(), std::log(2.0), 1e-12);
}

TEST(LinkPrediction, DecreasesAsPositiveSimilarityGrows) {
  double prev = 1e9;
  for (double angle = 3.0; angle >= 0.0; angle -= 0.25) {
    Matrix h(3, 2);
    h << 1, 0, std::cos(angle), std::sin(angle), 0, 1;
    ad::Tape tape;
    const double loss = LinkPredictionLoss(tape.Constant(h), LinkTriplet{0, 1, 2}, 0.5).scalar();
    EXPECT_LT(loss, prev);
    prev = loss;
  }
}

TEST(LinkPrediction, RejectsInvalidTriplets) {
  const Graph g(Matrix::Ones(3, 2), {Edge(0, 1)});
  const EncoderParams p = InitEncoder(Architecture::kAttention, 2, 3, 1, 0);
  ad::Tape tape;
  BoundEncoder enc = Bind(tape, p, false);
  EXPECT_THROW(LinkPredictionLoss(enc, g, LinkTriplet{0, 2, 1}, 0.5), InvalidArgument);
  EXPECT_THROW(LinkPredictionLoss(enc, g, LinkTriplet{0, 1, 0}, 0.5), InvalidArgument);
  EXPECT_THROW(LinkPredictionLoss(enc, g, LinkTriplet{0, 1, 5}, 0.5), IndexOutOfRange);
}

// Two clusters of graphs whose features point in different directions.
std::vector<Graph> TwoClusterCorpus(int per_cluster, std::uint64_t seed, std::vector<int>* labels) {
  std::mt19937_64 rng(seed);
  std::vector<Graph> corpus;
  for (int i = 0; i < 2 * per_cluster; ++i) {
    const int c = i % 2;
    Graph base = RandomConnectedGraph(rng, 6, 4, 0.3);
    Matrix x = 0.3 * base.features();
    x.col(c) += Eigen::VectorXd::Constant(6, 2.0);
    corpus.emplace_back(x, base.edges());
    labels->push_back(c);
  }
  return corpus;
}

double MeanCos(const Matrix& embs, const std::vector<int>& labels, bool same) {
  double total = 0.0;
  int count = 0;
  for (int i = 0; i < embs.rows(); ++i) {
    for (int j = i + 1; j < embs.rows(); ++j) {
      if ((labels[i] == labels[j]) != same) continue;
      total += CosineSim(embs.row(i), embs.row(j));
      ++count;
    }
  }
  return total / count;
}

TEST(TrainCleanEncoder, ZeroEpochsReturnsInit) {
  std::vector<int> labels;
  const auto corpus = TwoClusterCorpus(3, 1, &labels);
  PretrainConfig cfg = SmallConfig();
  cfg.seed = 5;
  const PretrainResult r = TrainCleanEncoder(corpus, cfg, PretrainObjective::kGraphCl);
  EXPECT_EQ(r.params, InitEncoder(cfg.arch, 4, cfg.hidden_dim, cfg.num_layers, DeriveSeed(5, "init")));
  EXPECT_TRUE(r.epoch_losses.empty());
}

TEST(TrainCleanEncoder, SeparatesClustersAndReducesLoss) {
  std::vector<int> labels;
  const auto corpus = TwoClusterCorpus(8, 2, &labels);
  for (PretrainObjective objective : {PretrainObjective::kGraphCl, PretrainObjective::kLinkPred}) {
    PretrainConfig cfg;
    cfg.hidden_dim = 8;
    cfg.epochs = 30;
    cfg.lr = 0.01;
    cfg.seed = 3;
    const PretrainResult r = TrainCleanEncoder(corpus, cfg, objective);
    EXPECT_LE(r.eval_after, r.eval_before) << ObjectiveName(objective);
    Matrix embs(static_cast<Eigen::Index>(corpus.size()), cfg.hidden_dim);
    for (size_t i = 0; i < corpus.size(); ++i) embs.row(static_cast<Eigen::Index>(i)) = EncodeGraph(r.params, corpus[i]);
    EXPECT_GT(MeanCos(embs, labels, true), MeanCos(embs, labels, false)) << ObjectiveName(objective);
  }
}

TEST(TrainCleanEncoder, DeterministicGivenSeed) {
  std::vector<int> labels;
  const auto corpus = TwoClusterCorpus(4, 3, &labels);
  PretrainConfig cfg = SmallConfig(Architecture::kTransformer);
  cfg.epochs = 3;
  cfg.batch_size = 3;
  cfg.seed = 9;
  const PretrainResult a = TrainCleanEncoder(corpus, cfg, PretrainObjective::kGraphCl);
  const PretrainResult b = TrainCleanEncoder(corpus, cfg, PretrainObjective::kGraphCl);
  EXPECT_EQ(CheckpointText(EncoderToCheckpoint(a.params)), CheckpointText(EncoderToCheckpoint(b.params)));
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
}

TEST(TrainCleanEncoder, ValidatesInput) {
  PretrainConfig cfg = SmallConfig();
  EXPECT_THROW(TrainCleanEncoder({}, cfg, PretrainObjective::kGraphCl), InvalidArgument);
  cfg.temperature = 0.0;
  EXPECT_THROW(TrainCleanEncoder({Graph(Matrix::Ones(2, 2), {})}, cfg, PretrainObjective::kLinkPred),
               InvalidArgument);
}

}  // namespace
}  // namespace gpl
