#include "gpl/attack.h"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gpl/errors.h"
#include "test_util.h"

namespace gpl {
namespace {

using testing::NumericGrad;
using testing::RandomConnectedGraph;
using testing::RandomMatrix;
using testing::RelativeError;

std::vector<Graph> Corpus(std::uint64_t seed, int count = 5, int d = 4) {
  std::mt19937_64 rng(seed);
  std::vector<Graph> corpus;
  for (int i = 0; i < count; ++i) {
    Graph g = RandomConnectedGraph(rng, 3 + i % 4, d, 0.3);
    corpus.emplace_back(g.features().array() + 0.5, g.edges());
  }
  return corpus;
}

EncoderParams Perturbed(Architecture arch, int d, int h, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  EncoderParams p = InitEncoder(arch, d, h, 2, seed);
  for (auto& kv : p.tensors) kv.second += RandomMatrix(rng, kv.second.rows(), kv.second.cols(), scale);
  return p;
}

AttackConfig SmallConfig() {
  AttackConfig cfg;
  cfg.rounds = 0;
  cfg.seed = 11;
  cfg.clr_trace_batch = 3;
  return cfg;
}

// Encoder whose every node embedding equals `bias` of the last layer.
EncoderParams ConstantEncoder(int d, const RowVector& bias) {
  EncoderParams p = InitEncoder(Architecture::kAttention, d, static_cast<int>(bias.size()), 1, 0);
  p.Tensor("layer0.weight").setZero();
  p.Tensor("layer0.bias") = bias;
  return p;
}

TEST(BackdoorLoss, MatchesValueLevelOracle) {
  const auto corpus = Corpus(1);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const EncoderParams p = Perturbed(trial % 2 ? Architecture::kTransformer : Architecture::kAttention, 4, 5, trial);
    const TriggerGraph trig{RandomMatrix(rng, 3, 4), trial % 3};
    std::vector<AnchorChoice> anchors;
    for (size_t i = 0; i < corpus.size(); ++i) anchors.push_back(AnchorChoice::Sample(corpus[i], trial * 10 + i));
    const double lambda = 0.3;
    double collide = 0.0, stay = 0.0;
    const RowVector et = EncodeGraph(p, trig.AsGraph());
    for (size_t i = 0; i < corpus.size(); ++i) {
      const RowVector bd = EncodeGraph(p, AttachTrigger(corpus[i], trig, anchors[i]));
      collide += CosineSim(bd, et);
      stay += CosineSim(bd, EncodeGraph(p, corpus[i]));
    }
    const double n = static_cast<double>(corpus.size());
    EXPECT_NEAR(BackdoorLossValue(p, corpus, trig, anchors, lambda), -collide / n + lambda * stay / n, 1e-12);
  }
}

TEST(BackdoorLoss, CollinearEmbeddingsGiveMinusOne) {
  const auto corpus = Corpus(3);
  RowVector b(3);
  b << 0.2, -1.0, 0.5;
  const EncoderParams p = ConstantEncoder(4, b);
  std::vector<AnchorChoice> anchors(corpus.size());
  const TriggerGraph trig{Matrix::Ones(3, 4), 0};
  EXPECT_NEAR(BackdoorLossValue(p, corpus, trig, anchors, 0.0), -1.0, 1e-12);
  EXPECT_NEAR(BackdoorLossValue(p, corpus, trig, anchors, 0.25), -0.75, 1e-12);
  EXPECT_THROW(BackdoorLossValue(p, {}, trig, {}, 0.0), InvalidArgument);
}

TEST(AlignLoss, SelfAndOrthogonal) {
  const auto corpus = Corpus(4);
  const EncoderParams p = Perturbed(Architecture::kAttention, 4, 5, 3);
  EXPECT_NEAR(AlignLossValue(p, p, corpus), -1.0, 1e-12);
  RowVector e1 = RowVector::Zero(3), e2 = RowVector::Zero(3);
  e1(0) = 1.0;
  e2(1) = 2.0;
  EXPECT_NEAR(AlignLossValue(ConstantEncoder(4, e1), ConstantEncoder(4, e2), corpus), 0.0, 1e-15);
}

TEST(AlignLoss, IncreasesAlongPerturbationLine) {
  const auto corpus = Corpus(5);
  const EncoderParams clean = Perturbed(Architecture::kTransformer, 4, 5, 8);
  std::mt19937_64 rng(9);
  std::vector<Matrix> dir;
  for (const auto& kv : clean.tensors) dir.push_back(RandomMatrix(rng, kv.second.rows(), kv.second.cols()));
  double prev = AlignLossValue(clean, clean, corpus);
  for (double s = 0.01; s <= 0.1; s += 0.01) {
    EncoderParams moved = clean;
    for (size_t i = 0; i < dir.size(); ++i) moved.tensors[i].second += s * dir[i];
    const double v = AlignLossValue(moved, clean, corpus);
    EXPECT_GT(v, prev) << "s=" << s;
    prev = v;
  }
}

TEST(AffinityLoss, ClosedFormsAndDescent) {
  Matrix anchor(1, 3);
  anchor << 0.3, -0.2, 0.9;
  EXPECT_NEAR(AffinityLossValue(anchor.replicate(3, 1), anchor), -1.0, 1e-12);
  Matrix ortho(2, 3);
  ortho << 0.2, 0.3, 0.0, -0.6, 0.4, 0.0;
  Matrix z(1, 3);
  z << 0, 0, 2;
  EXPECT_NEAR(AffinityLossValue(ortho, z), 0.0, 1e-15);
  EXPECT_THROW(AffinityLossValue(ortho, Matrix(0, 3)), InvalidArgument);

  // Equal-norm anchors: minimizing drives every trigger row to their mean direction.
  std::mt19937_64 rng(4);
  Matrix anchors = RandomMatrix(rng, 6, 3);
  anchors.rowwise().normalize();
  anchors.col(0).array() += 2.0;
  anchors.rowwise().normalize();
  const RowVector mean = anchors.colwise().mean();
  Matrix trig = RandomMatrix(rng, 3, 3);
  for (int it = 0; it < 4000; ++it) {
    ad::Tape tape;
    ad::Var t = tape.Leaf(trig);
    tape.Backward(AffinityLoss(t, anchors));
    trig -= 0.5 * tape.Grad(t);
  }
  for (int j = 0; j < 3; ++j) EXPECT_GT(CosineSim(trig.row(j), mean), 1.0 - 1e-3);
}

class LossGradients : public ::testing::TestWithParam<int> {};

TEST_P(LossGradients, MatchFiniteDifferences) {
  const int seed = GetParam();
  const auto corpus = Corpus(100 + seed, 3);
  const Architecture arch = seed % 2 ? Architecture::kTransformer : Architecture::kAttention;
  const EncoderParams p = Perturbed(arch, 4, 4, seed);
  const EncoderParams clean = Perturbed(arch, 4, 4, seed + 1000);
  std::mt19937_64 rng(seed);
  TriggerGraph trig{RandomMatrix(rng, 3, 4), seed % 3};
  std::vector<AnchorChoice> anchors;
  for (size_t i = 0; i < corpus.size(); ++i) anchors.push_back(AnchorChoice::Sample(corpus[i], seed + i));
  const double lambda = 0.2;

  {  // L_bdk w.r.t. trigger features and encoder parameters.
    ad::Tape tape;
    BoundEncoder enc = Bind(tape, p, true);
    ad::Var t = tape.Leaf(trig.features);
    tape.Backward(BackdoorLoss(enc, corpus, t, trig.attach_node, anchors, lambda, ReadoutMode::kSum));
    const Matrix numeric = NumericGrad(
        [&](const Matrix& m) { return BackdoorLossValue(p, corpus, TriggerGraph{m, trig.attach_node}, anchors, lambda); },
        trig.features);
    EXPECT_LT(RelativeError(tape.Grad(t), numeric), 1e-4);
    const auto grads = CollectGrads(tape, enc);
    for (size_t i = 0; i < p.tensors.size(); ++i) {
      auto f = [&](const Matrix& m) {
        EncoderParams q = p;
        q.tensors[i].second = m;
        return BackdoorLossValue(q, corpus, trig, anchors, lambda);
      };
      EXPECT_LT(RelativeError(grads[i], NumericGrad(f, p.tensors[i].second)), 1e-4) << p.tensors[i].first;
    }
  }
  {  // L_sim^c w.r.t. backdoored parameters.
    ad::Tape tape;
    BoundEncoder enc = Bind(tape, p, true);
    tape.Backward(AlignLoss(enc, corpus, CleanEmbeddings(clean, corpus, ReadoutMode::kSum), ReadoutMode::kSum));
    const auto grads = CollectGrads(tape, enc);
    for (size_t i = 0; i < p.tensors.size(); ++i) {
      auto f = [&](const Matrix& m) {
        EncoderParams q = p;
        q.tensors[i].second = m;
        return AlignLossValue(q, clean, corpus);
      };
      EXPECT_LT(RelativeError(grads[i], NumericGrad(f, p.tensors[i].second)), 1e-4) << p.tensors[i].first;
    }
  }
  {  // L_sim^a w.r.t. trigger features.
    const Matrix anchor_feats = AnchorFeatures(corpus, anchors);
    ad::Tape tape;
    ad::Var t = tape.Leaf(trig.features);
    tape.Backward(AffinityLoss(t, anchor_feats));
    const Matrix numeric =
        NumericGrad([&](const Matrix& m) { return AffinityLossValue(m, anchor_feats); }, trig.features);
    EXPECT_LT(RelativeError(tape.Grad(t), numeric), 1e-4);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, LossGradients, ::testing::Range(0, 20));

AttackState TestState(const std::vector<Graph>& corpus, const AttackConfig& cfg, std::uint64_t seed) {
  AttackState s = InitCrossbaState(corpus, Perturbed(Architecture::kAttention, 4, 5, seed), cfg);
  // Move the backdoored copy off the clean one so the align term has a gradient.
  s.backdoored = Perturbed(Architecture::kAttention, 4, 5, seed, 0.35);
  std::mt19937_64 rng(seed);
  for (auto& kv : s.backdoored.tensors) kv.second = s.clean.Tensor(kv.first) + RandomMatrix(rng, kv.second.rows(), kv.second.cols(), 0.1);
  return s;
}

TEST(TuneTriggerStep, ZeroRateLeavesTriggerUnchanged) {
  const auto corpus = Corpus(6);
  AttackConfig cfg = SmallConfig();
  cfg.gamma_t = 0.0;
  AttackState s = TestState(corpus, cfg, 1);
  const TriggerGraph before = s.trigger;
  TuneTriggerStep(s, corpus, cfg);
  EXPECT_EQ(s.trigger.features, before.features);
}

TEST(TuneTriggerStep, SmallStepDecreasesObjective) {
  const auto corpus = Corpus(7);
  for (OptimizerKind kind : {OptimizerKind::kAdam, OptimizerKind::kGradientDescent}) {
    AttackConfig cfg = SmallConfig();
    cfg.optimizer = kind;
    cfg.gamma_t = 1e-4;
    AttackState s = TestState(corpus, cfg, 2);
    const double before = TriggerObjective(s, corpus, cfg, nullptr).value;
    const EncoderParams enc_before = s.backdoored;
    TuneTriggerStep(s, corpus, cfg);
    EXPECT_LT(TriggerObjective(s, corpus, cfg, nullptr).value, before);
    EXPECT_EQ(s.backdoored, enc_before);
  }
}

TEST(TuneTriggerStep, StationaryPointLeavesTriggerUnchanged) {
  const auto corpus = Corpus(8);
  AttackConfig cfg = SmallConfig();
  cfg.beta = 0.0;
  AttackState s = InitCrossbaState(corpus, ConstantEncoder(4, RowVector::Zero(5)), cfg);
  const Matrix before = s.trigger.features;
  Matrix grad;
  TriggerObjective(s, corpus, cfg, &grad);
  EXPECT_EQ(grad.norm(), 0.0);
  TuneTriggerStep(s, corpus, cfg);
  EXPECT_EQ(s.trigger.features, before);
}

TEST(TuneEncoderStep, ZeroRateAndSmallStep) {
  const auto corpus = Corpus(9);
  AttackConfig cfg = SmallConfig();
  cfg.gamma_g = 0.0;
  AttackState s = TestState(corpus, cfg, 3);
  const EncoderParams before = s.backdoored;
  TuneEncoderStep(s, corpus, cfg);
  EXPECT_EQ(s.backdoored, before);

  cfg.gamma_g = 1e-4;
  cfg.optimizer = OptimizerKind::kGradientDescent;
  AttackState t = TestState(corpus, cfg, 3);
  const double obj_before = EncoderObjective(t, corpus, cfg, nullptr).value;
  const Matrix trig_before = t.trigger.features;
  const EncoderParams clean_before = t.clean;
  TuneEncoderStep(t, corpus, cfg);
  EXPECT_LE(EncoderObjective(t, corpus, cfg, nullptr).value, obj_before);
  EXPECT_EQ(t.trigger.features, trig_before);
  EXPECT_EQ(t.clean, clean_before);
}

Eigen::VectorXd Flatten(const std::vector<Matrix>& parts) {
  Eigen::Index n = 0;
  for (const Matrix& m : parts) n += m.size();
  Eigen::VectorXd v(n);
  Eigen::Index at = 0;
  for (const Matrix& m : parts) {
    v.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  }
  return v;
}

TEST(TuneEncoderStep, LargeAlphaFollowsAlignGradient) {
  const auto corpus = Corpus(10);
  AttackConfig cfg = SmallConfig();
  cfg.alpha = 1e6;
  AttackState s = TestState(corpus, cfg, 4);
  std::vector<Matrix> full;
  EncoderObjective(s, corpus, cfg, &full);
  ad::Tape tape;
  BoundEncoder enc = Bind(tape, s.backdoored, true);
  tape.Backward(AlignLoss(enc, corpus, CleanEmbeddings(s.clean, corpus, ReadoutMode::kSum), ReadoutMode::kSum));
  const Eigen::VectorXd a = Flatten(full);
  const Eigen::VectorXd b = Flatten(CollectGrads(tape, enc));
  EXPECT_GT(a.dot(b) / (a.norm() * b.norm()), 0.999);
}

TEST(RunCrossba, ZeroRoundsKeepsCleanEncoder) {
  const auto corpus = Corpus(12);
  const EncoderParams clean = Perturbed(Architecture::kAttention, 4, 5, 5);
  const AttackState s = RunCrossbaFrom(corpus, clean, SmallConfig());
  EXPECT_EQ(CheckpointText(EncoderToCheckpoint(s.backdoored)), CheckpointText(EncoderToCheckpoint(clean)));
  EXPECT_TRUE(s.trace.empty());
}

TEST(RunCrossba, RoundsAreIsolatedAndCleanStaysConstant) {
  const auto corpus = Corpus(13);
  AttackConfig cfg = SmallConfig();
  AttackState s = InitCrossbaState(corpus, Perturbed(Architecture::kAttention, 4, 5, 6), cfg);
  const std::string clean_text = CheckpointText(EncoderToCheckpoint(s.clean));
  for (int round = 0; round < 3; ++round) {
    const std::string enc_before = CheckpointText(EncoderToCheckpoint(s.backdoored));
    TuneTriggerStep(s, corpus, cfg);
    EXPECT_EQ(CheckpointText(EncoderToCheckpoint(s.backdoored)), enc_before);
    const Matrix trig_before = s.trigger.features;
    TuneEncoderStep(s, corpus, cfg);
    EXPECT_EQ(s.trigger.features, trig_before);
    EXPECT_EQ(CheckpointText(EncoderToCheckpoint(s.clean)), clean_text);
  }
}

TEST(RunCrossba, ReducesBackdoorLossAndIsDeterministic) {
  const auto corpus = Corpus(14, 6);
  AttackConfig cfg = SmallConfig();
  cfg.rounds = 20;
  cfg.gamma_t = 0.05;
  cfg.gamma_g = 0.005;
  const EncoderParams clean = Perturbed(Architecture::kAttention, 4, 5, 7);
  const AttackState a = RunCrossbaFrom(corpus, clean, cfg);
  ASSERT_EQ(a.trace.size(), 20u);
  EXPECT_LT(a.trace.back().l_bdk, a.trace.front().l_bdk);
  const AttackState b = RunCrossbaFrom(corpus, clean, cfg);
  EXPECT_EQ(CheckpointText(AttackStateToCheckpoint(a)), CheckpointText(AttackStateToCheckpoint(b)));
}

TEST(RunCrossba, PureCollisionObjectiveImproves) {
  const auto corpus = Corpus(15, 6);
  AttackConfig cfg = SmallConfig();
  cfg.alpha = cfg.beta = cfg.lambda = 0.0;
  cfg.rounds = 10;
  cfg.gamma_t = 0.02;
  cfg.gamma_g = 0.002;
  const EncoderParams clean = Perturbed(Architecture::kTransformer, 4, 5, 8);
  const AttackState init = InitCrossbaState(corpus, clean, cfg);
  const double before = BackdoorLossValue(init.backdoored, corpus, init.trigger, init.anchors, 0.0);
  const AttackState done = RunCrossbaFrom(corpus, clean, cfg);
  EXPECT_LT(BackdoorLossValue(done.backdoored, corpus, done.trigger, done.anchors, 0.0), before);
}

TEST(GcbaSelectTarget, TwoCloudsPickLowestIndexTie) {
  std::mt19937_64 rng(1);
  Matrix pts(20, 2);
  for (int i = 0; i < 20; ++i) {
    pts.row(i) = RandomMatrix(rng, 1, 2, 0.05);
    pts(i, 0) += i < 10 ? -5.0 : 5.0;
  }
  const RowVector c = GcbaSelectTarget(pts, 2, AttackKind::kGcbaM, 3);
  const RowVector left = pts.topRows(10).colwise().mean();
  const RowVector right = pts.bottomRows(10).colwise().mean();
  EXPECT_LT(std::min((c - left).norm(), (c - right).norm()), 1e-12);
}

TEST(GcbaSelectTarget, KEqualsPointCount) {
  Matrix pts(3, 2);
  pts << 0, 0, 1, 0, 0, 3;
  for (AttackKind mode : {AttackKind::kGcbaR, AttackKind::kGcbaM}) {
    const RowVector c = GcbaSelectTarget(pts, 3, mode, 5);
    double best = 1e9;
    for (int i = 0; i < 3; ++i) best = std::min(best, (c - pts.row(i)).norm());
    EXPECT_EQ(best, 0.0);
  }
  EXPECT_THROW(GcbaSelectTarget(pts, 4, AttackKind::kGcbaM, 5), InvalidArgument);
}

TEST(GcbaSelectTarget, CollinearClustersPickEndpoint) {
  std::mt19937_64 rng(2);
  Matrix pts(30, 2);
  for (int i = 0; i < 30; ++i) {
    pts.row(i) = RandomMatrix(rng, 1, 2, 0.02);
    pts(i, 0) += static_cast<double>(i / 10) - 1.0;
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RowVector c = GcbaSelectTarget(pts, 3, AttackKind::kGcbaM, seed);
    EXPECT_GT(std::abs(c(0)), 0.5) << "seed " << seed;
  }
}

TEST(RunGcba, PullsTowardTargetAndKeepsTriggerDissimilar) {
  const auto corpus = Corpus(16, 8);
  AttackConfig cfg = SmallConfig();
  cfg.gcba_clusters = 2;
  cfg.rounds = 15;
  cfg.gcba_gamma_t = 0.02;
  cfg.gcba_gamma_g = 0.01;
  const EncoderParams clean = Perturbed(Architecture::kAttention, 4, 5, 9);
  AttackConfig zero = cfg;
  zero.rounds = 0;
  const AttackState init = RunGcbaFrom(corpus, clean, zero, AttackKind::kGcbaR);
  EXPECT_EQ(init.backdoored, clean);
  const AttackState done = RunGcbaFrom(corpus, clean, cfg, AttackKind::kGcbaR);
  auto mean_cos = [&](const AttackState& s) {
    double total = 0.0;
    for (size_t i = 0; i < corpus.size(); ++i) {
      total += CosineSim(EncodeGraph(s.backdoored, AttachTrigger(corpus[i], s.trigger, s.anchors[i])),
                         s.target_embedding);
    }
    return total / corpus.size();
  };
  EXPECT_GT(mean_cos(done), mean_cos(init));
  ASSERT_TRUE(done.target_graph.has_value());
}

TEST(AttackState, CheckpointRoundTrip) {
  const auto corpus = Corpus(17, 6);
  AttackConfig cfg = SmallConfig();
  cfg.rounds = 2;
  cfg.gcba_clusters = 2;
  const EncoderParams clean = Perturbed(Architecture::kTransformer, 4, 5, 10);
  for (const AttackState& s : {RunCrossbaFrom(corpus, clean, cfg), RunGcbaFrom(corpus, clean, cfg, AttackKind::kGcbaM)}) {
    std::stringstream buf;
    WriteCheckpoint(buf, AttackStateToCheckpoint(s));
    const AttackState back = AttackStateFromCheckpoint(ReadCheckpoint(buf));
    EXPECT_EQ(CheckpointText(AttackStateToCheckpoint(back)), CheckpointText(AttackStateToCheckpoint(s)));
    EXPECT_EQ(back.kind, s.kind);
  }
}

}  // namespace
}  // namespace gpl
