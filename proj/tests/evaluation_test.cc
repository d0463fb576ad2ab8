#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "gpl/errors.h"
#include "gpl/metrics.h"
#include "gpl/pipeline.h"
#include "test_util.h"

namespace gpl {
namespace {

namespace fs = std::filesystem;

TEST(MetricsTest, AsrCountsExactly) {
  EXPECT_EQ(ComputeAsr({2, 2, 2}, 2, 3), (Rate{3, 3}));
  EXPECT_EQ(ComputeAsr({0, 1, 0}, 2, 3), (Rate{0, 3}));
  const Rate r = ComputeAsr({1, 1, 0, 1}, 1, 2);
  EXPECT_EQ(r, (Rate{3, 4}));
  EXPECT_EQ(r.value(), 0.75);
  EXPECT_THROW(ComputeAsr({}, 0, 2), InvalidArgument);
  EXPECT_THROW(ComputeAsr({0}, 2, 2), IndexOutOfRange);
}

TEST(MetricsTest, AccAdFromHandBuiltPredictions) {
  const std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  AccAd same = ComputeAccAd(labels, labels, labels);
  EXPECT_EQ(same.acc, (Rate{10, 10}));
  EXPECT_EQ(same.ad_hits, 0);
  EXPECT_EQ(same.ad(), 0.0);
  // Backdoored 5/10, clean 7/10: ad = +0.2 exactly as a count.
  std::vector<int> bd = {0, 1, 2, 0, 1, 0, 1, 0, 0, 1};
  std::vector<int> cl = {0, 1, 2, 0, 1, 2, 0, 0, 0, 1};
  AccAd r = ComputeAccAd(bd, cl, labels);
  EXPECT_EQ(r.acc, (Rate{5, 10}));
  EXPECT_EQ(r.clean_acc, (Rate{7, 10}));
  EXPECT_EQ(r.ad_hits, 2);
  EXPECT_EQ(r.ad_hits * 10, 20);
  // Negative drop when the backdoored model is better.
  AccAd neg = ComputeAccAd(cl, bd, labels);
  EXPECT_EQ(neg.ad_hits, -2);
  EXPECT_THROW(ComputeAccAd({}, {}, {}), InvalidArgument);
  EXPECT_THROW(ComputeAccAd({0}, {0, 1}, {0}), DimensionMismatch);
}

TEST(MetricsTest, AccMatchingReportedTableValue) {
  // 83 of 100 for both models: acc 0.83, ad 0.
  std::vector<int> labels(100, 0), preds(100, 0);
  for (int i = 83; i < 100; ++i) preds[i] = 1;
  AccAd r = ComputeAccAd(preds, preds, labels);
  EXPECT_EQ(r.acc, (Rate{83, 100}));
  EXPECT_EQ(r.ad_hits, 0);
}

TEST(MetricsTest, TargetClassIsPrototypeMatchingTrigger) {
  std::mt19937_64 rng(1);
  EncoderParams enc = InitEncoder(Architecture::kAttention, 3, 4, 2, 1);
  for (auto& kv : enc.tensors) kv.second += testing::RandomMatrix(rng, kv.second.rows(), kv.second.cols(), 0.3);
  AttackState state;
  state.kind = AttackKind::kCrossBA;
  state.trigger = TriggerGraph{testing::RandomMatrix(rng, 3, 3), 0};
  PromptState ps;
  ps.variant = PromptVariant::kGraphPrompt;
  ps.num_classes = 3;
  ps.prompt_vec = Matrix::Ones(1, 4);
  ps.prototypes = testing::RandomMatrix(rng, 3, 4);
  ps.prototypes.row(1) = EncodeGraph(enc, state.trigger.AsGraph());
  EXPECT_EQ(ResolveTargetClass(enc, state, ps), 1);
  EXPECT_EQ(ResolveTargetClass(enc, state, ps), 1);
}

SynthConfig TinySynth(std::uint64_t seed) {
  SynthConfig s;
  s.num_blocks = 3;
  s.nodes_per_block = 25;
  s.p_intra = 0.15;
  s.p_inter = 0.01;
  s.feature_dim = 6;
  s.seed = seed;
  return s;
}

ScenarioSplit TinySplit(std::uint64_t seed) {
  SplitConfig sp;
  sp.max_nodes = 10;
  sp.num_parts = 4;
  sp.pretrain_graphs = 16;
  sp.downstream_graphs = 30;
  return MakeSplit({GenSyntheticCorpus(TinySynth(seed))}, Scenario::kCrossDistribution, seed, sp);
}

PipelineConfig TinyPipeline(AttackKind attack) {
  PipelineConfig cfg;
  cfg.pretrain.hidden_dim = 8;
  cfg.pretrain.epochs = 3;
  cfg.pretrain.lr = 0.01;
  cfg.pretrain.batch_size = 8;
  cfg.attack = attack;
  cfg.attack_cfg.rounds = 5;
  cfg.attack_cfg.gamma_t = 0.05;
  cfg.attack_cfg.gamma_g = 0.01;
  cfg.attack_cfg.gcba_clusters = 3;
  cfg.prompt.num_tokens = 3;
  cfg.prompt.epochs = 10;
  cfg.prompt.lr = 0.05;
  cfg.shots_per_class = 3;
  cfg.seed = 4;
  return cfg;
}

TEST(PipelineTest, NoAttackHasZeroDrop) {
  ScenarioSplit split = TinySplit(1);
  for (PromptVariant v : {PromptVariant::kProG, PromptVariant::kGraphPrompt}) {
    PipelineConfig cfg = TinyPipeline(AttackKind::kNone);
    cfg.prompt.variant = v;
    MetricsReport r = RunPipeline(split, cfg);
    ASSERT_EQ(r.status, "ok") << r.error;
    EXPECT_EQ(r.ad_hits, 0);
    EXPECT_EQ(r.acc, r.clean_acc);
    EXPECT_GT(r.acc.total, 0);
    EXPECT_EQ(r.asr.total, r.acc.total);
  }
}

TEST(PipelineTest, RepeatedRunsGiveIdenticalReports) {
  ScenarioSplit split = TinySplit(2);
  for (AttackKind a : {AttackKind::kCrossBA, AttackKind::kGcbaM}) {
    PipelineConfig cfg = TinyPipeline(a);
    cfg.defense = true;
    const std::string first = ReportToJson(RunPipeline(split, cfg)).dump();
    const std::string second = ReportToJson(RunPipeline(split, cfg)).dump();
    EXPECT_EQ(first, second);
    EXPECT_NE(first.find("\"status\":\"ok\""), std::string::npos) << first;
  }
}

TEST(PipelineTest, SuppliedCleanEncoderMatchesInternalPretraining) {
  ScenarioSplit split = TinySplit(3);
  PipelineConfig cfg = TinyPipeline(AttackKind::kCrossBA);
  const PipelineConfig seeded = WithDerivedSeeds(cfg);
  EncoderParams clean = TrainCleanEncoder(split.pretrain, seeded.pretrain, seeded.objective).params;
  EXPECT_EQ(ReportToJson(RunPipeline(split, cfg, &clean)).dump(), ReportToJson(RunPipeline(split, cfg)).dump());
}

TEST(PipelineTest, SuppliedAttackStateAndArtifacts) {
  ScenarioSplit split = TinySplit(5);
  PipelineConfig cfg = TinyPipeline(AttackKind::kGcbaR);
  PipelineArtifacts art;
  const MetricsReport direct = RunPipeline(split, cfg, PipelineInputs{}, &art);
  ASSERT_EQ(direct.status, "ok") << direct.error;
  ASSERT_TRUE(art.clean && art.attack && art.prompt);
  EXPECT_EQ(SummarizeProfile(art.profile).trigger_edges, direct.similarity.trigger_edges);
  const MetricsReport reused = RunPipeline(split, cfg, PipelineInputs{&*art.clean, &*art.attack}, nullptr);
  EXPECT_EQ(ReportToJson(reused).dump(), ReportToJson(direct).dump());
  cfg.attack = AttackKind::kCrossBA;
  const MetricsReport mismatch = RunPipeline(split, cfg, PipelineInputs{&*art.clean, &*art.attack}, nullptr);
  EXPECT_EQ(mismatch.status, "failed");
  EXPECT_NE(mismatch.error.find("GCBA_R"), std::string::npos);
}

TEST(PipelineTest, ConfigHashTracksEveryField) {
  PipelineConfig a = TinyPipeline(AttackKind::kCrossBA);
  PipelineConfig b = a;
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  b.prune.threshold = 0.3;
  EXPECT_NE(ConfigHash(a), ConfigHash(b));
  b = a;
  b.prompt.num_tokens = 4;
  EXPECT_NE(ConfigHash(a), ConfigHash(b));
  EXPECT_NE(CanonicalText(a).find("attack.kind=CROSSBA\n"), std::string::npos);
}

TEST(PipelineTest, FailuresAreRecordedInStatus) {
  ScenarioSplit split = TinySplit(1);
  PipelineConfig cfg = TinyPipeline(AttackKind::kCrossBA);
  cfg.attack_cfg.gamma_g = 1e300;
  cfg.attack_cfg.optimizer = OptimizerKind::kGradientDescent;
  MetricsReport r = RunPipeline(split, cfg);
  EXPECT_EQ(r.status, "failed");
  EXPECT_FALSE(r.error.empty());
  cfg.shots_per_class = 0;
  EXPECT_THROW(RunPipeline(split, cfg), InvalidArgument);
}

TEST(PipelineTest, PretrainCacheReusesCheckpoint) {
  const fs::path dir = fs::temp_directory_path() / "gpl_pretrain_cache_test";
  fs::remove_all(dir);
  ScenarioSplit split = TinySplit(5);
  PretrainConfig pc = TinyPipeline(AttackKind::kNone).pretrain;
  EncoderParams a = PretrainCached(split.pretrain, pc, PretrainObjective::kGraphCl, dir.string());
  ASSERT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 1);
  EncoderParams b = PretrainCached(split.pretrain, pc, PretrainObjective::kGraphCl, dir.string());
  EXPECT_EQ(EncoderHash(a), EncoderHash(b));
  EXPECT_EQ(EncoderHash(a), EncoderHash(TrainCleanEncoder(split.pretrain, pc, PretrainObjective::kGraphCl).params));
}

TEST(PipelineTest, ReportCsvAppendsRowsUnderOneHeader) {
  const fs::path path = fs::temp_directory_path() / "gpl_report_test.csv";
  fs::remove(path);
  MetricsReport r;
  r.gpl = "PROG";
  r.model = "ATTN";
  r.attack = "CROSSBA";
  r.scenario = "CROSS_CLASS";
  r.acc = {3, 4};
  r.clean_acc = {4, 4};
  r.ad_hits = 1;
  r.asr = {1, 2};
  r.config_hash = "h";
  AppendReportCsv(path.string(), r);
  AppendReportCsv(path.string(), r);
  std::ifstream in(path);
  std::string header, row1, row2, extra;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  EXPECT_FALSE(static_cast<bool>(std::getline(in, extra)));
  EXPECT_EQ(header, "GPL,Model,Attack,Scenario,Defense,Seed,ACC,AD,ASR,status,config_hash");
  EXPECT_EQ(row1, "PROG,ATTN,CROSSBA,CROSS_CLASS,off,0,0.75,0.25,0.5,ok,h");
  EXPECT_EQ(row1, row2);
}

}  // namespace
}  // namespace gpl
