#ifndef GPL_PIPELINE_H_
#define GPL_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "gpl/attack.h"
#include "gpl/defense.h"
#include "gpl/metrics.h"
#include "gpl/pretrain.h"
#include "gpl/prompt.h"
#include "gpl/scenario.h"

namespace gpl {

struct PipelineConfig {
  PretrainConfig pretrain;
  PretrainObjective objective = PretrainObjective::kGraphCl;
  AttackKind attack = AttackKind::kCrossBA;
  AttackConfig attack_cfg;
  PromptConfig prompt;
  bool defense = false;
  PruneConfig prune;
  int shots_per_class = 5;
  // Root seed; the per-component seeds in the nested configs are derived from it.
  std::uint64_t seed = 0;

  void Validate() const;
};

// Copy with pretrain/attack/prompt seeds derived from the root seed.
PipelineConfig WithDerivedSeeds(const PipelineConfig& cfg);

// Stable "key=value" listing of every field, one per line, keys sorted.
std::string CanonicalText(const PipelineConfig& cfg);
std::string ConfigHash(const PipelineConfig& cfg);

struct MetricsReport {
  std::string status = "ok";
  std::string error;
  std::string scenario;
  std::string gpl;
  std::string model;
  std::string attack;
  bool defense = false;
  std::uint64_t seed = 0;
  std::string config_hash;
  int num_classes = 0;
  int target_class = 0;
  Rate acc;
  Rate clean_acc;
  long ad_hits = 0;
  Rate asr;
  // Endpoint cosine on the backdoored test inputs before any pruning.
  SimilaritySummary similarity;
  // Share of clean-test edges removed by pruning; 0 without defense.
  double clean_edges_cut = 0.0;
  // Backdoored test inputs that kept every trigger node after pruning.
  int triggers_surviving = 0;

  double Acc() const { return acc.total ? acc.value() : 0.0; }
  double Ad() const { return acc.total ? static_cast<double>(ad_hits) / static_cast<double>(acc.total) : 0.0; }
  double Asr() const { return asr.total ? asr.value() : 0.0; }
};

// Attack on the pretrain corpus, optional pruning of every downstream input,
// few-shot tuning of the backdoored model and of its clean twin on the same
// shots, ACC/AD on the clean test set, and ASR on the test set with the
// trigger attached at a fresh anchor per graph. `clean` skips pretraining.
// Runtime failures are caught and recorded in the report status.
MetricsReport RunPipeline(const ScenarioSplit& split, const PipelineConfig& cfg,
                          const EncoderParams* clean = nullptr);

// Precomputed stages; each pointer skips its stage when set. A supplied attack
// state must come from the same clean encoder.
struct PipelineInputs {
  const EncoderParams* clean = nullptr;
  const AttackState* attack = nullptr;
};

// Intermediate results, filled up to the point of failure.
struct PipelineArtifacts {
  std::optional<EncoderParams> clean;
  std::optional<AttackState> attack;
  std::optional<PromptState> prompt;  // tuned on the backdoored encoder
  std::vector<EdgeSimilarity> profile;  // backdoored test inputs, before pruning
};

MetricsReport RunPipeline(const ScenarioSplit& split, const PipelineConfig& cfg, const PipelineInputs& inputs,
                          PipelineArtifacts* artifacts);

// Trains the clean encoder, reusing a checkpoint under `cache_dir` keyed by the
// corpus and config digests. Empty `cache_dir` disables caching.
EncoderParams PretrainCached(const std::vector<Graph>& corpus, const PretrainConfig& cfg,
                             PretrainObjective objective, const std::string& cache_dir);

nlohmann::json ReportToJson(const MetricsReport& report);
void WriteReportJson(const std::string& path, const MetricsReport& report);
// Appends one row under an exclusive file lock; writes the header for a new file.
void AppendReportCsv(const std::string& path, const MetricsReport& report);

}  // namespace gpl

#endif  // GPL_PIPELINE_H_
