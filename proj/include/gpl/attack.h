#ifndef GPL_ATTACK_H_
#define GPL_ATTACK_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpl/autodiff.h"
#include "gpl/encoder.h"
#include "gpl/io.h"
#include "gpl/optim.h"
#include "gpl/pretrain.h"

namespace gpl {

enum class AttackKind { kNone, kCrossBA, kGcbaR, kGcbaM };

std::string AttackName(AttackKind kind);
AttackKind ParseAttack(const std::string& name);

struct AttackConfig {
  double alpha = 0.5;
  double beta = 0.05;
  double lambda = 0.05;
  double tau = 0.5;  // L_clr temperature
  double gamma_t = 0.01;
  double gamma_g = 1e-4;
  int rounds = 50;
  int trigger_nodes = 3;
  std::uint64_t seed = 0;
  int trigger_steps = 1;  // per round
  int encoder_steps = 1;  // per round
  // Adds L_clr to the encoder step.
  bool include_clr = false;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  ReadoutMode readout = ReadoutMode::kSum;
  // Std of the trigger init noise, relative to the anchor-feature scale.
  double init_noise = 0.05;
  double gcba_gamma_t = 0.0015;
  double gcba_gamma_g = 0.001;
  int gcba_clusters = 4;
  // Graphs in the fixed batch used to trace L_clr.
  int clr_trace_batch = 8;

  void Validate() const;
};

struct LossRecord {
  int round = 0;
  double l_bdk = 0.0;
  double l_clr = 0.0;
  double l_sim_c = 0.0;
  double l_sim_a = 0.0;
  double total = 0.0;
};

struct AttackState {
  AttackKind kind = AttackKind::kCrossBA;
  TriggerGraph trigger;
  EncoderParams backdoored;
  EncoderParams clean;
  std::vector<AnchorChoice> anchors;  // one per corpus graph
  // GCBA only: the fixed target and the pretraining graph closest to it.
  RowVector target_embedding;
  std::optional<Graph> target_graph;
  std::vector<LossRecord> trace;
  Optimizer trigger_opt;
  Optimizer encoder_opt;

  // The graph whose downstream prediction defines the target class: the bare
  // trigger for CrossBA, the closest pretraining graph for GCBA.
  Graph TargetGraph() const;
};

// -mean_i sim(E(G_i + trigger), E(trigger)) + lambda * mean_i sim(E(G_i + trigger), E(G_i)).
ad::Var BackdoorLoss(const BoundEncoder& enc_b, const std::vector<Graph>& corpus,
                     const ad::Var& trigger_features, int attach_node,
                     const std::vector<AnchorChoice>& anchors, double lambda, ReadoutMode readout);
// -mean_i sim(E_b(G_i), E_c(G_i)); clean embeddings are constants, one row per graph.
ad::Var AlignLoss(const BoundEncoder& enc_b, const std::vector<Graph>& corpus,
                  const Matrix& clean_embs, ReadoutMode readout);
// -mean over (anchors x trigger nodes) of sim(trigger row j, anchor row i).
ad::Var AffinityLoss(const ad::Var& trigger_features, const Matrix& anchor_features);

double BackdoorLossValue(const EncoderParams& params, const std::vector<Graph>& corpus,
                         const TriggerGraph& trigger, const std::vector<AnchorChoice>& anchors,
                         double lambda, ReadoutMode readout = ReadoutMode::kSum);
double AlignLossValue(const EncoderParams& backdoored, const EncoderParams& clean,
                      const std::vector<Graph>& corpus, ReadoutMode readout = ReadoutMode::kSum);
double AffinityLossValue(const Matrix& trigger_features, const Matrix& anchor_features);

// Anchor-node feature rows, one per corpus graph.
Matrix AnchorFeatures(const std::vector<Graph>& corpus, const std::vector<AnchorChoice>& anchors);
Matrix CleanEmbeddings(const EncoderParams& clean, const std::vector<Graph>& corpus, ReadoutMode readout);

struct ObjectiveParts {
  double value = 0.0;
  double l_bdk = 0.0;
  double l_sim_c = 0.0;
  double l_sim_a = 0.0;
  double l_clr = 0.0;
};

// Trigger-step objective at the current state and its gradient w.r.t. the
// trigger features. CrossBA: L_bdk + beta L_sim^a. GCBA: pull toward the fixed target.
ObjectiveParts TriggerObjective(const AttackState& state, const std::vector<Graph>& corpus,
                                const AttackConfig& cfg, Matrix* grad);
// Encoder-step objective and gradients parallel to state.backdoored.tensors.
ObjectiveParts EncoderObjective(const AttackState& state, const std::vector<Graph>& corpus,
                                const AttackConfig& cfg, std::vector<Matrix>* grads);

// One trigger update; the encoder is untouched.
const TriggerGraph& TuneTriggerStep(AttackState& state, const std::vector<Graph>& corpus,
                                    const AttackConfig& cfg);
// One encoder update; the trigger is untouched.
const EncoderParams& TuneEncoderStep(AttackState& state, const std::vector<Graph>& corpus,
                                     const AttackConfig& cfg);

// Initial state around a trained clean encoder: seeded anchors, trigger at the
// anchor-feature mean plus noise, backdoored = clean.
AttackState InitCrossbaState(const std::vector<Graph>& corpus, const EncoderParams& clean,
                             const AttackConfig& cfg);

// Alternating trigger/encoder rounds from a trained clean encoder.
AttackState RunCrossbaFrom(const std::vector<Graph>& corpus, const EncoderParams& clean,
                           const AttackConfig& cfg);
// Trains the clean encoder first.
AttackState RunCrossba(const std::vector<Graph>& corpus, const PretrainConfig& pretrain_cfg,
                       const AttackConfig& attack_cfg,
                       PretrainObjective objective = PretrainObjective::kGraphCl);

// k-means over clean embeddings. kGcbaR: seeded-random center. kGcbaM: the
// center with the largest mean distance to the others, ties to the lower index.
RowVector GcbaSelectTarget(const Matrix& clean_embs, int k_clusters, AttackKind mode, std::uint64_t seed);

AttackState RunGcbaFrom(const std::vector<Graph>& corpus, const EncoderParams& clean,
                        const AttackConfig& cfg, AttackKind mode);
AttackState RunGcba(const std::vector<Graph>& corpus, const PretrainConfig& pretrain_cfg,
                    const AttackConfig& attack_cfg, AttackKind mode,
                    PretrainObjective objective = PretrainObjective::kGraphCl);

// No attack: backdoored = clean, trigger initialized as for CrossBA.
AttackState NoAttackState(const std::vector<Graph>& corpus, const EncoderParams& clean,
                          const AttackConfig& cfg);

// CSV columns: round,L_bdk,L_clr,L_sim_c,L_sim_a,total
void WriteTraceCsv(const std::string& path, const std::vector<LossRecord>& trace,
                   const std::string& config_hash);

Checkpoint AttackStateToCheckpoint(const AttackState& state);
AttackState AttackStateFromCheckpoint(const Checkpoint& ckpt);

}  // namespace gpl

#endif  // GPL_ATTACK_H_
