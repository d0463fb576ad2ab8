#ifndef GPL_PRETRAIN_H_
#define GPL_PRETRAIN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "gpl/autodiff.h"
#include "gpl/encoder.h"
#include "gpl/optim.h"

namespace gpl {

enum class PretrainObjective { kGraphCl, kLinkPred };

std::string ObjectiveName(PretrainObjective objective);
PretrainObjective ParseObjective(const std::string& name);

struct PretrainConfig {
  Architecture arch = Architecture::kAttention;
  int hidden_dim = 100;
  int num_layers = 2;
  ReadoutMode readout = ReadoutMode::kSum;
  double temperature = 0.5;
  double flip_prob = 0.1;
  int epochs = 50;
  double lr = 1e-3;
  // Graphs per optimizer step; 0 means the whole corpus.
  int batch_size = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 0;

  void Validate() const;
};

// InfoNCE over graph embeddings. Row i of `anchors` is scored against its
// positive and against every other anchor as a negative. Inputs are 1 x h vars.
ad::Var InfoNceLoss(const std::vector<ad::Var>& anchors, const std::vector<ad::Var>& positives,
                    double temperature);

// L_clr on a batch: positives are AugmentLinks(G_i) with per-graph seeds derived
// from `seed`; negatives are the other batch members.
ad::Var ContrastiveLoss(const BoundEncoder& enc, const std::vector<Graph>& batch,
                        const PretrainConfig& cfg, std::uint64_t seed);
double ContrastiveLossValue(const EncoderParams& params, const std::vector<Graph>& batch,
                            const PretrainConfig& cfg, std::uint64_t seed);

struct LinkTriplet {
  int v = 0;
  int pos = 0;  // neighbor of v
  int neg = 0;  // non-neighbor of v
};

// Two-way softmax of sim(h_v, h_pos) against sim(h_v, h_neg).
ad::Var LinkPredictionLoss(const ad::Var& node_embs, const LinkTriplet& t, double temperature);
// Validates the triplet against g before encoding.
ad::Var LinkPredictionLoss(const BoundEncoder& enc, const Graph& g, const LinkTriplet& t,
                           double temperature);

// Uniform over nodes having both a neighbor and a non-neighbor; false when g has none.
bool SampleTriplet(const Graph& g, std::uint64_t seed, LinkTriplet* out);

struct PretrainResult {
  EncoderParams params;
  std::vector<double> epoch_losses;  // mean training loss per epoch
  double eval_before = 0.0;          // loss on the fixed evaluation batch
  double eval_after = 0.0;
};

PretrainResult TrainCleanEncoder(const std::vector<Graph>& corpus, const PretrainConfig& cfg,
                                 PretrainObjective objective);

// Per-epoch CSV: "epoch,loss".
void WriteLossCsv(const std::string& path, const std::vector<double>& losses,
                  const std::string& config_hash);

}  // namespace gpl

#endif  // GPL_PRETRAIN_H_
