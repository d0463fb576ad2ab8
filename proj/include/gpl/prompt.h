#ifndef GPL_PROMPT_H_
#define GPL_PROMPT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "gpl/autodiff.h"
#include "gpl/encoder.h"
#include "gpl/io.h"
#include "gpl/optim.h"
#include "gpl/scenario.h"

namespace gpl {

enum class PromptVariant { kProG, kGraphPrompt };

std::string VariantName(PromptVariant v);
PromptVariant ParseVariant(const std::string& name);

struct PromptConfig {
  PromptVariant variant = PromptVariant::kProG;
  int num_tokens = 15;                                  // ProG
  LinkRule link{LinkMode::kSimilarity, 3};              // ProG cross links; k is clamped to N
  double token_scale = 0.1;                             // ProG token init, relative to feature rms
  double proto_temperature = 0.1;                       // GraphPrompt
  int epochs = 100;
  double lr = 0.01;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  ReadoutMode readout = ReadoutMode::kSum;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct PromptState {
  PromptVariant variant = PromptVariant::kProG;
  int num_classes = 0;
  // ProG
  PromptGraph prompt;
  LinkRule link{LinkMode::kSimilarity, 3};
  Matrix head_w;     // h x C
  Matrix head_b;     // 1 x C
  // GraphPrompt
  Matrix prompt_vec;     // 1 x h
  Matrix prototypes;     // C x h
  // Mean training loss per epoch.
  std::vector<double> losses;
};

// Readout of {p ⊙ h_v}.
RowVector GraphPromptReadout(const RowVector& prompt_vec, const Matrix& node_embs,
                             ReadoutMode mode = ReadoutMode::kSum);
ad::Var GraphPromptReadout(const ad::Var& prompt_vec, const ad::Var& node_embs, ReadoutMode mode);

// Class scores of g ⊗ prompt under the frozen encoder.
RowVector ProgForward(const EncoderParams& enc, const Graph& g, const PromptState& ps,
                      ReadoutMode readout = ReadoutMode::kSum);
// Prompted graph used by ProgForward, with k clamped to the host size.
Graph ProgPromptedGraph(const Graph& g, const PromptGraph& prompt, const LinkRule& link);

// Untrained state: seeded tokens and zero head (ProG) or all-ones prompt (GraphPrompt).
PromptState InitPromptState(const EncoderParams& enc, const std::vector<LabeledSample>& shots, int num_classes,
                            const PromptConfig& cfg);

// Tensors trained by few-shot tuning, in gradient order.
std::vector<Matrix*> PromptTensors(PromptState& ps);

// Training objective on `shots` at the given state; fills gradients parallel to
// PromptTensors when `grads` is non-null. ProG: cross-entropy of the head.
// GraphPrompt: -log softmax over classes of cos(s_i, prototype_c) / temperature,
// prototypes being class means of the prompted embeddings.
double PromptObjective(const EncoderParams& enc, const std::vector<LabeledSample>& shots, const PromptState& ps,
                       const PromptConfig& cfg, std::vector<Matrix>* grads);

// The encoder is only read; its parameters are never updated.
PromptState FewShotTune(const EncoderParams& enc, const std::vector<LabeledSample>& shots, int num_classes,
                        const PromptConfig& cfg);

// ProG: argmax of head scores. GraphPrompt: argmax cosine to prototypes. Ties go
// to the lowest class index.
int Predict(const EncoderParams& enc, const Graph& g, const PromptState& ps,
            ReadoutMode readout = ReadoutMode::kSum);
// Argmax with lowest-index tie break.
int ArgMax(const RowVector& scores);

Checkpoint PromptStateToCheckpoint(const PromptState& ps);
PromptState PromptStateFromCheckpoint(const Checkpoint& ckpt);

}  // namespace gpl

#endif  // GPL_PROMPT_H_
