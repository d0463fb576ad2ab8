#ifndef GPL_THEORY_H_
#define GPL_THEORY_H_

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "gpl/attack.h"
#include "gpl/linear_gin.h"
#include "gpl/prompt.h"

namespace gpl {

enum class KernelKind { kRbf, kCosine };

struct TheoryConfig {
  KernelKind kernel = KernelKind::kCosine;
  double gamma = 1.0;      // RBF width
  double lipschitz = 1.0;  // L_E
  double mu = 1.0;         // bound on ||X||_fro
  int k_g = 2;             // node budget
  double epsilon = 0.0;    // GIN epsilon

  void Validate() const;
  // sqrt(k_G) (k_G - 1) L mu
  double NormBound() const;
};

double KernelValue(const RowVector& a, const RowVector& b, const TheoryConfig& cfg);

using EmbedFn = std::function<RowVector(const Graph&)>;

// f(G) = exp(-gamma ||E(G) - E(anchor)||^2).
std::function<double(const Graph&)> AnchoredClassifier(EmbedFn embed, const Graph& anchor, double gamma);

struct KernelDistanceBreakdown {
  double self_a = 0.0;  // mean over A x A
  double self_b = 0.0;  // mean over B x B
  double cross = 0.0;   // mean over A x B
  double d = 0.0;       // self_a + self_b - cross, or - 2 cross with standard_mmd
  double bounded = 0.0; // 2 NormBound() - cross
};

// Rows of `a` and `b` are embeddings.
KernelDistanceBreakdown KernelDistance(const Matrix& a, const Matrix& b, const TheoryConfig& cfg,
                                       bool standard_mmd = false);

struct NormBoundReport {
  double bound = 0.0;
  double max_kernel = 0.0;
  double max_ratio = 0.0;  // max kernel / bound
  int pairs = 0;
  int violations = 0;
  // Diagnostic only: pairs where ||h(G)||_fro itself exceeds the bound.
  int norm_chain_violations = 0;
};

// Checks s(h(G_i), h(G_k)) <= sqrt(k_G)(k_G - 1) L mu over all ordered pairs
// (self pairs included) with h the SUM-readout linear GIN.
NormBoundReport NormBoundCheck(const LinearGinParams& params, const std::vector<Graph>& corpus,
                               const TheoryConfig& cfg);

// Largest Frobenius norm of a corpus feature matrix, and the spectral norm of theta.
double MaxFeatureNorm(const std::vector<Graph>& corpus);
double SpectralNorm(const Matrix& m);

// Shared node-feature shift equivalent to attaching `p` as an isolated
// component: colsum((A_p + (1 + eps) I) P) / (Deg + N (1 + eps)).
RowVector DeltaFeatPrompt(const Graph& g, const PromptGraph& p, double epsilon);

// Max |SUM h(g ⊗ p) - SUM h(g')| with g' = g shifted by DeltaFeatPrompt.
double PromptEquivalenceCheck(const Graph& g, const PromptGraph& p, const LinearGinParams& params);

enum class LsqProblem { kPrompt, kTrigger };

// PROMPT: unknown prompt tokens (complete internal edges, isolated component);
// minimizes sum_ij ||SUM h(S_i) - SUM h(T_j ⊗ P)||^2 with S = sources, T = targets.
// TRIGGER: unknown trigger features; minimizes
// sum_ij ||SUM h(Δ+_i) - SUM h(T_j ⊕ Δ)||^2 where Δ+_i takes topology i of
// `trigger_topologies` and T_j ⊕ Δ attaches at anchors[j]. Sources are unused.
struct LsqInstance {
  LsqProblem problem = LsqProblem::kPrompt;
  LinearGinParams params;
  std::vector<Graph> sources;
  std::vector<Graph> targets;
  int unknown_nodes = 1;
  std::vector<std::vector<Edge>> trigger_topologies;
  std::vector<AnchorChoice> anchors;
  int attach_node = 0;
};

struct LsqSolution {
  Matrix features;              // unknown_nodes x d
  double objective = 0.0;       // value at the minimizer
  double orthogonality = 0.0;   // max |design^T residual|
  bool fallback = false;        // normal matrix singular; min-norm solve used
  double max_curvature = 0.0;   // largest Hessian eigenvalue, 2 lambda_max(design^T design)
};

// Direct evaluation of the objective through LinearGinEncode.
double LsqObjective(const LsqInstance& inst, const Matrix& features);
LsqSolution LeastSquaresOracle(const LsqInstance& inst);
// Plain gradient descent on the same objective with autodiff gradients.
Matrix LsqGradientDescent(const LsqInstance& inst, const Matrix& init, int iterations, double lr);

struct BehaviorReport {
  double trigger_sim_before = 0.0;  // mean s(h(Δ+), h(G_s ⊕ Δ))
  double trigger_sim_after = 0.0;
  double prompt_sim_before = 0.0;   // mean s(h(G_s), h(G_t ⊗ P))
  double prompt_sim_after = 0.0;
  double bound_before = 0.0;        // -mean s(h(G_s ⊕ Δ), h((G_t ⊕ Δ) ⊗ P))
  double bound_after = 0.0;
  bool trigger_ok = false;
  bool prompt_ok = false;
  bool bound_ok = false;
};

struct BehaviorInput {
  EncoderParams encoder;  // held fixed
  std::vector<Graph> pretrain;
  std::vector<Graph> downstream;
  std::vector<AnchorChoice> pretrain_anchors;
  TriggerGraph trigger_before;
  TriggerGraph trigger_after;
  PromptState prompt_before;  // ProG
  PromptState prompt_after;
  int augmentations = 4;
  double flip_prob = 0.3;
  std::uint64_t seed = 0;
};

// Cosine similarity throughout. A side counts as ok when it does not move the
// wrong way; the bound side compares bound_after <= bound_before.
BehaviorReport PropositionBehaviorCheck(const BehaviorInput& in);

// All checks on seeded random instances; deterministic for a given seed.
nlohmann::json RunTheoryChecks(std::uint64_t seed);

}  // namespace gpl

#endif  // GPL_THEORY_H_
