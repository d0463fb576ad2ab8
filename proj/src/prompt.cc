#include "gpl/prompt.h"

#include <cmath>
#include <random>

#include "gpl/digest.h"
#include "gpl/errors.h"

namespace gpl {

std::string VariantName(PromptVariant v) { return v == PromptVariant::kProG ? "PROG" : "GRAPHPROMPT"; }

PromptVariant ParseVariant(const std::string& name) {
  if (name == "PROG" || name == "prog") return PromptVariant::kProG;
  if (name == "GRAPHPROMPT" || name == "graphprompt") return PromptVariant::kGraphPrompt;
  throw InvalidArgument("unknown prompt variant '" + name + "' (expected PROG or GRAPHPROMPT)");
}

void PromptConfig::Validate() const {
  if (num_tokens < 1) throw InvalidArgument("prompt: num_tokens must be >= 1");
  if (link.mode == LinkMode::kSimilarity && link.k < 1) throw InvalidArgument("prompt: link k must be >= 1");
  if (!(proto_temperature > 0)) throw InvalidArgument("prompt: proto_temperature must be > 0");
  if (epochs < 0) throw InvalidArgument("prompt: epochs must be >= 0");
  if (!(lr >= 0)) throw InvalidArgument("prompt: lr must be >= 0");
  if (!(token_scale >= 0)) throw InvalidArgument("prompt: token_scale must be >= 0");
}

RowVector GraphPromptReadout(const RowVector& prompt_vec, const Matrix& node_embs, ReadoutMode mode) {
  if (prompt_vec.size() != node_embs.cols()) {
    throw DimensionMismatch("graphprompt_readout: prompt length " + std::to_string(prompt_vec.size()) +
                            " vs embedding dim " + std::to_string(node_embs.cols()));
  }
  Matrix weighted = node_embs.array().rowwise() * prompt_vec.array();
  return Readout(weighted, mode);
}

ad::Var GraphPromptReadout(const ad::Var& prompt_vec, const ad::Var& node_embs, ReadoutMode mode) {
  if (prompt_vec.cols() != node_embs.cols()) throw DimensionMismatch("graphprompt_readout: dimension mismatch");
  return Readout(ad::MulRowBroadcast(node_embs, prompt_vec), mode);
}

Graph ProgPromptedGraph(const Graph& g, const PromptGraph& prompt, const LinkRule& link) {
  LinkRule rule = link;
  if (rule.mode == LinkMode::kSimilarity) rule.k = std::min(rule.k, g.num_nodes());
  return AttachPromptCrosslinked(g, prompt, rule);
}

namespace {

void RequireVariant(const PromptState& ps, PromptVariant v, const char* op) {
  if (ps.variant != v) throw InvalidArgument(std::string(op) + ": prompt state holds a " + VariantName(ps.variant) + " prompt");
}

ad::Var ProgScores(const BoundEncoder& enc, const Graph& g, const ad::Var& tokens, const std::vector<Edge>& internal,
                   const LinkRule& link, const ad::Var& w, const ad::Var& b, ReadoutMode readout) {
  ad::Tape* tape = tokens.tape();
  const Graph prompted = ProgPromptedGraph(g, PromptGraph{tokens.value(), internal}, link);
  ad::Var x = ad::VStack(tape->Constant(g.features()), tokens);
  ad::Var emb = EncodeGraph(enc, x, prompted.SelfLoopMask(), readout);
  return ad::AddRowBroadcast(ad::MatMul(emb, w), b);
}

double RmsFeatures(const std::vector<LabeledSample>& shots) {
  double sq = 0.0;
  double count = 0.0;
  for (const auto& s : shots) {
    sq += s.graph.features().squaredNorm();
    count += static_cast<double>(s.graph.features().size());
  }
  return count > 0 ? std::sqrt(sq / count) : 1.0;
}

void CheckShots(const std::vector<LabeledSample>& shots, int num_classes) {
  if (num_classes < 2) throw InvalidArgument("few_shot_tune: num_classes must be >= 2");
  std::vector<int> counts(num_classes, 0);
  for (const auto& s : shots) {
    if (s.label < 0 || s.label >= num_classes) throw IndexOutOfRange("few_shot_tune: label out of range");
    ++counts[s.label];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw InvalidArgument("few_shot_tune: class " + std::to_string(c) + " has no shots");
  }
}

// Sum-readout node embeddings are fixed under a frozen encoder, so the prompted
// GraphPrompt embedding is p ⊙ (precomputed readout).
Matrix ShotReadouts(const EncoderParams& enc, const std::vector<LabeledSample>& shots, ReadoutMode readout) {
  Matrix out(static_cast<Eigen::Index>(shots.size()), enc.hidden_dim);
  for (size_t i = 0; i < shots.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = Readout(EncodeNodes(enc, shots[i].graph), readout);
  }
  return out;
}

ad::Var GraphPromptLoss(const ad::Var& p, const Matrix& readouts, const std::vector<LabeledSample>& shots,
                        int num_classes, double temperature, Matrix* prototypes) {
  ad::Tape* tape = p.tape();
  std::vector<ad::Var> s;
  s.reserve(shots.size());
  for (Eigen::Index i = 0; i < readouts.rows(); ++i) s.push_back(ad::Hadamard(tape->Constant(readouts.row(i)), p));
  std::vector<std::vector<ad::Var>> members(num_classes);
  for (size_t i = 0; i < shots.size(); ++i) members[shots[i].label].push_back(s[i]);
  std::vector<ad::Var> protos;
  for (int c = 0; c < num_classes; ++c) {
    protos.push_back(ad::Scale(ad::AddN(members[c]), 1.0 / static_cast<double>(members[c].size())));
  }
  if (prototypes != nullptr) {
    prototypes->resize(num_classes, p.cols());
    for (int c = 0; c < num_classes; ++c) prototypes->row(c) = protos[c].value();
  }
  std::vector<ad::Var> terms;
  for (size_t i = 0; i < shots.size(); ++i) {
    std::vector<ad::Var> logits;
    for (int c = 0; c < num_classes; ++c) logits.push_back(ad::Scale(ad::Cosine(s[i], protos[c]), 1.0 / temperature));
    terms.push_back(ad::LogSumExp(ad::PackScalars(logits)) - logits[shots[i].label]);
  }
  return ad::Mean(terms);
}

}  // namespace

RowVector ProgForward(const EncoderParams& enc, const Graph& g, const PromptState& ps, ReadoutMode readout) {
  RequireVariant(ps, PromptVariant::kProG, "prog_forward");
  ad::Tape tape;
  BoundEncoder bound = Bind(tape, enc, false);
  return ProgScores(bound, g, tape.Constant(ps.prompt.tokens), ps.prompt.internal_edges, ps.link,
                    tape.Constant(ps.head_w), tape.Constant(ps.head_b), readout)
      .value();
}

PromptState InitPromptState(const EncoderParams& enc, const std::vector<LabeledSample>& shots, int num_classes,
                            const PromptConfig& cfg) {
  cfg.Validate();
  PromptState ps;
  ps.variant = cfg.variant;
  ps.num_classes = num_classes;
  if (cfg.variant == PromptVariant::kProG) {
    std::mt19937_64 rng(DeriveSeed(cfg.seed, "tokens"));
    std::normal_distribution<double> normal(0.0, cfg.token_scale * RmsFeatures(shots));
    Matrix tokens(cfg.num_tokens, enc.input_dim);
    for (Eigen::Index i = 0; i < tokens.rows(); ++i) {
      for (Eigen::Index j = 0; j < tokens.cols(); ++j) tokens(i, j) = normal(rng);
    }
    ps.prompt = PromptGraph::Complete(std::move(tokens));
    ps.link = cfg.link;
    ps.head_w = Matrix::Zero(enc.hidden_dim, num_classes);
    ps.head_b = Matrix::Zero(1, num_classes);
  } else {
    ps.prompt_vec = Matrix::Ones(1, enc.hidden_dim);
    ps.prototypes = Matrix::Zero(num_classes, enc.hidden_dim);
  }
  return ps;
}

std::vector<Matrix*> PromptTensors(PromptState& ps) {
  if (ps.variant == PromptVariant::kProG) return {&ps.prompt.tokens, &ps.head_w, &ps.head_b};
  return {&ps.prompt_vec};
}

double PromptObjective(const EncoderParams& enc, const std::vector<LabeledSample>& shots, const PromptState& ps,
                       const PromptConfig& cfg, std::vector<Matrix>* grads) {
  CheckShots(shots, ps.num_classes);
  ad::Tape tape;
  ad::Var loss;
  std::vector<ad::Var> leaves;
  if (ps.variant == PromptVariant::kProG) {
    BoundEncoder bound = Bind(tape, enc, false);
    ad::Var tokens = tape.Leaf(ps.prompt.tokens);
    ad::Var w = tape.Leaf(ps.head_w);
    ad::Var b = tape.Leaf(ps.head_b);
    leaves = {tokens, w, b};
    std::vector<ad::Var> terms;
    for (const auto& s : shots) {
      ad::Var scores = ProgScores(bound, s.graph, tokens, ps.prompt.internal_edges, ps.link, w, b, cfg.readout);
      terms.push_back(ad::LogSumExp(scores) - ad::Entry(scores, 0, s.label));
    }
    loss = ad::Mean(terms);
  } else {
    ad::Var p = tape.Leaf(ps.prompt_vec);
    leaves = {p};
    loss = GraphPromptLoss(p, ShotReadouts(enc, shots, cfg.readout), shots, ps.num_classes, cfg.proto_temperature,
                           nullptr);
  }
  const double value = loss.scalar();
  if (!std::isfinite(value)) throw DivergenceError("few_shot_tune: loss is not finite");
  if (grads != nullptr) {
    tape.Backward(loss);
    grads->clear();
    for (const ad::Var& v : leaves) grads->push_back(tape.Grad(v));
  }
  return value;
}

PromptState FewShotTune(const EncoderParams& enc, const std::vector<LabeledSample>& shots, int num_classes,
                        const PromptConfig& cfg) {
  CheckShots(shots, num_classes);
  PromptState ps = InitPromptState(enc, shots, num_classes, cfg);
  Optimizer opt(cfg.optimizer, cfg.lr);
  Matrix readouts;
  if (ps.variant == PromptVariant::kGraphPrompt) readouts = ShotReadouts(enc, shots, cfg.readout);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<Matrix> grads;
    double value = 0.0;
    if (ps.variant == PromptVariant::kProG) {
      value = PromptObjective(enc, shots, ps, cfg, &grads);
    } else {
      ad::Tape tape;
      ad::Var p = tape.Leaf(ps.prompt_vec);
      ad::Var loss = GraphPromptLoss(p, readouts, shots, num_classes, cfg.proto_temperature, nullptr);
      value = loss.scalar();
      if (!std::isfinite(value)) throw DivergenceError("few_shot_tune: loss is not finite");
      tape.Backward(loss);
      grads = {tape.Grad(p)};
    }
    ps.losses.push_back(value);
    opt.Step(PromptTensors(ps), grads);
  }
  if (ps.variant == PromptVariant::kGraphPrompt) {
    ad::Tape tape;
    GraphPromptLoss(tape.Constant(ps.prompt_vec), readouts, shots, num_classes, cfg.proto_temperature,
                    &ps.prototypes);
  }
  return ps;
}

int ArgMax(const RowVector& scores) {
  int best = 0;
  for (int c = 1; c < scores.size(); ++c) {
    if (scores(c) > scores(best)) best = c;
  }
  return best;
}

int Predict(const EncoderParams& enc, const Graph& g, const PromptState& ps, ReadoutMode readout) {
  if (ps.variant == PromptVariant::kProG) return ArgMax(ProgForward(enc, g, ps, readout));
  const RowVector s = GraphPromptReadout(RowVector(ps.prompt_vec.row(0)), EncodeNodes(enc, g), readout);
  RowVector sims(ps.num_classes);
  for (int c = 0; c < ps.num_classes; ++c) sims(c) = CosineSim(s, ps.prototypes.row(c));
  return ArgMax(sims);
}

Checkpoint PromptStateToCheckpoint(const PromptState& ps) {
  Checkpoint ckpt;
  ckpt.kind = "prompt_state";
  ckpt.meta = {{"variant", VariantName(ps.variant)}, {"num_classes", std::to_string(ps.num_classes)}};
  if (ps.variant == PromptVariant::kProG) {
    ckpt.meta.emplace_back("link_mode", ps.link.mode == LinkMode::kFull ? "FULL" : "SIMILARITY");
    ckpt.meta.emplace_back("link_k", std::to_string(ps.link.k));
    ckpt.tensors.emplace_back("tokens", ps.prompt.tokens);
    Matrix edges(static_cast<Eigen::Index>(ps.prompt.internal_edges.size()), 2);
    for (size_t e = 0; e < ps.prompt.internal_edges.size(); ++e) {
      edges(static_cast<Eigen::Index>(e), 0) = ps.prompt.internal_edges[e].u;
      edges(static_cast<Eigen::Index>(e), 1) = ps.prompt.internal_edges[e].v;
    }
    ckpt.tensors.emplace_back("internal_edges", edges);
    ckpt.tensors.emplace_back("head_w", ps.head_w);
    ckpt.tensors.emplace_back("head_b", ps.head_b);
  } else {
    ckpt.tensors.emplace_back("prompt_vec", ps.prompt_vec);
    ckpt.tensors.emplace_back("prototypes", ps.prototypes);
  }
  Matrix losses(1, static_cast<Eigen::Index>(ps.losses.size()));
  for (size_t i = 0; i < ps.losses.size(); ++i) losses(0, static_cast<Eigen::Index>(i)) = ps.losses[i];
  ckpt.tensors.emplace_back("losses", losses);
  return ckpt;
}

PromptState PromptStateFromCheckpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "prompt_state") throw ValidationError("checkpoint: expected kind prompt_state, got " + ckpt.kind);
  PromptState ps;
  ps.variant = ParseVariant(ckpt.Meta("variant"));
  ps.num_classes = std::stoi(ckpt.Meta("num_classes"));
  if (ps.variant == PromptVariant::kProG) {
    ps.link.mode = ckpt.Meta("link_mode") == "FULL" ? LinkMode::kFull : LinkMode::kSimilarity;
    ps.link.k = std::stoi(ckpt.Meta("link_k"));
    const Matrix& e = ckpt.Tensor("internal_edges");
    std::vector<Edge> edges;
    for (Eigen::Index r = 0; r < e.rows(); ++r) edges.emplace_back(static_cast<int>(e(r, 0)), static_cast<int>(e(r, 1)));
    ps.prompt = PromptGraph{ckpt.Tensor("tokens"), edges};
    ps.head_w = ckpt.Tensor("head_w");
    ps.head_b = ckpt.Tensor("head_b");
    if (ps.head_w.cols() != ps.num_classes || ps.head_b.size() != ps.num_classes) {
      throw ValidationError("checkpoint: answering head does not match num_classes");
    }
  } else {
    ps.prompt_vec = ckpt.Tensor("prompt_vec");
    ps.prototypes = ckpt.Tensor("prototypes");
    if (ps.prototypes.rows() != ps.num_classes) throw ValidationError("checkpoint: prototype count mismatch");
  }
  const Matrix& losses = ckpt.Tensor("losses");
  for (Eigen::Index i = 0; i < losses.cols(); ++i) ps.losses.push_back(losses(0, i));
  return ps;
}

}  // namespace gpl
