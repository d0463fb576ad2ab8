#include "gpl/attack.h"

#include <cmath>
#include <fstream>
#include <random>

#include "gpl/cluster.h"
#include "gpl/digest.h"
#include "gpl/errors.h"

namespace gpl {

std::string AttackName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone:
      return "NONE";
    case AttackKind::kCrossBA:
      return "CROSSBA";
    case AttackKind::kGcbaR:
      return "GCBA_R";
    case AttackKind::kGcbaM:
      return "GCBA_M";
  }
  return "?";
}

AttackKind ParseAttack(const std::string& name) {
  std::string up;
  for (char c : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "NONE") return AttackKind::kNone;
  if (up == "CROSSBA") return AttackKind::kCrossBA;
  if (up == "GCBA_R") return AttackKind::kGcbaR;
  if (up == "GCBA_M") return AttackKind::kGcbaM;
  throw InvalidArgument("unknown attack '" + name + "' (expected NONE, CROSSBA, GCBA_R or GCBA_M)");
}

void AttackConfig::Validate() const {
  if (alpha < 0 || beta < 0 || lambda < 0) throw InvalidArgument("attack: alpha, beta, lambda must be >= 0");
  if (!(tau > 0)) throw InvalidArgument("attack: tau must be > 0");
  if (gamma_t < 0 || gamma_g < 0 || gcba_gamma_t < 0 || gcba_gamma_g < 0) {
    throw InvalidArgument("attack: learning rates must be >= 0");
  }
  if (rounds < 0) throw InvalidArgument("attack: rounds must be >= 0");
  if (trigger_nodes < 1) throw InvalidArgument("attack: trigger_nodes must be >= 1");
  if (trigger_steps < 0 || encoder_steps < 0) throw InvalidArgument("attack: step counts must be >= 0");
  if (gcba_clusters < 2) throw InvalidArgument("attack: gcba_clusters must be >= 2");
  if (!(init_noise >= 0)) throw InvalidArgument("attack: init_noise must be >= 0");
}

Graph AttackState::TargetGraph() const {
  if (target_graph.has_value()) return *target_graph;
  return trigger.AsGraph();
}

namespace {

void RequireCorpus(const std::vector<Graph>& corpus, const std::vector<AnchorChoice>& anchors) {
  if (corpus.empty()) throw InvalidArgument("attack: empty corpus");
  if (anchors.size() != corpus.size()) throw DimensionMismatch("attack: one anchor per corpus graph required");
}

ad::Var BackdooredEmbedding(const BoundEncoder& enc, const Graph& g, const ad::Var& trigger_features,
                            int attach_node, const AnchorChoice& anchor, ReadoutMode readout) {
  const Graph joined = AttachTrigger(g, TriggerGraph{trigger_features.value(), attach_node}, anchor);
  ad::Tape* tape = trigger_features.tape();
  ad::Var x = ad::VStack(tape->Constant(g.features()), trigger_features);
  return EncodeGraph(enc, x, joined.SelfLoopMask(), readout);
}

ad::Var TriggerEmbedding(const BoundEncoder& enc, const ad::Var& trigger_features, ReadoutMode readout) {
  const Eigen::Index c = trigger_features.rows();
  return EncodeGraph(enc, trigger_features, Matrix::Ones(c, c), readout);
}

double Rms(const Matrix& m) { return m.size() == 0 ? 0.0 : std::sqrt(m.squaredNorm() / m.size()); }

}  // namespace

ad::Var BackdoorLoss(const BoundEncoder& enc_b, const std::vector<Graph>& corpus,
                     const ad::Var& trigger_features, int attach_node,
                     const std::vector<AnchorChoice>& anchors, double lambda, ReadoutMode readout) {
  RequireCorpus(corpus, anchors);
  const ad::Var trig = TriggerEmbedding(enc_b, trigger_features, readout);
  std::vector<ad::Var> collide, stay;
  for (size_t i = 0; i < corpus.size(); ++i) {
    ad::Var bd = BackdooredEmbedding(enc_b, corpus[i], trigger_features, attach_node, anchors[i], readout);
    collide.push_back(ad::Cosine(bd, trig));
    if (lambda != 0.0) stay.push_back(ad::Cosine(bd, EncodeGraph(enc_b, corpus[i], readout)));
  }
  ad::Var loss = -ad::Mean(collide);
  if (lambda != 0.0) loss = loss + lambda * ad::Mean(stay);
  return loss;
}

ad::Var AlignLoss(const BoundEncoder& enc_b, const std::vector<Graph>& corpus, const Matrix& clean_embs,
                  ReadoutMode readout) {
  if (corpus.empty()) throw InvalidArgument("align_loss: empty corpus");
  if (clean_embs.rows() != static_cast<Eigen::Index>(corpus.size())) {
    throw DimensionMismatch("align_loss: one clean embedding per graph required");
  }
  ad::Tape* tape = enc_b.vars.front().tape();
  std::vector<ad::Var> sims;
  for (size_t i = 0; i < corpus.size(); ++i) {
    ad::Var ref = tape->Constant(clean_embs.row(static_cast<Eigen::Index>(i)));
    sims.push_back(ad::Cosine(EncodeGraph(enc_b, corpus[i], readout), ref));
  }
  return -ad::Mean(sims);
}

ad::Var AffinityLoss(const ad::Var& trigger_features, const Matrix& anchor_features) {
  if (anchor_features.rows() == 0) throw InvalidArgument("affinity_loss: empty anchor list");
  if (anchor_features.cols() != trigger_features.cols()) {
    throw DimensionMismatch("affinity_loss: anchor and trigger feature dims differ");
  }
  ad::Tape* tape = trigger_features.tape();
  std::vector<ad::Var> sims;
  for (Eigen::Index i = 0; i < anchor_features.rows(); ++i) {
    ad::Var anchor = tape->Constant(anchor_features.row(i));
    for (Eigen::Index j = 0; j < trigger_features.rows(); ++j) {
      sims.push_back(ad::Cosine(ad::Row(trigger_features, j), anchor));
    }
  }
  return -ad::Mean(sims);
}

double BackdoorLossValue(const EncoderParams& params, const std::vector<Graph>& corpus,
                         const TriggerGraph& trigger, const std::vector<AnchorChoice>& anchors,
                         double lambda, ReadoutMode readout) {
  ad::Tape tape;
  BoundEncoder enc = Bind(tape, params, false);
  return BackdoorLoss(enc, corpus, tape.Constant(trigger.features), trigger.attach_node, anchors, lambda,
                      readout)
      .scalar();
}

double AlignLossValue(const EncoderParams& backdoored, const EncoderParams& clean,
                      const std::vector<Graph>& corpus, ReadoutMode readout) {
  ad::Tape tape;
  return AlignLoss(Bind(tape, backdoored, false), corpus, CleanEmbeddings(clean, corpus, readout), readout)
      .scalar();
}

double AffinityLossValue(const Matrix& trigger_features, const Matrix& anchor_features) {
  ad::Tape tape;
  return AffinityLoss(tape.Constant(trigger_features), anchor_features).scalar();
}

Matrix AnchorFeatures(const std::vector<Graph>& corpus, const std::vector<AnchorChoice>& anchors) {
  RequireCorpus(corpus, anchors);
  Matrix out(static_cast<Eigen::Index>(corpus.size()), corpus.front().feature_dim());
  for (size_t i = 0; i < corpus.size(); ++i) {
    const int a = anchors[i].anchor_node;
    if (a < 0 || a >= corpus[i].num_nodes()) throw IndexOutOfRange("attack: anchor out of range");
    out.row(static_cast<Eigen::Index>(i)) = corpus[i].features().row(a);
  }
  return out;
}

Matrix CleanEmbeddings(const EncoderParams& clean, const std::vector<Graph>& corpus, ReadoutMode readout) {
  Matrix out(static_cast<Eigen::Index>(corpus.size()), clean.hidden_dim);
  for (size_t i = 0; i < corpus.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = EncodeGraph(clean, corpus[i], readout);
  }
  return out;
}

namespace {

bool IsGcba(AttackKind kind) { return kind == AttackKind::kGcbaR || kind == AttackKind::kGcbaM; }

// -mean_i sim(E(G_i + trigger), target) for a fixed target embedding.
ad::Var TargetPullLoss(const BoundEncoder& enc, const std::vector<Graph>& corpus, const ad::Var& trigger_features,
                       int attach_node, const std::vector<AnchorChoice>& anchors, const RowVector& target,
                       ReadoutMode readout) {
  RequireCorpus(corpus, anchors);
  ad::Var t = trigger_features.tape()->Constant(target);
  std::vector<ad::Var> sims;
  for (size_t i = 0; i < corpus.size(); ++i) {
    sims.push_back(ad::Cosine(
        BackdooredEmbedding(enc, corpus[i], trigger_features, attach_node, anchors[i], readout), t));
  }
  return -ad::Mean(sims);
}

std::vector<Graph> ClrTraceBatch(const std::vector<Graph>& corpus, const AttackConfig& cfg) {
  const size_t n = std::min(corpus.size(), static_cast<size_t>(std::max(cfg.clr_trace_batch, 0)));
  return std::vector<Graph>(corpus.begin(), corpus.begin() + n);
}

PretrainConfig ClrConfig(const AttackConfig& cfg) {
  PretrainConfig p;
  p.temperature = cfg.tau;
  p.readout = cfg.readout;
  return p;
}

}  // namespace

ObjectiveParts TriggerObjective(const AttackState& state, const std::vector<Graph>& corpus,
                                const AttackConfig& cfg, Matrix* grad) {
  ad::Tape tape;
  BoundEncoder enc = Bind(tape, state.backdoored, false);
  ad::Var trig = tape.Leaf(state.trigger.features);
  ObjectiveParts parts;
  ad::Var objective;
  if (IsGcba(state.kind)) {
    objective = TargetPullLoss(enc, corpus, trig, state.trigger.attach_node, state.anchors,
                               state.target_embedding, cfg.readout);
    parts.l_bdk = objective.scalar();
  } else {
    ad::Var bdk = BackdoorLoss(enc, corpus, trig, state.trigger.attach_node, state.anchors, cfg.lambda,
                               cfg.readout);
    ad::Var aff = AffinityLoss(trig, AnchorFeatures(corpus, state.anchors));
    parts.l_bdk = bdk.scalar();
    parts.l_sim_a = aff.scalar();
    objective = bdk + cfg.beta * aff;
  }
  parts.value = objective.scalar();
  if (!std::isfinite(parts.value)) throw DivergenceError("tune_trigger_step: objective is not finite");
  if (grad != nullptr) {
    tape.Backward(objective);
    *grad = tape.Grad(trig);
  }
  return parts;
}

ObjectiveParts EncoderObjective(const AttackState& state, const std::vector<Graph>& corpus,
                                const AttackConfig& cfg, std::vector<Matrix>* grads) {
  ad::Tape tape;
  BoundEncoder enc = Bind(tape, state.backdoored, true);
  ad::Var trig = tape.Constant(state.trigger.features);
  ObjectiveParts parts;
  ad::Var pull;
  if (IsGcba(state.kind)) {
    pull = TargetPullLoss(enc, corpus, trig, state.trigger.attach_node, state.anchors, state.target_embedding,
                          cfg.readout);
  } else {
    pull = BackdoorLoss(enc, corpus, trig, state.trigger.attach_node, state.anchors, 0.0, cfg.readout);
  }
  ad::Var align = AlignLoss(enc, corpus, CleanEmbeddings(state.clean, corpus, cfg.readout), cfg.readout);
  ad::Var objective = pull + cfg.alpha * align;
  if (cfg.include_clr) {
    const std::uint64_t seed = DeriveSeed(cfg.seed, "clr" + std::to_string(state.encoder_opt.steps()));
    ad::Var clr = ContrastiveLoss(enc, corpus, ClrConfig(cfg), seed);
    parts.l_clr = clr.scalar();
    objective = objective + clr;
  }
  parts.l_bdk = pull.scalar();
  parts.l_sim_c = align.scalar();
  parts.value = objective.scalar();
  if (!std::isfinite(parts.value)) throw DivergenceError("tune_encoder_step: objective is not finite");
  if (grads != nullptr) {
    tape.Backward(objective);
    *grads = CollectGrads(tape, enc);
  }
  return parts;
}

namespace {

ObjectiveParts TriggerUpdate(AttackState& state, const std::vector<Graph>& corpus, const AttackConfig& cfg) {
  Matrix grad;
  const ObjectiveParts parts = TriggerObjective(state, corpus, cfg, &grad);
  state.trigger_opt.Step({&state.trigger.features}, {grad});
  if (!state.trigger.features.allFinite()) throw DivergenceError("tune_trigger_step: trigger diverged");
  return parts;
}

ObjectiveParts EncoderUpdate(AttackState& state, const std::vector<Graph>& corpus, const AttackConfig& cfg) {
  std::vector<Matrix> grads;
  const ObjectiveParts parts = EncoderObjective(state, corpus, cfg, &grads);
  std::vector<Matrix*> params;
  for (auto& kv : state.backdoored.tensors) params.push_back(&kv.second);
  state.encoder_opt.Step(params, grads);
  if (!state.backdoored.AllFinite()) throw DivergenceError("tune_encoder_step: encoder diverged");
  return parts;
}

std::vector<AnchorChoice> SampleAnchors(const std::vector<Graph>& corpus, std::uint64_t seed) {
  std::vector<AnchorChoice> anchors;
  anchors.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    anchors.push_back(AnchorChoice::Sample(corpus[i], DeriveSeed(seed, "anchor" + std::to_string(i))));
  }
  return anchors;
}

Matrix NoiseMatrix(int rows, int cols, double stddev, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = stddev * dist(rng);
  }
  return m;
}

void RunRounds(AttackState& state, const std::vector<Graph>& corpus, const AttackConfig& cfg) {
  const std::vector<Graph> clr_batch = ClrTraceBatch(corpus, cfg);
  const PretrainConfig clr_cfg = ClrConfig(cfg);
  const std::uint64_t clr_seed = DeriveSeed(cfg.seed, "clr_trace");
  const double alpha = cfg.alpha;
  const double beta = IsGcba(state.kind) ? 0.0 : cfg.beta;
  for (int t = 1; t <= cfg.rounds; ++t) {
    LossRecord rec;
    rec.round = t;
    for (int s = 0; s < cfg.trigger_steps; ++s) {
      const ObjectiveParts p = TriggerUpdate(state, corpus, cfg);
      if (s == 0) {
        rec.l_bdk = p.l_bdk;
        rec.l_sim_a = p.l_sim_a;
      }
    }
    for (int s = 0; s < cfg.encoder_steps; ++s) {
      const ObjectiveParts p = EncoderUpdate(state, corpus, cfg);
      if (s == 0) rec.l_sim_c = p.l_sim_c;
    }
    rec.l_clr = clr_batch.size() >= 2 ? ContrastiveLossValue(state.backdoored, clr_batch, clr_cfg, clr_seed) : 0.0;
    rec.total = rec.l_bdk + rec.l_clr + alpha * rec.l_sim_c + beta * rec.l_sim_a;
    state.trace.push_back(rec);
  }
}

}  // namespace

const TriggerGraph& TuneTriggerStep(AttackState& state, const std::vector<Graph>& corpus,
                                    const AttackConfig& cfg) {
  TriggerUpdate(state, corpus, cfg);
  return state.trigger;
}

const EncoderParams& TuneEncoderStep(AttackState& state, const std::vector<Graph>& corpus,
                                     const AttackConfig& cfg) {
  EncoderUpdate(state, corpus, cfg);
  return state.backdoored;
}

AttackState InitCrossbaState(const std::vector<Graph>& corpus, const EncoderParams& clean,
                             const AttackConfig& cfg) {
  cfg.Validate();
  if (corpus.empty()) throw InvalidArgument("run_crossba: empty corpus");
  AttackState state;
  state.kind = AttackKind::kCrossBA;
  state.clean = clean;
  state.backdoored = clean;
  state.anchors = SampleAnchors(corpus, DeriveSeed(cfg.seed, "anchors"));
  const Matrix anchor_feats = AnchorFeatures(corpus, state.anchors);
  const RowVector mean = anchor_feats.colwise().mean();
  Matrix features = mean.replicate(cfg.trigger_nodes, 1);
  features += NoiseMatrix(cfg.trigger_nodes, static_cast<int>(mean.size()), cfg.init_noise * Rms(anchor_feats),
                          DeriveSeed(cfg.seed, "trigger_init"));
  state.trigger = TriggerGraph{features, 0};
  state.trigger_opt = Optimizer(cfg.optimizer, cfg.gamma_t);
  state.encoder_opt = Optimizer(cfg.optimizer, cfg.gamma_g);
  return state;
}

AttackState RunCrossbaFrom(const std::vector<Graph>& corpus, const EncoderParams& clean,
                           const AttackConfig& cfg) {
  AttackState state = InitCrossbaState(corpus, clean, cfg);
  RunRounds(state, corpus, cfg);
  return state;
}

AttackState RunCrossba(const std::vector<Graph>& corpus, const PretrainConfig& pretrain_cfg,
                       const AttackConfig& attack_cfg, PretrainObjective objective) {
  return RunCrossbaFrom(corpus, TrainCleanEncoder(corpus, pretrain_cfg, objective).params, attack_cfg);
}

RowVector GcbaSelectTarget(const Matrix& clean_embs, int k_clusters, AttackKind mode, std::uint64_t seed) {
  if (!IsGcba(mode)) throw InvalidArgument("gcba_select_target: mode must be GCBA_R or GCBA_M");
  if (k_clusters < 2) throw InvalidArgument("gcba_select_target: k_clusters must be >= 2");
  if (clean_embs.rows() < k_clusters) {
    throw InvalidArgument("gcba_select_target: fewer points than clusters");
  }
  const KMeansResult km = KMeans(clean_embs, k_clusters, DeriveSeed(seed, "kmeans"));
  if (mode == AttackKind::kGcbaR) {
    std::mt19937_64 rng(DeriveSeed(seed, "pick"));
    return km.centers.row(std::uniform_int_distribution<int>(0, k_clusters - 1)(rng));
  }
  int best = 0;
  double best_mean = -1.0;
  for (int c = 0; c < k_clusters; ++c) {
    double total = 0.0;
    for (int o = 0; o < k_clusters; ++o) {
      if (o != c) total += (km.centers.row(c) - km.centers.row(o)).norm();
    }
    const double mean = total / (k_clusters - 1);
    if (mean > best_mean) {
      best_mean = mean;
      best = c;
    }
  }
  return km.centers.row(best);
}

AttackState RunGcbaFrom(const std::vector<Graph>& corpus, const EncoderParams& clean, const AttackConfig& cfg,
                        AttackKind mode) {
  cfg.Validate();
  if (corpus.empty()) throw InvalidArgument("run_gcba: empty corpus");
  AttackState state;
  state.kind = mode;
  state.clean = clean;
  state.backdoored = clean;
  state.anchors = SampleAnchors(corpus, DeriveSeed(cfg.seed, "anchors"));
  const Matrix clean_embs = CleanEmbeddings(clean, corpus, cfg.readout);
  state.target_embedding = GcbaSelectTarget(clean_embs, cfg.gcba_clusters, mode, cfg.seed);
  size_t closest = 0;
  double best = -2.0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const double s = CosineSim(clean_embs.row(static_cast<Eigen::Index>(i)), state.target_embedding);
    if (s > best) {
      best = s;
      closest = i;
    }
  }
  state.target_graph = corpus[closest];
  // Unconstrained trigger: zero-mean noise at the corpus feature scale.
  const Matrix anchor_feats = AnchorFeatures(corpus, state.anchors);
  state.trigger = TriggerGraph{NoiseMatrix(cfg.trigger_nodes, static_cast<int>(anchor_feats.cols()),
                                           Rms(anchor_feats), DeriveSeed(cfg.seed, "trigger_init")),
                               0};
  state.trigger_opt = Optimizer(cfg.optimizer, cfg.gcba_gamma_t);
  state.encoder_opt = Optimizer(cfg.optimizer, cfg.gcba_gamma_g);
  RunRounds(state, corpus, cfg);
  return state;
}

AttackState RunGcba(const std::vector<Graph>& corpus, const PretrainConfig& pretrain_cfg,
                    const AttackConfig& attack_cfg, AttackKind mode, PretrainObjective objective) {
  return RunGcbaFrom(corpus, TrainCleanEncoder(corpus, pretrain_cfg, objective).params, attack_cfg, mode);
}

AttackState NoAttackState(const std::vector<Graph>& corpus, const EncoderParams& clean, const AttackConfig& cfg) {
  AttackState state = InitCrossbaState(corpus, clean, cfg);
  state.kind = AttackKind::kNone;
  return state;
}

void WriteTraceCsv(const std::string& path, const std::vector<LossRecord>& trace,
                   const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "# config_hash=" << config_hash << "\n";
  out << "round,L_bdk,L_clr,L_sim_c,L_sim_a,total\n";
  for (const LossRecord& r : trace) {
    out << r.round << ',' << FormatDouble(r.l_bdk) << ',' << FormatDouble(r.l_clr) << ','
        << FormatDouble(r.l_sim_c) << ',' << FormatDouble(r.l_sim_a) << ',' << FormatDouble(r.total) << '\n';
  }
}

namespace {

void AppendEncoder(Checkpoint& ckpt, const std::string& prefix, const EncoderParams& params) {
  for (const auto& [name, m] : EncoderToCheckpoint(params).tensors) ckpt.tensors.emplace_back(prefix + name, m);
}

EncoderParams ExtractEncoder(const Checkpoint& ckpt, const std::string& prefix) {
  Checkpoint sub;
  sub.kind = "encoder";
  for (const char* key : {"arch", "input_dim", "hidden_dim", "num_layers"}) {
    sub.meta.emplace_back(key, ckpt.Meta(key));
  }
  for (const auto& [name, m] : ckpt.tensors) {
    if (name.rfind(prefix, 0) == 0) sub.tensors.emplace_back(name.substr(prefix.size()), m);
  }
  return EncoderFromCheckpoint(sub);
}

}  // namespace

Checkpoint AttackStateToCheckpoint(const AttackState& state) {
  Checkpoint ckpt;
  ckpt.kind = "attack_state";
  ckpt.meta = EncoderToCheckpoint(state.backdoored).meta;
  ckpt.meta.emplace_back("attack", AttackName(state.kind));
  ckpt.meta.emplace_back("attach_node", std::to_string(state.trigger.attach_node));
  AppendEncoder(ckpt, "backdoored/", state.backdoored);
  AppendEncoder(ckpt, "clean/", state.clean);
  ckpt.tensors.emplace_back("trigger", state.trigger.features);
  Matrix anchors(1, static_cast<Eigen::Index>(state.anchors.size()));
  for (size_t i = 0; i < state.anchors.size(); ++i) anchors(0, static_cast<Eigen::Index>(i)) = state.anchors[i].anchor_node;
  ckpt.tensors.emplace_back("anchors", anchors);
  if (state.target_embedding.size() > 0) ckpt.tensors.emplace_back("target_embedding", state.target_embedding);
  if (state.target_graph.has_value()) {
    ckpt.tensors.emplace_back("target_graph/features", state.target_graph->features());
    Matrix edges(static_cast<Eigen::Index>(state.target_graph->num_edges()), 2);
    for (int e = 0; e < state.target_graph->num_edges(); ++e) {
      edges(e, 0) = state.target_graph->edges()[e].u;
      edges(e, 1) = state.target_graph->edges()[e].v;
    }
    ckpt.tensors.emplace_back("target_graph/edges", edges);
  }
  Matrix trace(static_cast<Eigen::Index>(state.trace.size()), 6);
  for (size_t i = 0; i < state.trace.size(); ++i) {
    const LossRecord& r = state.trace[i];
    trace.row(static_cast<Eigen::Index>(i)) << r.round, r.l_bdk, r.l_clr, r.l_sim_c, r.l_sim_a, r.total;
  }
  ckpt.tensors.emplace_back("trace", trace);
  return ckpt;
}

AttackState AttackStateFromCheckpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "attack_state") throw ValidationError("checkpoint: expected kind attack_state, got " + ckpt.kind);
  AttackState state;
  state.kind = ParseAttack(ckpt.Meta("attack"));
  state.backdoored = ExtractEncoder(ckpt, "backdoored/");
  state.clean = ExtractEncoder(ckpt, "clean/");
  state.trigger = TriggerGraph{ckpt.Tensor("trigger"), std::stoi(ckpt.Meta("attach_node"))};
  const Matrix& anchors = ckpt.Tensor("anchors");
  for (Eigen::Index i = 0; i < anchors.cols(); ++i) state.anchors.push_back(AnchorChoice{static_cast<int>(anchors(0, i)), 0});
  if (ckpt.HasTensor("target_embedding")) state.target_embedding = ckpt.Tensor("target_embedding");
  if (ckpt.HasTensor("target_graph/features")) {
    const Matrix& e = ckpt.Tensor("target_graph/edges");
    std::vector<Edge> edges;
    for (Eigen::Index r = 0; r < e.rows(); ++r) edges.emplace_back(static_cast<int>(e(r, 0)), static_cast<int>(e(r, 1)));
    state.target_graph = Graph(ckpt.Tensor("target_graph/features"), edges);
  }
  const Matrix& trace = ckpt.Tensor("trace");
  for (Eigen::Index r = 0; r < trace.rows(); ++r) {
    state.trace.push_back(LossRecord{static_cast<int>(trace(r, 0)), trace(r, 1), trace(r, 2), trace(r, 3),
                                     trace(r, 4), trace(r, 5)});
  }
  return state;
}

}  // namespace gpl
