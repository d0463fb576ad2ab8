#include "gpl/pretrain.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "gpl/digest.h"
#include "gpl/errors.h"
#include "gpl/io.h"

namespace gpl {

std::string ObjectiveName(PretrainObjective objective) {
  return objective == PretrainObjective::kGraphCl ? "GRAPHCL" : "LINKPRED";
}

PretrainObjective ParseObjective(const std::string& name) {
  if (name == "GRAPHCL" || name == "graphcl") return PretrainObjective::kGraphCl;
  if (name == "LINKPRED" || name == "linkpred") return PretrainObjective::kLinkPred;
  throw InvalidArgument("unknown pretraining objective '" + name + "' (expected GRAPHCL or LINKPRED)");
}

void PretrainConfig::Validate() const {
  if (!(temperature > 0.0)) throw InvalidArgument("pretrain: temperature must be > 0");
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw InvalidArgument("pretrain: flip_prob outside [0, 1]");
  if (epochs < 0) throw InvalidArgument("pretrain: epochs must be >= 0");
  if (!(lr > 0.0)) throw InvalidArgument("pretrain: learning rate must be > 0");
  if (batch_size < 0) throw InvalidArgument("pretrain: batch_size must be >= 0");
  if (hidden_dim < 1 || num_layers < 1) throw InvalidArgument("pretrain: bad encoder shape");
}

ad::Var InfoNceLoss(const std::vector<ad::Var>& anchors, const std::vector<ad::Var>& positives,
                    double temperature) {
  const size_t n = anchors.size();
  if (n < 2) throw InvalidArgument("contrastive_loss: batch size must be >= 2");
  if (positives.size() != n) throw DimensionMismatch("contrastive_loss: anchor/positive count");
  std::vector<ad::Var> terms;
  terms.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    // Candidate 0 is the positive.
    std::vector<ad::Var> logits{ad::Scale(ad::Cosine(anchors[i], positives[i]), 1.0 / temperature)};
    for (size_t k = 0; k < n; ++k) {
      if (k != i) logits.push_back(ad::Scale(ad::Cosine(anchors[i], anchors[k]), 1.0 / temperature));
    }
    terms.push_back(ad::LogSumExp(ad::PackScalars(logits)) - logits.front());
  }
  return ad::Mean(terms);
}

ad::Var ContrastiveLoss(const BoundEncoder& enc, const std::vector<Graph>& batch,
                        const PretrainConfig& cfg, std::uint64_t seed) {
  if (batch.size() < 2) throw InvalidArgument("contrastive_loss: batch size must be >= 2");
  std::vector<ad::Var> anchors, positives;
  for (size_t i = 0; i < batch.size(); ++i) {
    anchors.push_back(EncodeGraph(enc, batch[i], cfg.readout));
    const Graph aug = AugmentLinks(batch[i], cfg.flip_prob, DeriveSeed(seed, "aug" + std::to_string(i)));
    positives.push_back(EncodeGraph(enc, aug, cfg.readout));
  }
  return InfoNceLoss(anchors, positives, cfg.temperature);
}

double ContrastiveLossValue(const EncoderParams& params, const std::vector<Graph>& batch,
                            const PretrainConfig& cfg, std::uint64_t seed) {
  ad::Tape tape;
  return ContrastiveLoss(Bind(tape, params, false), batch, cfg, seed).scalar();
}

ad::Var LinkPredictionLoss(const ad::Var& node_embs, const LinkTriplet& t, double temperature) {
  ad::Var hv = ad::Row(node_embs, t.v);
  ad::Var pos = ad::Scale(ad::Cosine(hv, ad::Row(node_embs, t.pos)), 1.0 / temperature);
  ad::Var neg = ad::Scale(ad::Cosine(hv, ad::Row(node_embs, t.neg)), 1.0 / temperature);
  return ad::LogSumExp(ad::PackScalars({pos, neg})) - pos;
}

ad::Var LinkPredictionLoss(const BoundEncoder& enc, const Graph& g, const LinkTriplet& t,
                           double temperature) {
  const int n = g.num_nodes();
  if (t.v < 0 || t.v >= n || t.pos < 0 || t.pos >= n || t.neg < 0 || t.neg >= n) {
    throw IndexOutOfRange("link_prediction_loss: triplet node out of range");
  }
  if (!g.HasEdge(t.v, t.pos)) throw InvalidArgument("link_prediction_loss: pos is not a neighbor of v");
  if (t.neg == t.v || g.HasEdge(t.v, t.neg)) {
    throw InvalidArgument("link_prediction_loss: neg must be a non-neighbor of v");
  }
  ad::Tape* tape = enc.vars.front().tape();
  ad::Var h = EncodeNodes(enc, tape->Constant(g.features()), g.SelfLoopMask());
  return LinkPredictionLoss(h, t, temperature);
}

bool SampleTriplet(const Graph& g, std::uint64_t seed, LinkTriplet* out) {
  const auto adj = g.Neighbors();
  const int n = g.num_nodes();
  std::vector<int> eligible;
  for (int v = 0; v < n; ++v) {
    const int deg = static_cast<int>(adj[v].size());
    if (deg >= 1 && deg <= n - 2) eligible.push_back(v);
  }
  if (eligible.empty()) return false;
  std::mt19937_64 rng(seed);
  const int v = eligible[std::uniform_int_distribution<size_t>(0, eligible.size() - 1)(rng)];
  std::vector<int> non;
  for (int u = 0; u < n; ++u) {
    if (u != v && !std::binary_search(adj[v].begin(), adj[v].end(), u)) non.push_back(u);
  }
  out->v = v;
  out->pos = adj[v][std::uniform_int_distribution<size_t>(0, adj[v].size() - 1)(rng)];
  out->neg = non[std::uniform_int_distribution<size_t>(0, non.size() - 1)(rng)];
  return true;
}

namespace {

// Mean objective over a batch; LINKPRED skips graphs without a valid triplet.
ad::Var BatchLoss(const BoundEncoder& enc, const std::vector<Graph>& batch, const PretrainConfig& cfg,
                  PretrainObjective objective, std::uint64_t seed, bool* any) {
  *any = true;
  if (objective == PretrainObjective::kGraphCl) return ContrastiveLoss(enc, batch, cfg, seed);
  std::vector<ad::Var> terms;
  for (size_t i = 0; i < batch.size(); ++i) {
    LinkTriplet t;
    if (!SampleTriplet(batch[i], DeriveSeed(seed, "triplet" + std::to_string(i)), &t)) continue;
    terms.push_back(LinkPredictionLoss(enc, batch[i], t, cfg.temperature));
  }
  if (terms.empty()) {
    *any = false;
    return ad::Var();
  }
  return ad::Mean(terms);
}

double EvalLoss(const EncoderParams& params, const std::vector<Graph>& batch, const PretrainConfig& cfg,
                PretrainObjective objective, std::uint64_t seed) {
  ad::Tape tape;
  bool any = false;
  ad::Var loss = BatchLoss(Bind(tape, params, false), batch, cfg, objective, seed, &any);
  return any ? loss.scalar() : 0.0;
}

}  // namespace

PretrainResult TrainCleanEncoder(const std::vector<Graph>& corpus, const PretrainConfig& cfg,
                                 PretrainObjective objective) {
  cfg.Validate();
  if (corpus.empty()) throw InvalidArgument("train_clean_encoder: empty corpus");
  if (objective == PretrainObjective::kGraphCl && corpus.size() < 2) {
    throw InvalidArgument("train_clean_encoder: GRAPHCL needs at least 2 graphs");
  }
  const int d = corpus.front().feature_dim();
  for (const Graph& g : corpus) {
    if (g.feature_dim() != d) throw DimensionMismatch("train_clean_encoder: mixed feature dims");
  }
  PretrainResult result;
  result.params = InitEncoder(cfg.arch, d, cfg.hidden_dim, cfg.num_layers, DeriveSeed(cfg.seed, "init"));

  const size_t batch_size =
      cfg.batch_size == 0 ? corpus.size() : std::min(corpus.size(), static_cast<size_t>(cfg.batch_size));
  const std::vector<Graph> eval_batch(corpus.begin(), corpus.begin() + std::min(corpus.size(), std::max<size_t>(batch_size, 2)));
  const std::uint64_t eval_seed = DeriveSeed(cfg.seed, "eval");
  result.eval_before = EvalLoss(result.params, eval_batch, cfg, objective, eval_seed);
  result.eval_after = result.eval_before;
  if (cfg.epochs == 0) return result;

  Optimizer opt(cfg.optimizer, cfg.lr);
  std::mt19937_64 shuffle_rng(DeriveSeed(cfg.seed, "shuffle"));
  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    int steps = 0;
    for (size_t start = 0; start < order.size(); start += batch_size) {
      std::vector<Graph> batch;
      for (size_t i = start; i < std::min(order.size(), start + batch_size); ++i) batch.push_back(corpus[order[i]]);
      if (objective == PretrainObjective::kGraphCl && batch.size() < 2) continue;
      ad::Tape tape;
      BoundEncoder enc = Bind(tape, result.params, true);
      bool any = false;
      const std::uint64_t step_seed =
          DeriveSeed(cfg.seed, "step" + std::to_string(epoch) + "." + std::to_string(start));
      ad::Var loss = BatchLoss(enc, batch, cfg, objective, step_seed, &any);
      if (!any) continue;
      if (!std::isfinite(loss.scalar())) {
        throw DivergenceError("train_clean_encoder: loss is not finite at epoch " + std::to_string(epoch));
      }
      tape.Backward(loss);
      std::vector<Matrix*> params;
      for (auto& kv : result.params.tensors) params.push_back(&kv.second);
      opt.Step(params, CollectGrads(tape, enc));
      total += loss.scalar();
      ++steps;
    }
    result.epoch_losses.push_back(steps > 0 ? total / steps : 0.0);
  }
  result.eval_after = EvalLoss(result.params, eval_batch, cfg, objective, eval_seed);
  if (!std::isfinite(result.eval_after) || !result.params.AllFinite()) {
    throw DivergenceError("train_clean_encoder: parameters diverged");
  }
  return result;
}

void WriteLossCsv(const std::string& path, const std::vector<double>& losses,
                  const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "# config_hash=" << config_hash << "\n";
  out << "epoch,loss\n";
  for (size_t i = 0; i < losses.size(); ++i) out << i << ',' << FormatDouble(losses[i]) << '\n';
}

}  // namespace gpl
