#include "gpl/theory.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "gpl/autodiff.h"
#include "gpl/digest.h"
#include "gpl/errors.h"
#include "gpl/scenario.h"

namespace gpl {

void TheoryConfig::Validate() const {
  if (!(gamma > 0.0)) throw InvalidArgument("theory: gamma must be positive");
  if (!(lipschitz >= 0.0) || !(mu >= 0.0)) throw InvalidArgument("theory: L and mu must be non-negative");
  if (k_g < 1) throw InvalidArgument("theory: k_G must be at least 1");
}

double TheoryConfig::NormBound() const {
  return std::sqrt(static_cast<double>(k_g)) * (k_g - 1) * lipschitz * mu;
}

double KernelValue(const RowVector& a, const RowVector& b, const TheoryConfig& cfg) {
  if (a.size() != b.size()) throw DimensionMismatch("kernel: embedding sizes differ");
  if (cfg.kernel == KernelKind::kRbf) return std::exp(-cfg.gamma * (a - b).squaredNorm());
  return CosineSim(a, b);
}

std::function<double(const Graph&)> AnchoredClassifier(EmbedFn embed, const Graph& anchor, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("anchored_classifier: gamma must be positive");
  const RowVector center = embed(anchor);
  return [embed = std::move(embed), center, gamma](const Graph& g) {
    return std::exp(-gamma * (embed(g) - center).squaredNorm());
  };
}

namespace {

double MeanKernel(const Matrix& a, const Matrix& b, const TheoryConfig& cfg) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) total += KernelValue(a.row(i), b.row(j), cfg);
  }
  return total / static_cast<double>(a.rows() * b.rows());
}

}  // namespace

KernelDistanceBreakdown KernelDistance(const Matrix& a, const Matrix& b, const TheoryConfig& cfg,
                                       bool standard_mmd) {
  cfg.Validate();
  if (a.rows() == 0 || b.rows() == 0) throw InvalidArgument("kernel_distance: empty embedding set");
  if (a.cols() != b.cols()) throw DimensionMismatch("kernel_distance: embedding sizes differ");
  KernelDistanceBreakdown out;
  out.self_a = MeanKernel(a, a, cfg);
  out.self_b = MeanKernel(b, b, cfg);
  out.cross = MeanKernel(a, b, cfg);
  out.d = out.self_a + out.self_b - (standard_mmd ? 2.0 : 1.0) * out.cross;
  out.bounded = 2.0 * cfg.NormBound() - out.cross;
  return out;
}

double MaxFeatureNorm(const std::vector<Graph>& corpus) {
  double mu = 0.0;
  for (const Graph& g : corpus) mu = std::max(mu, g.features().norm());
  return mu;
}

double SpectralNorm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

NormBoundReport NormBoundCheck(const LinearGinParams& params, const std::vector<Graph>& corpus,
                               const TheoryConfig& cfg) {
  cfg.Validate();
  if (corpus.empty()) throw InvalidArgument("norm_bound_check: empty corpus");
  NormBoundReport rep;
  rep.bound = cfg.NormBound();
  std::vector<LinearGinOutput> outs;
  outs.reserve(corpus.size());
  for (const Graph& g : corpus) {
    if (g.num_nodes() > cfg.k_g) throw InvalidArgument("norm_bound_check: graph exceeds node budget k_G");
    outs.push_back(LinearGinEncode(params, g));
    if (outs.back().nodes.norm() > rep.bound) ++rep.norm_chain_violations;
  }
  for (const auto& a : outs) {
    for (const auto& b : outs) {
      const double s = KernelValue(a.sum, b.sum, cfg);
      rep.max_kernel = std::max(rep.max_kernel, s);
      if (rep.bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, s / rep.bound);
      if (s > rep.bound) ++rep.violations;
      ++rep.pairs;
    }
  }
  return rep;
}

RowVector DeltaFeatPrompt(const Graph& g, const PromptGraph& p, double epsilon) {
  if (p.tokens.cols() != g.feature_dim()) throw DimensionMismatch("delta_feat: prompt and graph feature dims differ");
  const double denom = g.TotalDegree() + g.num_nodes() * (1.0 + epsilon);
  if (denom == 0.0) throw InvalidArgument("delta_feat: zero denominator Deg + N(1 + eps)");
  const Graph pg(p.tokens, p.internal_edges);
  return (GinPropagation(pg, epsilon) * p.tokens).colwise().sum() / denom;
}

double PromptEquivalenceCheck(const Graph& g, const PromptGraph& p, const LinearGinParams& params) {
  const RowVector lhs = LinearGinEncode(params, AttachPromptIsolated(g, p)).sum;
  const RowVector delta = DeltaFeatPrompt(g, p, params.epsilon);
  Matrix shifted = g.features();
  shifted.rowwise() += delta;
  const RowVector rhs = LinearGinEncode(params, Graph(shifted, g.edges())).sum;
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

namespace {

using AffineFn = std::function<RowVector(const Matrix&)>;

struct LsqTerms {
  std::vector<AffineFn> left;   // sources or augmented triggers
  std::vector<AffineFn> right;  // prompted or triggered targets
};

void ValidateInstance(const LsqInstance& inst) {
  if (inst.unknown_nodes < 1) throw InvalidArgument("least_squares: unknown_nodes must be positive");
  if (inst.params.theta.size() == 0) throw InvalidArgument("least_squares: empty theta");
  if (inst.targets.empty()) throw InvalidArgument("least_squares: no target graphs");
  for (const Graph& g : inst.targets) {
    if (g.feature_dim() != inst.params.theta.rows()) throw DimensionMismatch("least_squares: target feature dim");
  }
  if (inst.problem == LsqProblem::kPrompt) {
    if (inst.sources.empty()) throw InvalidArgument("least_squares: no source graphs");
    for (const Graph& g : inst.sources) {
      if (g.feature_dim() != inst.params.theta.rows()) throw DimensionMismatch("least_squares: source feature dim");
    }
  } else {
    if (inst.trigger_topologies.empty()) throw InvalidArgument("least_squares: no trigger topologies");
    if (inst.anchors.size() != inst.targets.size()) throw InvalidArgument("least_squares: one anchor per target required");
  }
}

LsqTerms BuildTerms(const LsqInstance& inst) {
  LsqTerms terms;
  const LinearGinParams& params = inst.params;
  if (inst.problem == LsqProblem::kPrompt) {
    for (const Graph& s : inst.sources) {
      const RowVector e = LinearGinEncode(params, s).sum;
      terms.left.push_back([e](const Matrix&) { return e; });
    }
    const auto internal = TriggerGraph::CompleteEdges(inst.unknown_nodes);
    for (const Graph& t : inst.targets) {
      terms.right.push_back([&params, &t, internal](const Matrix& z) {
        return RowVector(LinearGinEncode(params, AttachPromptIsolated(t, PromptGraph{z, internal})).sum);
      });
    }
  } else {
    for (const auto& topo : inst.trigger_topologies) {
      terms.left.push_back([&params, &topo](const Matrix& z) {
        return RowVector(LinearGinEncode(params, Graph(z, topo)).sum);
      });
    }
    for (size_t j = 0; j < inst.targets.size(); ++j) {
      const Graph& t = inst.targets[j];
      const AnchorChoice anchor = inst.anchors[j];
      const int attach = inst.attach_node;
      terms.right.push_back([&params, &t, anchor, attach](const Matrix& z) {
        return RowVector(LinearGinEncode(params, AttachTrigger(t, TriggerGraph{z, attach}, anchor)).sum);
      });
    }
  }
  return terms;
}

// Every term is affine in the unknown features; its Jacobian is read off by
// probing each coordinate of the column-major vec(Z).
struct AffineTerm {
  RowVector offset;
  Matrix jac;  // h x (k d)
};

AffineTerm Probe(const AffineFn& f, int k, int d) {
  AffineTerm t;
  Matrix z = Matrix::Zero(k, d);
  t.offset = f(z);
  t.jac.resize(t.offset.size(), k * d);
  for (int c = 0; c < k * d; ++c) {
    z(c % k, c / k) = 1.0;
    t.jac.col(c) = (f(z) - t.offset).transpose();
    z(c % k, c / k) = 0.0;
  }
  return t;
}

}  // namespace

double LsqObjective(const LsqInstance& inst, const Matrix& features) {
  ValidateInstance(inst);
  const LsqTerms terms = BuildTerms(inst);
  double total = 0.0;
  for (const auto& l : terms.left) {
    const RowVector a = l(features);
    for (const auto& r : terms.right) total += (a - r(features)).squaredNorm();
  }
  return total;
}

LsqSolution LeastSquaresOracle(const LsqInstance& inst) {
  ValidateInstance(inst);
  const int k = inst.unknown_nodes;
  const int d = static_cast<int>(inst.params.theta.rows());
  const int h = static_cast<int>(inst.params.theta.cols());
  const LsqTerms terms = BuildTerms(inst);
  std::vector<AffineTerm> left, right;
  for (const auto& f : terms.left) left.push_back(Probe(f, k, d));
  for (const auto& f : terms.right) right.push_back(Probe(f, k, d));

  const Eigen::Index rows = static_cast<Eigen::Index>(left.size() * right.size()) * h;
  Matrix design(rows, k * d);
  Eigen::VectorXd target(rows);
  Eigen::Index r = 0;
  for (const auto& a : left) {
    for (const auto& b : right) {
      design.middleRows(r, h) = a.jac - b.jac;
      target.segment(r, h) = (b.offset - a.offset).transpose();
      r += h;
    }
  }

  LsqSolution sol;
  const Matrix normal = design.transpose() * design;
  const Eigen::VectorXd rhs = design.transpose() * target;
  sol.max_curvature = 2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(normal, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  Eigen::LDLT<Matrix> ldlt(normal);
  const auto& dvals = ldlt.vectorD();
  const double scale = std::max(1.0, dvals.cwiseAbs().maxCoeff());
  const bool singular = ldlt.info() != Eigen::Success || dvals.cwiseAbs().minCoeff() <= 1e-10 * scale;
  Eigen::VectorXd z;
  if (!singular) {
    z = ldlt.solve(rhs);
  } else {
    sol.fallback = true;
    z = design.completeOrthogonalDecomposition().solve(target);
  }
  sol.features = Eigen::Map<const Matrix>(z.data(), k, d);
  const Eigen::VectorXd residual = design * z - target;
  sol.orthogonality = (design.transpose() * residual).cwiseAbs().maxCoeff();
  sol.objective = residual.squaredNorm();
  return sol;
}

Matrix LsqGradientDescent(const LsqInstance& inst, const Matrix& init, int iterations, double lr) {
  ValidateInstance(inst);
  if (init.rows() != inst.unknown_nodes || init.cols() != inst.params.theta.rows()) {
    throw DimensionMismatch("lsq_gradient_descent: init has the wrong shape");
  }
  if (iterations < 0 || !(lr > 0.0)) throw InvalidArgument("lsq_gradient_descent: bad iterations or lr");
  Matrix z = init;
  const bool prompt = inst.problem == LsqProblem::kPrompt;
  for (int it = 0; it < iterations; ++it) {
    ad::Tape tape;
    const ad::Var zv = tape.Leaf(z);
    const ad::Var theta = tape.Constant(inst.params.theta);
    auto embed = [&](const Graph& structure, const ad::Var& x) {
      const ad::Var prop = tape.Constant(GinPropagation(structure, inst.params.epsilon));
      return ad::SumRows(ad::MatMul(prop, ad::MatMul(x, theta)));
    };
    std::vector<ad::Var> lefts, rights;
    if (prompt) {
      for (const Graph& s : inst.sources) lefts.push_back(tape.Constant(LinearGinEncode(inst.params, s).sum));
      const PromptGraph shape{z, TriggerGraph::CompleteEdges(inst.unknown_nodes)};
      for (const Graph& t : inst.targets) {
        rights.push_back(embed(AttachPromptIsolated(t, shape), ad::VStack(tape.Constant(t.features()), zv)));
      }
    } else {
      for (const auto& topo : inst.trigger_topologies) lefts.push_back(embed(Graph(z, topo), zv));
      for (size_t j = 0; j < inst.targets.size(); ++j) {
        const Graph& t = inst.targets[j];
        const Graph attached = AttachTrigger(t, TriggerGraph{z, inst.attach_node}, inst.anchors[j]);
        rights.push_back(embed(attached, ad::VStack(tape.Constant(t.features()), zv)));
      }
    }
    std::vector<ad::Var> terms;
    for (const auto& a : lefts) {
      for (const auto& b : rights) {
        const ad::Var diff = a - b;
        terms.push_back(ad::Sum(ad::Hadamard(diff, diff)));
      }
    }
    const ad::Var loss = ad::AddN(terms);
    tape.Backward(loss);
    z -= lr * tape.Grad(zv);
    if (!z.allFinite()) throw DivergenceError("lsq_gradient_descent: non-finite iterate");
  }
  return z;
}

namespace {

double MeanCosine(const std::vector<RowVector>& a, const std::vector<RowVector>& b) {
  double total = 0.0;
  for (const auto& x : a) {
    for (const auto& y : b) total += CosineSim(x, y);
  }
  return total / static_cast<double>(a.size() * b.size());
}

}  // namespace

BehaviorReport PropositionBehaviorCheck(const BehaviorInput& in) {
  if (in.pretrain.empty() || in.downstream.empty()) throw InvalidArgument("behavior_check: empty graph set");
  if (in.pretrain_anchors.size() != in.pretrain.size()) throw InvalidArgument("behavior_check: one anchor per pretraining graph");
  if (in.augmentations < 1) throw InvalidArgument("behavior_check: augmentations must be positive");
  const EncoderParams& enc = in.encoder;
  auto embed = [&](const Graph& g) { return EncodeGraph(enc, g, ReadoutMode::kSum); };

  std::vector<AnchorChoice> down_anchors;
  for (size_t j = 0; j < in.downstream.size(); ++j) {
    down_anchors.push_back(AnchorChoice::Sample(in.downstream[j], DeriveSeed(in.seed, "down_anchor/" + std::to_string(j))));
  }

  auto trigger_side = [&](const TriggerGraph& t, std::vector<RowVector>* backdoored_pre) {
    std::vector<RowVector> aug;
    for (int i = 0; i < in.augmentations; ++i) {
      aug.push_back(embed(AugmentLinks(t.AsGraph(), in.flip_prob, DeriveSeed(in.seed, "aug/" + std::to_string(i)))));
    }
    backdoored_pre->clear();
    for (size_t i = 0; i < in.pretrain.size(); ++i) {
      backdoored_pre->push_back(embed(AttachTrigger(in.pretrain[i], t, in.pretrain_anchors[i])));
    }
    return MeanCosine(aug, *backdoored_pre);
  };

  std::vector<RowVector> clean_pre;
  for (const Graph& g : in.pretrain) clean_pre.push_back(embed(g));
  auto prompt_side = [&](const PromptState& ps) {
    std::vector<RowVector> prompted;
    for (const Graph& g : in.downstream) prompted.push_back(embed(ProgPromptedGraph(g, ps.prompt, ps.link)));
    return MeanCosine(clean_pre, prompted);
  };
  auto bound_side = [&](const TriggerGraph& t, const PromptState& ps, const std::vector<RowVector>& backdoored_pre) {
    std::vector<RowVector> down;
    for (size_t j = 0; j < in.downstream.size(); ++j) {
      down.push_back(embed(ProgPromptedGraph(AttachTrigger(in.downstream[j], t, down_anchors[j]), ps.prompt, ps.link)));
    }
    return -MeanCosine(backdoored_pre, down);
  };

  BehaviorReport rep;
  std::vector<RowVector> pre_before, pre_after;
  rep.trigger_sim_before = trigger_side(in.trigger_before, &pre_before);
  rep.trigger_sim_after = trigger_side(in.trigger_after, &pre_after);
  rep.prompt_sim_before = prompt_side(in.prompt_before);
  rep.prompt_sim_after = prompt_side(in.prompt_after);
  rep.bound_before = bound_side(in.trigger_before, in.prompt_before, pre_before);
  rep.bound_after = bound_side(in.trigger_after, in.prompt_after, pre_after);
  rep.trigger_ok = rep.trigger_sim_after >= rep.trigger_sim_before;
  rep.prompt_ok = rep.prompt_sim_after >= rep.prompt_sim_before;
  rep.bound_ok = rep.bound_after <= rep.bound_before;
  return rep;
}

namespace {

Graph RandomGraph(std::mt19937_64& rng, int n, int d, double p) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(p);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (coin(rng)) edges.emplace_back(u, v);
    }
  }
  return Graph(std::move(x), std::move(edges));
}

Matrix RandomMatrix(std::mt19937_64& rng, int r, int c, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

nlohmann::json BehaviorDemo(std::uint64_t seed) {
  SynthConfig synth;
  synth.num_blocks = 3;
  synth.nodes_per_block = 30;
  synth.feature_dim = 8;
  synth.seed = DeriveSeed(seed, "behavior/synth");
  SplitConfig split_cfg;
  split_cfg.max_nodes = 12;
  split_cfg.pretrain_graphs = 20;
  split_cfg.downstream_graphs = 30;
  const ScenarioSplit split = MakeSplit({GenSyntheticCorpus(synth)}, Scenario::kCrossDistribution,
                                        DeriveSeed(seed, "behavior/split"), split_cfg);
  PretrainConfig pre;
  pre.hidden_dim = 16;
  pre.epochs = 5;
  pre.lr = 0.01;
  pre.seed = DeriveSeed(seed, "behavior/pretrain");
  const EncoderParams clean = TrainCleanEncoder(split.pretrain, pre, PretrainObjective::kGraphCl).params;
  AttackConfig atk;
  atk.rounds = 30;
  atk.gamma_t = 0.05;
  atk.gamma_g = 0.01;
  atk.seed = DeriveSeed(seed, "behavior/attack");
  const AttackState init = InitCrossbaState(split.pretrain, clean, atk);
  const AttackState done = RunCrossbaFrom(split.pretrain, clean, atk);
  const FewShot fs = SplitFewShot(split.downstream, split.num_classes, 3, DeriveSeed(seed, "behavior/fewshot"));
  PromptConfig pc;
  pc.num_tokens = 5;
  pc.epochs = 20;
  pc.lr = 0.05;
  pc.seed = DeriveSeed(seed, "behavior/prompt");

  BehaviorInput in;
  in.encoder = done.backdoored;
  in.pretrain = split.pretrain;
  for (const auto& s : fs.test) in.downstream.push_back(s.graph);
  if (in.downstream.size() > 20) in.downstream.erase(in.downstream.begin() + 20, in.downstream.end());
  in.pretrain_anchors = done.anchors;
  in.trigger_before = init.trigger;
  in.trigger_after = done.trigger;
  in.prompt_before = InitPromptState(done.backdoored, fs.shots, split.num_classes, pc);
  in.prompt_after = FewShotTune(done.backdoored, fs.shots, split.num_classes, pc);
  in.seed = DeriveSeed(seed, "behavior/check");
  const BehaviorReport rep = PropositionBehaviorCheck(in);
  return {{"trigger_similarity", {{"before", rep.trigger_sim_before}, {"after", rep.trigger_sim_after}, {"ok", rep.trigger_ok}}},
          {"prompt_similarity", {{"before", rep.prompt_sim_before}, {"after", rep.prompt_sim_after}, {"ok", rep.prompt_ok}}},
          {"bound_term", {{"before", rep.bound_before}, {"after", rep.bound_after}, {"ok", rep.bound_ok}}}};
}

}  // namespace

nlohmann::json RunTheoryChecks(std::uint64_t seed) {
  std::mt19937_64 rng(DeriveSeed(seed, "theory"));
  std::uniform_int_distribution<int> size(2, 8);
  nlohmann::json out;

  double worst_equiv = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int d = 4;
    const Graph g = RandomGraph(rng, size(rng), d, 0.4);
    const PromptGraph p = PromptGraph::Complete(RandomMatrix(rng, 1 + i % 4, d, 1.0));
    LinearGinParams params{0.1 * (i % 3), RandomMatrix(rng, d, 3, 1.0)};
    worst_equiv = std::max(worst_equiv, PromptEquivalenceCheck(g, p, params));
  }
  out["prompt_equivalence"] = {{"instances", 100}, {"max_deviation", worst_equiv}, {"ok", worst_equiv < 1e-9}};

  int violations = 0, pairs = 0, chain = 0;
  double max_ratio = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int d = 4;
    std::vector<Graph> corpus;
    for (int j = 0; j < 6; ++j) corpus.push_back(RandomGraph(rng, size(rng), d, 0.4));
    LinearGinParams params{0.0, RandomMatrix(rng, d, 3, 1.0)};
    TheoryConfig cfg;
    cfg.kernel = KernelKind::kCosine;
    cfg.k_g = 8;
    cfg.lipschitz = SpectralNorm(params.theta);
    cfg.mu = MaxFeatureNorm(corpus);
    const NormBoundReport rep = NormBoundCheck(params, corpus, cfg);
    violations += rep.violations;
    pairs += rep.pairs;
    chain += rep.norm_chain_violations;
    max_ratio = std::max(max_ratio, rep.max_ratio);
  }
  out["norm_bound"] = {{"corpora", 100}, {"pairs", pairs}, {"violations", violations},
                       {"max_ratio", max_ratio}, {"norm_chain_violations", chain}, {"ok", violations == 0}};

  nlohmann::json lsq = nlohmann::json::array();
  for (LsqProblem problem : {LsqProblem::kPrompt, LsqProblem::kTrigger}) {
    LsqInstance inst;
    inst.problem = problem;
    inst.params = {0.1, RandomMatrix(rng, 3, 2, 1.0)};
    inst.unknown_nodes = 2;
    for (int j = 0; j < 3; ++j) {
      inst.sources.push_back(RandomGraph(rng, size(rng), 3, 0.5));
      inst.targets.push_back(RandomGraph(rng, size(rng), 3, 0.5));
      inst.anchors.push_back(AnchorChoice::Sample(inst.targets.back(), rng()));
      inst.trigger_topologies.push_back(j == 0 ? TriggerGraph::CompleteEdges(2) : std::vector<Edge>{});
    }
    const LsqSolution sol = LeastSquaresOracle(inst);
    const Matrix gd = LsqGradientDescent(inst, Matrix::Zero(2, 3), 50000, 1.0 / sol.max_curvature);
    const double gd_obj = LsqObjective(inst, gd);
    lsq.push_back({{"problem", problem == LsqProblem::kPrompt ? "PROMPT" : "TRIGGER"},
                   {"objective", sol.objective},
                   {"direct_objective", LsqObjective(inst, sol.features)},
                   {"orthogonality", sol.orthogonality},
                   {"fallback", sol.fallback},
                   {"gd_objective", gd_obj},
                   {"ok", sol.orthogonality < 1e-8 && gd_obj >= sol.objective - 1e-9 && gd_obj - sol.objective < 1e-4}});
  }
  out["least_squares"] = lsq;
  out["proposition_behavior"] = BehaviorDemo(seed);
  out["seed"] = seed;
  return out;
}

}  // namespace gpl
