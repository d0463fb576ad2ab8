#include "gpl/pipeline.h"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gpl/digest.h"
#include "gpl/errors.h"
#include "gpl/io.h"

namespace gpl {

void PipelineConfig::Validate() const {
  pretrain.Validate();
  attack_cfg.Validate();
  prompt.Validate();
  prune.Validate();
  if (shots_per_class < 1) throw InvalidArgument("pipeline: shots_per_class must be >= 1");
}

PipelineConfig WithDerivedSeeds(const PipelineConfig& cfg) {
  PipelineConfig out = cfg;
  out.pretrain.seed = DeriveSeed(cfg.seed, "pretrain");
  out.attack_cfg.seed = DeriveSeed(cfg.seed, "attack");
  out.prompt.seed = DeriveSeed(cfg.seed, "prompt");
  return out;
}

namespace {

std::string Bool(bool b) { return b ? "true" : "false"; }

std::map<std::string, std::string> PretrainFields(const PretrainConfig& p) {
  return {{"pretrain.arch", ArchitectureName(p.arch)},
          {"pretrain.hidden_dim", std::to_string(p.hidden_dim)},
          {"pretrain.num_layers", std::to_string(p.num_layers)},
          {"pretrain.readout", ReadoutName(p.readout)},
          {"pretrain.temperature", FormatDouble(p.temperature)},
          {"pretrain.flip_prob", FormatDouble(p.flip_prob)},
          {"pretrain.epochs", std::to_string(p.epochs)},
          {"pretrain.lr", FormatDouble(p.lr)},
          {"pretrain.batch_size", std::to_string(p.batch_size)},
          {"pretrain.optimizer", OptimizerName(p.optimizer)},
          {"pretrain.seed", std::to_string(p.seed)}};
}

std::string Join(const std::map<std::string, std::string>& fields) {
  std::string out;
  for (const auto& [k, v] : fields) out += k + "=" + v + "\n";
  return out;
}

}  // namespace

std::string CanonicalText(const PipelineConfig& cfg) {
  std::map<std::string, std::string> f = PretrainFields(cfg.pretrain);
  const AttackConfig& a = cfg.attack_cfg;
  const PromptConfig& p = cfg.prompt;
  f.insert({{"pretrain.objective", ObjectiveName(cfg.objective)},
            {"attack.kind", AttackName(cfg.attack)},
            {"attack.alpha", FormatDouble(a.alpha)},
            {"attack.beta", FormatDouble(a.beta)},
            {"attack.lambda", FormatDouble(a.lambda)},
            {"attack.tau", FormatDouble(a.tau)},
            {"attack.gamma_t", FormatDouble(a.gamma_t)},
            {"attack.gamma_g", FormatDouble(a.gamma_g)},
            {"attack.rounds", std::to_string(a.rounds)},
            {"attack.trigger_nodes", std::to_string(a.trigger_nodes)},
            {"attack.trigger_steps", std::to_string(a.trigger_steps)},
            {"attack.encoder_steps", std::to_string(a.encoder_steps)},
            {"attack.include_clr", Bool(a.include_clr)},
            {"attack.optimizer", OptimizerName(a.optimizer)},
            {"attack.readout", ReadoutName(a.readout)},
            {"attack.init_noise", FormatDouble(a.init_noise)},
            {"attack.gcba_gamma_t", FormatDouble(a.gcba_gamma_t)},
            {"attack.gcba_gamma_g", FormatDouble(a.gcba_gamma_g)},
            {"attack.gcba_clusters", std::to_string(a.gcba_clusters)},
            {"attack.clr_trace_batch", std::to_string(a.clr_trace_batch)},
            {"attack.seed", std::to_string(a.seed)},
            {"prompt.variant", VariantName(p.variant)},
            {"prompt.num_tokens", std::to_string(p.num_tokens)},
            {"prompt.link_mode", p.link.mode == LinkMode::kFull ? "FULL" : "SIMILARITY"},
            {"prompt.link_k", std::to_string(p.link.k)},
            {"prompt.token_scale", FormatDouble(p.token_scale)},
            {"prompt.proto_temperature", FormatDouble(p.proto_temperature)},
            {"prompt.epochs", std::to_string(p.epochs)},
            {"prompt.lr", FormatDouble(p.lr)},
            {"prompt.optimizer", OptimizerName(p.optimizer)},
            {"prompt.readout", ReadoutName(p.readout)},
            {"prompt.seed", std::to_string(p.seed)},
            {"defense.enabled", Bool(cfg.defense)},
            {"defense.threshold", FormatDouble(cfg.prune.threshold)},
            {"run.shots_per_class", std::to_string(cfg.shots_per_class)},
            {"run.seed", std::to_string(cfg.seed)}});
  return Join(f);
}

std::string ConfigHash(const PipelineConfig& cfg) { return ShortHash(CanonicalText(cfg)); }

EncoderParams PretrainCached(const std::vector<Graph>& corpus, const PretrainConfig& cfg,
                             PretrainObjective objective, const std::string& cache_dir) {
  if (cache_dir.empty()) return TrainCleanEncoder(corpus, cfg, objective).params;
  std::ostringstream corpus_text;
  for (const Graph& g : corpus) WriteGraph(corpus_text, g);
  std::map<std::string, std::string> fields = PretrainFields(cfg);
  fields["pretrain.objective"] = ObjectiveName(objective);
  const std::string key = ShortHash(Join(fields) + ShortHash(corpus_text.str()));
  const std::filesystem::path path = std::filesystem::path(cache_dir) / ("clean_" + key + ".ckpt");
  if (std::filesystem::exists(path)) return EncoderFromCheckpoint(LoadCheckpoint(path.string()));
  EncoderParams params = TrainCleanEncoder(corpus, cfg, objective).params;
  std::filesystem::create_directories(cache_dir);
  // Write-then-rename so concurrent runs never read a partial file.
  const std::string tmp = path.string() + ".tmp" + std::to_string(::getpid());
  SaveCheckpoint(tmp, EncoderToCheckpoint(params));
  std::filesystem::rename(tmp, path);
  return params;
}

namespace {

void RunInto(const ScenarioSplit& split, const PipelineConfig& cfg, const PipelineInputs& in,
             MetricsReport& report, PipelineArtifacts* out) {
  const EncoderParams clean =
      in.clean != nullptr ? *in.clean : TrainCleanEncoder(split.pretrain, cfg.pretrain, cfg.objective).params;
  if (out != nullptr) out->clean = clean;

  AttackState state;
  if (in.attack != nullptr) {
    if (in.attack->kind != cfg.attack) {
      throw InvalidArgument("run_pipeline: supplied attack state is " + AttackName(in.attack->kind) +
                            ", config asks for " + AttackName(cfg.attack));
    }
    state = *in.attack;
  } else switch (cfg.attack) {
    case AttackKind::kNone:
      state = NoAttackState(split.pretrain, clean, cfg.attack_cfg);
      break;
    case AttackKind::kCrossBA:
      state = RunCrossbaFrom(split.pretrain, clean, cfg.attack_cfg);
      break;
    case AttackKind::kGcbaR:
    case AttackKind::kGcbaM:
      state = RunGcbaFrom(split.pretrain, clean, cfg.attack_cfg, cfg.attack);
      break;
  }

  FewShot fs = SplitFewShot(split.downstream, split.num_classes, cfg.shots_per_class, DeriveSeed(cfg.seed, "fewshot"));
  std::vector<Graph> backdoored_test;
  std::vector<TaggedGraph> tagged;
  for (size_t i = 0; i < fs.test.size(); ++i) {
    const Graph& g = fs.test[i].graph;
    const AnchorChoice anchor = AnchorChoice::Sample(g, DeriveSeed(cfg.seed, "eval_anchor/" + std::to_string(i)));
    backdoored_test.push_back(AttachTrigger(g, state.trigger, anchor));
    tagged.push_back({backdoored_test.back(), g.num_nodes()});
  }
  if (out != nullptr) out->attack = state;
  std::vector<EdgeSimilarity> profile = EdgeSimilarityProfile(tagged);
  report.similarity = SummarizeProfile(profile);
  if (out != nullptr) out->profile = std::move(profile);

  if (cfg.defense) {
    for (LabeledSample& s : fs.shots) s.graph = PruneG(s.graph, cfg.prune).graph;
    long cut = 0, total = 0;
    for (LabeledSample& s : fs.test) {
      total += s.graph.num_edges();
      PruneResult r = PruneG(s.graph, cfg.prune);
      cut += s.graph.num_edges() - r.graph.num_edges();
      s.graph = std::move(r.graph);
    }
    report.clean_edges_cut = total ? static_cast<double>(cut) / static_cast<double>(total) : 0.0;
    for (size_t i = 0; i < backdoored_test.size(); ++i) {
      PruneResult r = PruneG(backdoored_test[i], cfg.prune);
      const int host = tagged[i].num_host_nodes;
      bool all = true;
      for (int t = host; t < backdoored_test[i].num_nodes(); ++t) all = all && r.new_id[t] >= 0;
      report.triggers_surviving += all;
      backdoored_test[i] = std::move(r.graph);
    }
  } else {
    report.triggers_surviving = static_cast<int>(backdoored_test.size());
  }

  const ReadoutMode readout = cfg.prompt.readout;
  const PromptState bd_prompt = FewShotTune(state.backdoored, fs.shots, split.num_classes, cfg.prompt);
  if (out != nullptr) out->prompt = bd_prompt;
  // The twin differs only in the encoder; with no attack it is the model itself.
  const PromptState clean_prompt =
      cfg.attack == AttackKind::kNone ? bd_prompt : FewShotTune(clean, fs.shots, split.num_classes, cfg.prompt);
  const AccAd acc = ComputeAccAd(state.backdoored, bd_prompt, clean, clean_prompt, fs.test, readout);
  report.acc = acc.acc;
  report.clean_acc = acc.clean_acc;
  report.ad_hits = acc.ad_hits;
  report.target_class = ResolveTargetClass(state.backdoored, state, bd_prompt, readout);
  report.asr = ComputeAsr(state.backdoored, bd_prompt, backdoored_test, report.target_class, readout);
}

}  // namespace

MetricsReport RunPipeline(const ScenarioSplit& split, const PipelineConfig& cfg, const EncoderParams* clean) {
  return RunPipeline(split, cfg, PipelineInputs{clean, nullptr}, nullptr);
}

MetricsReport RunPipeline(const ScenarioSplit& split, const PipelineConfig& cfg_in, const PipelineInputs& inputs,
                          PipelineArtifacts* artifacts) {
  cfg_in.Validate();
  const PipelineConfig cfg = WithDerivedSeeds(cfg_in);
  MetricsReport report;
  report.scenario = ScenarioName(split.scenario);
  report.gpl = VariantName(cfg.prompt.variant);
  report.model = ArchitectureName(cfg.pretrain.arch);
  report.attack = AttackName(cfg.attack);
  report.defense = cfg.defense;
  report.seed = cfg.seed;
  report.config_hash = ConfigHash(cfg);
  report.num_classes = split.num_classes;
  try {
    RunInto(split, cfg, inputs, report, artifacts);
  } catch (const std::exception& e) {
    report.status = "failed";
    report.error = e.what();
  }
  return report;
}

nlohmann::json ReportToJson(const MetricsReport& r) {
  nlohmann::json j;
  j["status"] = r.status;
  if (!r.error.empty()) j["error"] = r.error;
  j["scenario"] = r.scenario;
  j["gpl"] = r.gpl;
  j["model"] = r.model;
  j["attack"] = r.attack;
  j["defense"] = r.defense;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["num_classes"] = r.num_classes;
  j["target_class"] = r.target_class;
  j["acc"] = r.Acc();
  j["ad"] = r.Ad();
  j["asr"] = r.Asr();
  j["counts"] = {{"clean_test", r.acc.total},
                 {"backdoored_test", r.asr.total},
                 {"acc_hits", r.acc.hits},
                 {"clean_acc_hits", r.clean_acc.hits},
                 {"asr_hits", r.asr.hits},
                 {"triggers_surviving", r.triggers_surviving}};
  j["similarity"] = {{"mean_clean_edge", r.similarity.mean_clean},
                     {"mean_trigger_edge", r.similarity.mean_trigger},
                     {"gap", r.similarity.Gap()},
                     {"clean_edges_cut", r.clean_edges_cut}};
  return j;
}

void WriteReportJson(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << ReportToJson(report).dump(2) << "\n";
}

void AppendReportCsv(const std::string& path, const MetricsReport& r) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) throw ValidationError("cannot open " + path);
  ::flock(fd, LOCK_EX);
  struct stat st {};
  ::fstat(fd, &st);
  std::string text;
  if (st.st_size == 0) text += "GPL,Model,Attack,Scenario,Defense,Seed,ACC,AD,ASR,status,config_hash\n";
  text += r.gpl + "," + r.model + "," + r.attack + "," + r.scenario + "," + (r.defense ? "on" : "off") + "," +
          std::to_string(r.seed) + "," + FormatDouble(r.Acc()) + "," + FormatDouble(r.Ad()) + "," +
          FormatDouble(r.Asr()) + "," + r.status + "," + r.config_hash + "\n";
  const bool ok = ::write(fd, text.data(), text.size()) == static_cast<ssize_t>(text.size());
  ::flock(fd, LOCK_UN);
  ::close(fd);
  if (!ok) throw ValidationError("short write to " + path);
}

}  // namespace gpl
