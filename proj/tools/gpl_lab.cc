// gpl_lab: command-line front end for data generation, pretraining, attacks,
// prompt tuning, evaluation, defense, theory checks, sweeps and plots.
//
// Exit status: 0 success, 2 validation error, 3 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "gpl/config.h"
#include "gpl/digest.h"
#include "gpl/errors.h"
#include "gpl/io.h"
#include "gpl/pipeline.h"
#include "gpl/plot.h"
#include "gpl/theory.h"

namespace fs = std::filesystem;

namespace gpl {
namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

// Raised for failures after inputs were accepted.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string config;
  std::vector<std::string> overrides;
  long long seed = -1;
  std::string out;
  std::string split;
};

void AddCommon(CLI::App* cmd, CommonArgs* a, bool with_split = true) {
  cmd->add_option("--config", a->config, "INI config; desk defaults when omitted")->check(CLI::ExistingFile);
  cmd->add_option("--set", a->overrides, "override, e.g. --set attack.rounds=20 (repeatable)");
  cmd->add_option("--seed", a->seed, "root seed (overrides experiment.seed)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", a->out, "output directory (default: $GPL_LAB_OUT, else ./gpl_lab_out)");
  if (with_split) cmd->add_option("--split", a->split, "split manifest from gen-data; rebuilt from config when omitted")
      ->check(CLI::ExistingFile);
}

ExperimentConfig ResolveConfig(const CommonArgs& a) {
  ExperimentConfig cfg = a.config.empty() ? DeskDefaults() : LoadExperimentConfig(a.config);
  for (const std::string& o : a.overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw ValidationError("--set expects section.key=value, got '" + o + "'");
    }
    const std::string text = "[" + o.substr(0, dot) + "]\n" + o.substr(dot + 1, eq - dot - 1) + " = " + o.substr(eq + 1) + "\n";
    IniDocument doc = ParseIni(text, "--set");
    ApplyIni(doc, &cfg, "--set " + o);
  }
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  cfg.Validate();
  return cfg;
}

std::string OutDir(const CommonArgs& a) {
  std::string dir = a.out;
  if (dir.empty()) {
    const char* env = std::getenv("GPL_LAB_OUT");
    dir = env != nullptr && *env != '\0' ? env : "gpl_lab_out";
  }
  fs::create_directories(dir);
  return dir;
}

std::string Path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

ScenarioSplit ResolveSplit(const CommonArgs& a, const ExperimentConfig& cfg) {
  return a.split.empty() ? BuildSplit(cfg) : LoadSplit(a.split);
}

Checkpoint Tagged(Checkpoint ckpt, const std::string& hash) {
  ckpt.meta.emplace_back("config_hash", hash);
  return ckpt;
}

EncoderParams CleanEncoder(const std::string& path, const ScenarioSplit& split, const PipelineConfig& derived) {
  if (!path.empty()) return EncoderFromCheckpoint(LoadCheckpoint(path));
  return TrainCleanEncoder(split.pretrain, derived.pretrain, derived.objective).params;
}

void WriteJson(const std::string& path, const nlohmann::json& j) { WriteTextFile(path, j.dump(2) + "\n"); }

void WriteConfigIni(const std::string& path, const ExperimentConfig& cfg) {
  WriteTextFile(path, "# config_hash=" + ExperimentHash(cfg) + "\n" + ToIni(cfg));
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ValidationError("empty list '" + s + "'");
  return out;
}

std::vector<int> IntList(const std::string& s) {
  std::vector<int> out;
  for (const std::string& item : SplitList(s)) out.push_back(static_cast<int>(ParseInt(item, "list", 1)));
  return out;
}

// ---- subcommands ----------------------------------------------------------

int GenData(const CommonArgs& a) {
  const ExperimentConfig cfg = ResolveConfig(a);
  const std::string dir = OutDir(a);
  const ScenarioSplit split = BuildSplit(cfg);
  const std::string manifest = SaveSplit(split, Path(dir, "split"));
  WriteConfigIni(Path(dir, "config.ini"), cfg);
  std::cout << manifest << "\n";
  return 0;
}

int Pretrain(const CommonArgs& a) {
  const ExperimentConfig cfg = ResolveConfig(a);
  const std::string dir = OutDir(a), hash = ExperimentHash(cfg);
  const ScenarioSplit split = ResolveSplit(a, cfg);
  const PipelineConfig derived = WithDerivedSeeds(PipelineFor(cfg));
  const PretrainResult result = TrainCleanEncoder(split.pretrain, derived.pretrain, derived.objective);
  SaveCheckpoint(Path(dir, "clean_encoder.ckpt"), Tagged(EncoderToCheckpoint(result.params), hash));
  WriteLossCsv(Path(dir, "pretrain_loss.csv"), result.epoch_losses, hash);
  std::cout << "pretrain loss " << FormatDouble(result.eval_before) << " -> " << FormatDouble(result.eval_after) << "\n";
  return 0;
}

int Attack(const CommonArgs& a, const std::string& encoder) {
  const ExperimentConfig cfg = ResolveConfig(a);
  const std::string dir = OutDir(a), hash = ExperimentHash(cfg);
  const ScenarioSplit split = ResolveSplit(a, cfg);
  const PipelineConfig derived = WithDerivedSeeds(PipelineFor(cfg));
  const EncoderParams clean = CleanEncoder(encoder, split, derived);
  AttackState state;
  switch (derived.attack) {
    case AttackKind::kNone:
      state = NoAttackState(split.pretrain, clean, derived.attack_cfg);
      break;
    case AttackKind::kCrossBA:
      state = RunCrossbaFrom(split.pretrain, clean, derived.attack_cfg);
      break;
    default:
      state = RunGcbaFrom(split.pretrain, clean, derived.attack_cfg, derived.attack);
  }
  SaveCheckpoint(Path(dir, "attack_state.ckpt"), Tagged(AttackStateToCheckpoint(state), hash));
  WriteTraceCsv(Path(dir, "attack_trace.csv"), state.trace, hash);
  if (!state.trace.empty()) {
    std::cout << "L_bdk " << FormatDouble(state.trace.front().l_bdk) << " -> " << FormatDouble(state.trace.back().l_bdk)
              << "\n";
  }
  return 0;
}

int PromptTune(const CommonArgs& a, const std::string& encoder) {
  const ExperimentConfig cfg = ResolveConfig(a);
  const std::string dir = OutDir(a), hash = ExperimentHash(cfg);
  const ScenarioSplit split = ResolveSplit(a, cfg);
  const PipelineConfig derived = WithDerivedSeeds(PipelineFor(cfg));
  const EncoderParams enc = CleanEncoder(encoder, split, derived);
  const FewShot fs =
      SplitFewShot(split.downstream, split.num_classes, derived.shots_per_class, DeriveSeed(derived.seed, "fewshot"));
  const PromptState ps = FewShotTune(enc, fs.shots, split.num_classes, derived.prompt);
  SaveCheckpoint(Path(dir, "prompt_state.ckpt"), Tagged(PromptStateToCheckpoint(ps), hash));
  long hits = 0;
  for (const LabeledSample& s : fs.test) hits += Predict(enc, s.graph, ps, derived.prompt.readout) == s.label;
  const nlohmann::json j = {{"config_hash", hash},
                            {"gpl", VariantName(derived.prompt.variant)},
                            {"seed", cfg.seed},
                            {"test_size", fs.test.size()},
                            {"acc", fs.test.empty() ? 0.0 : static_cast<double>(hits) / fs.test.size()},
                            {"final_loss", ps.losses.empty() ? 0.0 : ps.losses.back()}};
  WriteJson(Path(dir, "prompt_metrics.json"), j);
  std::cout << j.dump() << "\n";
  return 0;
}

struct EvalArgs {
  std::string encoder;
  std::string attack_state;
};

MetricsReport Evaluate(const CommonArgs& a, const EvalArgs& e, ExperimentConfig cfg, const std::string& dir,
                       PipelineArtifacts* artifacts) {
  const ScenarioSplit split = ResolveSplit(a, cfg);
  const PipelineConfig pc = PipelineFor(cfg);
  std::optional<EncoderParams> clean;
  std::optional<AttackState> attack;
  if (!e.encoder.empty()) clean = EncoderFromCheckpoint(LoadCheckpoint(e.encoder));
  if (!e.attack_state.empty()) {
    attack = AttackStateFromCheckpoint(LoadCheckpoint(e.attack_state));
    if (!clean) clean = attack->clean;
  }
  MetricsReport report = RunPipeline(split, pc, PipelineInputs{clean ? &*clean : nullptr, attack ? &*attack : nullptr},
                                     artifacts);
  report.config_hash = ExperimentHash(cfg);
  WriteReportJson(Path(dir, "metrics.json"), report);
  AppendReportCsv(Path(dir, "results.csv"), report);
  std::cout << ReportToJson(report).dump() << "\n";
  if (report.status != "ok") throw RuntimeFailure("pipeline failed: " + report.error);
  return report;
}

int EvaluateCmd(const CommonArgs& a, const EvalArgs& e) {
  const ExperimentConfig cfg = ResolveConfig(a);
  Evaluate(a, e, cfg, OutDir(a), nullptr);
  return 0;
}

int Defend(const CommonArgs& a, const EvalArgs& e, const std::string& graph_path) {
  ExperimentConfig cfg = ResolveConfig(a);
  const std::string dir = OutDir(a);
  if (!graph_path.empty()) {
    const Graph g = LoadGraph(graph_path);
    const PruneResult r = PruneG(g, cfg.pipeline.prune);
    SaveGraph(Path(dir, "pruned_graph.txt"), r.graph);
    const nlohmann::json j = {{"config_hash", ExperimentHash(cfg)},
                              {"threshold", cfg.pipeline.prune.threshold},
                              {"input_nodes", g.num_nodes()},
                              {"input_edges", g.num_edges()},
                              {"kept_nodes", r.graph.num_nodes()},
                              {"kept_edges", r.graph.num_edges()},
                              {"edges_cut", r.edges_cut},
                              {"kept", r.kept}};
    WriteJson(Path(dir, "defend.json"), j);
    std::cout << j.dump() << "\n";
    return 0;
  }
  cfg.pipeline.defense = true;
  PipelineArtifacts artifacts;
  const MetricsReport report = Evaluate(a, e, cfg, dir, &artifacts);
  WriteProfileCsv(Path(dir, "similarity_profile.csv"), artifacts.profile, report.config_hash);
  return 0;
}

int TheoryCheck(std::uint64_t seed, const std::string& dir) {
  nlohmann::json j = RunTheoryChecks(seed);
  j["config_hash"] = ShortHash("theory-check seed=" + std::to_string(seed));
  WriteJson(Path(dir, "theory.json"), j);
  std::cout << Path(dir, "theory.json") << "\n";
  return 0;
}

struct SweepArgs {
  std::string scenarios;
  std::string attacks = "CROSSBA,GCBA_R,GCBA_M";
  std::string gpl;
  int seeds = 5;
  std::string trigger_nodes;
  std::string tokens;
  std::string defense = "off";
  int jobs = 1;
};

struct SweepCell {
  Scenario scenario;
  AttackKind attack;
  PromptVariant gpl;
  bool defense;
  int trigger_nodes;
  int tokens;
  std::uint64_t seed;
};

template <typename Fn>
void ParallelFor(size_t n, int jobs, Fn fn) {
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::mutex err_mu;
  std::exception_ptr err;
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

int Sweep(const CommonArgs& a, const SweepArgs& s) {
  const ExperimentConfig base = ResolveConfig(a);
  const std::string dir = OutDir(a);
  if (s.seeds < 1) throw ValidationError("--seeds must be positive");
  if (s.jobs < 1) throw ValidationError("--jobs must be positive");
  std::vector<Scenario> scenarios;
  for (const auto& x : s.scenarios.empty() ? std::vector<std::string>{ScenarioName(base.scenario)} : SplitList(s.scenarios)) {
    scenarios.push_back(ParseScenario(x));
  }
  std::vector<AttackKind> attacks;
  for (const auto& x : SplitList(s.attacks)) attacks.push_back(ParseAttack(x));
  std::vector<PromptVariant> gpls;
  for (const auto& x : s.gpl.empty() ? std::vector<std::string>{VariantName(base.pipeline.prompt.variant)} : SplitList(s.gpl)) {
    gpls.push_back(ParseVariant(x));
  }
  const std::vector<int> trig = s.trigger_nodes.empty() ? std::vector<int>{base.pipeline.attack_cfg.trigger_nodes}
                                                        : IntList(s.trigger_nodes);
  const std::vector<int> toks = s.tokens.empty() ? std::vector<int>{base.pipeline.prompt.num_tokens} : IntList(s.tokens);
  std::vector<bool> defenses;
  if (s.defense == "on") {
    defenses = {true};
  } else if (s.defense == "off") {
    defenses = {false};
  } else if (s.defense == "both") {
    defenses = {false, true};
  } else {
    throw ValidationError("--defense expects on, off or both");
  }

  // Stage 1: one split and clean encoder per (scenario, seed).
  struct Prepared {
    ExperimentConfig cfg;
    ScenarioSplit split;
    EncoderParams clean;
  };
  std::vector<std::pair<Scenario, std::uint64_t>> keys;
  for (Scenario sc : scenarios) {
    for (int i = 0; i < s.seeds; ++i) keys.emplace_back(sc, base.seed + static_cast<std::uint64_t>(i));
  }
  std::vector<std::optional<Prepared>> prepared(keys.size());
  ParallelFor(keys.size(), s.jobs, [&](size_t i) {
    ExperimentConfig cfg = base;
    cfg.scenario = keys[i].first;
    cfg.seed = keys[i].second;
    ScenarioSplit split = BuildSplit(cfg);
    const PipelineConfig derived = WithDerivedSeeds(PipelineFor(cfg));
    EncoderParams clean = TrainCleanEncoder(split.pretrain, derived.pretrain, derived.objective).params;
    prepared[i] = Prepared{cfg, std::move(split), std::move(clean)};
  });

  // Stage 2: every grid cell; results land in grid order.
  std::vector<std::pair<size_t, SweepCell>> cells;
  for (size_t k = 0; k < keys.size(); ++k) {
    for (PromptVariant g : gpls) {
      for (AttackKind at : attacks) {
        for (bool d : defenses) {
          for (int t : trig) {
            for (int tk : toks) cells.push_back({k, SweepCell{keys[k].first, at, g, d, t, tk, keys[k].second}});
          }
        }
      }
    }
  }
  std::vector<MetricsReport> reports(cells.size());
  ParallelFor(cells.size(), s.jobs, [&](size_t i) {
    const auto& [k, c] = cells[i];
    ExperimentConfig cfg = prepared[k]->cfg;
    cfg.pipeline.attack = c.attack;
    cfg.pipeline.prompt.variant = c.gpl;
    cfg.pipeline.defense = c.defense;
    cfg.pipeline.attack_cfg.trigger_nodes = c.trigger_nodes;
    cfg.pipeline.prompt.num_tokens = c.tokens;
    reports[i] = RunPipeline(prepared[k]->split, PipelineFor(cfg), &prepared[k]->clean);
    reports[i].config_hash = ExperimentHash(cfg);
  });

  const std::string sweep_hash = ShortHash(ExperimentCanonicalText(base) + "sweep " + s.scenarios + "|" + s.attacks +
                                           "|" + s.gpl + "|" + std::to_string(s.seeds) + "|" + s.trigger_nodes + "|" +
                                           s.tokens + "|" + s.defense);
  std::ostringstream csv;
  csv << "# config_hash=" << sweep_hash << "\n";
  csv << "Scenario,GPL,Attack,Defense,TriggerNodes,Tokens,Seed,ACC,AD,ASR,SimGap,status,config_hash\n";
  nlohmann::json rows = nlohmann::json::array();
  int failed = 0;
  for (size_t i = 0; i < cells.size(); ++i) {
    const SweepCell& c = cells[i].second;
    const MetricsReport& r = reports[i];
    failed += r.status != "ok";
    csv << r.scenario << "," << r.gpl << "," << r.attack << "," << (r.defense ? "on" : "off") << "," << c.trigger_nodes
        << "," << c.tokens << "," << r.seed << "," << FormatDouble(r.Acc()) << "," << FormatDouble(r.Ad()) << ","
        << FormatDouble(r.Asr()) << "," << FormatDouble(r.similarity.Gap()) << "," << r.status << "," << r.config_hash
        << "\n";
    nlohmann::json j = ReportToJson(r);
    j["trigger_nodes"] = c.trigger_nodes;
    j["tokens"] = c.tokens;
    rows.push_back(j);
  }
  WriteTextFile(Path(dir, "sweep.csv"), csv.str());
  WriteJson(Path(dir, "sweep.json"), {{"config_hash", sweep_hash}, {"rows", rows}});
  std::cout << csv.str();
  if (failed > 0) throw RuntimeFailure(std::to_string(failed) + " sweep cell(s) failed; see sweep.json");
  return 0;
}

int Plot(const CommonArgs& a, const std::string& input, std::string kind, std::string x_col, const std::string& name) {
  const std::string dir = OutDir(a);
  const CsvTable t = ReadCsv(input);
  std::string hash;
  {
    std::ifstream in(input);
    std::string first;
    std::getline(in, first);
    const std::string tag = "# config_hash=";
    if (first.rfind(tag, 0) == 0) hash = first.substr(tag.size());
  }
  if (kind.empty()) kind = std::count(t.header.begin(), t.header.end(), "is_trigger") ? "density" : "sweep";
  std::vector<Series> series;
  ChartSpec spec;
  spec.config_hash = hash;
  std::ostringstream data;
  data << "# config_hash=" << hash << "\n";
  if (kind == "density") {
    const int sim = t.Column("similarity"), trig = t.Column("is_trigger");
    std::vector<double> clean, trigger;
    for (const auto& row : t.rows) {
      const double v = ParseDouble(row[sim], input, 0);
      (row[trig] == "1" || row[trig] == "true" ? trigger : clean).push_back(v);
    }
    series = {DensityHistogram("clean edges", clean, -1.0, 1.0, 40),
              DensityHistogram("trigger edges", trigger, -1.0, 1.0, 40)};
    spec.title = "Edge endpoint similarity";
    spec.x_label = "cosine similarity";
    spec.y_label = "density";
    data << "bin_center,clean_density,trigger_density\n";
    for (size_t i = 0; i < series[0].x.size(); ++i) {
      data << FormatDouble(series[0].x[i]) << "," << FormatDouble(series[0].y[i]) << "," << FormatDouble(series[1].y[i])
           << "\n";
    }
  } else if (kind == "sweep") {
    const int attack = t.Column("Attack"), asr = t.Column("ASR");
    if (x_col.empty()) {
      for (const char* cand : {"TriggerNodes", "Tokens"}) {
        const int c = t.Column(cand);
        std::set<std::string> vals;
        for (const auto& row : t.rows) vals.insert(row[c]);
        if (vals.size() > 1) {
          x_col = cand;
          break;
        }
      }
      if (x_col.empty()) x_col = "TriggerNodes";
    }
    const int xc = t.Column(x_col);
    std::map<std::string, std::map<double, std::pair<double, int>>> agg;
    for (const auto& row : t.rows) {
      auto& cell = agg[row[attack]][ParseDouble(row[xc], input, 0)];
      cell.first += ParseDouble(row[asr], input, 0);
      cell.second += 1;
    }
    data << "Attack," << x_col << ",mean_ASR,n\n";
    for (const auto& [att, points] : agg) {
      Series sr;
      sr.name = att;
      for (const auto& [x, sum] : points) {
        sr.x.push_back(x);
        sr.y.push_back(sum.first / sum.second);
        data << att << "," << FormatDouble(x) << "," << FormatDouble(sum.first / sum.second) << "," << sum.second << "\n";
      }
      series.push_back(sr);
    }
    spec.title = "ASR vs " + x_col;
    spec.x_label = x_col;
    spec.y_label = "mean ASR";
  } else {
    throw ValidationError("--kind expects density or sweep");
  }
  const std::string stem = name.empty() ? kind : name;
  WriteTextFile(Path(dir, stem + ".svg"), LineChartSvg(series, spec));
  WriteTextFile(Path(dir, stem + ".csv"), data.str());
  std::cout << Path(dir, stem + ".svg") << "\n";
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Cross-context backdoor attacks on graph prompt learning: experiments and checks"};
  app.require_subcommand(1);

  CommonArgs common;
  EvalArgs eval;
  std::string encoder, graph_path, plot_input, plot_kind, plot_x, plot_name;
  long long theory_seed = 0;
  std::string theory_out;
  SweepArgs sweep;

  auto* gen = app.add_subcommand("gen-data", "generate synthetic masters and write the scenario split");
  AddCommon(gen, &common, false);
  auto* pre = app.add_subcommand("pretrain", "train the clean encoder");
  AddCommon(pre, &common);
  auto* atk = app.add_subcommand("attack", "run the configured attack from a clean encoder");
  AddCommon(atk, &common);
  atk->add_option("--encoder", encoder, "clean encoder checkpoint; trained when omitted")->check(CLI::ExistingFile);
  auto* pt = app.add_subcommand("prompt-tune", "few-shot prompt tuning on a frozen encoder");
  AddCommon(pt, &common);
  pt->add_option("--encoder", encoder, "encoder checkpoint; clean encoder trained when omitted")->check(CLI::ExistingFile);
  auto* ev = app.add_subcommand("evaluate", "full pipeline; writes metrics.json and appends results.csv");
  AddCommon(ev, &common);
  for (auto* cmd : {ev}) {
    cmd->add_option("--encoder", eval.encoder, "clean encoder checkpoint")->check(CLI::ExistingFile);
    cmd->add_option("--attack-state", eval.attack_state, "attack state checkpoint")->check(CLI::ExistingFile);
  }
  auto* df = app.add_subcommand("defend", "PruneG: one graph with --graph, else the pipeline with defense on");
  AddCommon(df, &common);
  df->add_option("--graph", graph_path, "graph file to prune")->check(CLI::ExistingFile);
  df->add_option("--encoder", eval.encoder, "clean encoder checkpoint")->check(CLI::ExistingFile);
  df->add_option("--attack-state", eval.attack_state, "attack state checkpoint")->check(CLI::ExistingFile);
  auto* th = app.add_subcommand("theory-check", "linear-GIN identities, kernel distance, least-squares oracles");
  th->add_option("--seed", theory_seed, "seed")->check(CLI::NonNegativeNumber);
  th->add_option("--out", common.out, "output directory");
  auto* sw = app.add_subcommand("sweep", "grid over scenario x attack x GPL x seed (x trigger nodes x tokens)");
  AddCommon(sw, &common, false);
  sw->add_option("--scenarios", sweep.scenarios, "comma list; default from config");
  sw->add_option("--attacks", sweep.attacks, "comma list")->capture_default_str();
  sw->add_option("--gpl", sweep.gpl, "comma list of PROG, GRAPHPROMPT; default from config");
  sw->add_option("--seeds", sweep.seeds, "number of seeds, starting at the root seed")->capture_default_str();
  sw->add_option("--trigger-nodes", sweep.trigger_nodes, "comma list of trigger sizes");
  sw->add_option("--tokens", sweep.tokens, "comma list of prompt token counts");
  sw->add_option("--defense", sweep.defense, "on, off or both")->capture_default_str();
  sw->add_option("--jobs", sweep.jobs, "worker threads")->capture_default_str();
  auto* pl = app.add_subcommand("plot", "SVG plus aggregated CSV from a similarity profile or sweep CSV");
  pl->add_option("--input", plot_input, "similarity_profile.csv or sweep.csv")->required()->check(CLI::ExistingFile);
  pl->add_option("--kind", plot_kind, "density or sweep; inferred from the header when omitted");
  pl->add_option("--x", plot_x, "sweep x column: TriggerNodes or Tokens");
  pl->add_option("--name", plot_name, "output file stem");
  pl->add_option("--out", common.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (gen->parsed()) return GenData(common);
    if (pre->parsed()) return Pretrain(common);
    if (atk->parsed()) return Attack(common, encoder);
    if (pt->parsed()) return PromptTune(common, encoder);
    if (ev->parsed()) return EvaluateCmd(common, eval);
    if (df->parsed()) return Defend(common, eval, graph_path);
    if (th->parsed()) return TheoryCheck(static_cast<std::uint64_t>(theory_seed), OutDir(common));
    if (sw->parsed()) return Sweep(common, sweep);
    if (pl->parsed()) return Plot(common, plot_input, plot_kind, plot_x, plot_name);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace
}  // namespace gpl

int main(int argc, char** argv) { return gpl::Main(argc, argv); }
