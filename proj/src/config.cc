#include "gpl/config.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "gpl/digest.h"
#include "gpl/errors.h"
#include "gpl/io.h"

namespace gpl {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&, int)> set;
};

template <typename Access>
Field IntField(std::string key, Access access) {
  return {key, [access](const ExperimentConfig& c) { return std::to_string(access(c)); },
          [access](ExperimentConfig& c, const std::string& v, const std::string& src, int line) {
            const long long x = ParseInt(v, src, line);
            if (x < -2147483647LL || x > 2147483647LL) throw ParseError(src, line, "integer out of range: " + v);
            access(c) = static_cast<int>(x);
          }};
}

template <typename Access>
Field DoubleField(std::string key, Access access) {
  return {key, [access](const ExperimentConfig& c) { return FormatDouble(access(c)); },
          [access](ExperimentConfig& c, const std::string& v, const std::string& src, int line) {
            access(c) = ParseDouble(v, src, line);
          }};
}

template <typename Access>
Field BoolField(std::string key, Access access) {
  return {key, [access](const ExperimentConfig& c) { return std::string(access(c) ? "true" : "false"); },
          [access](ExperimentConfig& c, const std::string& v, const std::string& src, int line) {
            if (v == "true" || v == "on" || v == "1") {
              access(c) = true;
            } else if (v == "false" || v == "off" || v == "0") {
              access(c) = false;
            } else {
              throw ParseError(src, line, "expected true/false, got '" + v + "'");
            }
          }};
}

template <typename Access, typename NameFn, typename ParseFn>
Field EnumField(std::string key, Access access, NameFn name, ParseFn parse) {
  return {key, [access, name](const ExperimentConfig& c) { return name(access(c)); },
          [access, parse](ExperimentConfig& c, const std::string& v, const std::string& src, int line) {
            try {
              access(c) = parse(v);
            } catch (const ValidationError& e) {
              throw ParseError(src, line, e.what());
            }
          }};
}

LinkMode ParseLinkMode(const std::string& s) {
  if (s == "FULL") return LinkMode::kFull;
  if (s == "SIMILARITY") return LinkMode::kSimilarity;
  throw InvalidArgument("unknown link mode '" + s + "' (expected FULL or SIMILARITY)");
}
std::string LinkModeName(LinkMode m) { return m == LinkMode::kFull ? "FULL" : "SIMILARITY"; }

#define GPL_ACCESS(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      EnumField("experiment.scenario", GPL_ACCESS(scenario), ScenarioName, ParseScenario),
      {"experiment.seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
       [](ExperimentConfig& c, const std::string& v, const std::string& src, int line) {
         const long long x = ParseInt(v, src, line);
         if (x < 0) throw ParseError(src, line, "seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(x);
       }},
      IntField("experiment.svd_dim", GPL_ACCESS(svd_dim)),
      IntField("synth.num_blocks", GPL_ACCESS(synth.num_blocks)),
      IntField("synth.nodes_per_block", GPL_ACCESS(synth.nodes_per_block)),
      DoubleField("synth.p_intra", GPL_ACCESS(synth.p_intra)),
      DoubleField("synth.p_inter", GPL_ACCESS(synth.p_inter)),
      IntField("synth.feature_dim", GPL_ACCESS(synth.feature_dim)),
      DoubleField("synth.separation", GPL_ACCESS(synth.separation)),
      DoubleField("synth.noise", GPL_ACCESS(synth.noise)),
      DoubleField("synth.base_level", GPL_ACCESS(synth.base_level)),
      IntField("split.k_hops", GPL_ACCESS(split.k_hops)),
      IntField("split.max_nodes", GPL_ACCESS(split.max_nodes)),
      IntField("split.num_parts", GPL_ACCESS(split.num_parts)),
      IntField("split.pretrain_graphs", GPL_ACCESS(split.pretrain_graphs)),
      IntField("split.downstream_graphs", GPL_ACCESS(split.downstream_graphs)),
      EnumField("pretrain.arch", GPL_ACCESS(pipeline.pretrain.arch), ArchitectureName, ParseArchitecture),
      IntField("pretrain.hidden_dim", GPL_ACCESS(pipeline.pretrain.hidden_dim)),
      IntField("pretrain.num_layers", GPL_ACCESS(pipeline.pretrain.num_layers)),
      EnumField("pretrain.readout", GPL_ACCESS(pipeline.pretrain.readout), ReadoutName, ParseReadout),
      DoubleField("pretrain.temperature", GPL_ACCESS(pipeline.pretrain.temperature)),
      DoubleField("pretrain.flip_prob", GPL_ACCESS(pipeline.pretrain.flip_prob)),
      IntField("pretrain.epochs", GPL_ACCESS(pipeline.pretrain.epochs)),
      DoubleField("pretrain.lr", GPL_ACCESS(pipeline.pretrain.lr)),
      IntField("pretrain.batch_size", GPL_ACCESS(pipeline.pretrain.batch_size)),
      EnumField("pretrain.optimizer", GPL_ACCESS(pipeline.pretrain.optimizer), OptimizerName, ParseOptimizer),
      EnumField("pretrain.objective", GPL_ACCESS(pipeline.objective), ObjectiveName, ParseObjective),
      EnumField("attack.kind", GPL_ACCESS(pipeline.attack), AttackName, ParseAttack),
      DoubleField("attack.alpha", GPL_ACCESS(pipeline.attack_cfg.alpha)),
      DoubleField("attack.beta", GPL_ACCESS(pipeline.attack_cfg.beta)),
      DoubleField("attack.lambda", GPL_ACCESS(pipeline.attack_cfg.lambda)),
      DoubleField("attack.tau", GPL_ACCESS(pipeline.attack_cfg.tau)),
      DoubleField("attack.gamma_t", GPL_ACCESS(pipeline.attack_cfg.gamma_t)),
      DoubleField("attack.gamma_g", GPL_ACCESS(pipeline.attack_cfg.gamma_g)),
      IntField("attack.rounds", GPL_ACCESS(pipeline.attack_cfg.rounds)),
      IntField("attack.trigger_nodes", GPL_ACCESS(pipeline.attack_cfg.trigger_nodes)),
      IntField("attack.trigger_steps", GPL_ACCESS(pipeline.attack_cfg.trigger_steps)),
      IntField("attack.encoder_steps", GPL_ACCESS(pipeline.attack_cfg.encoder_steps)),
      BoolField("attack.include_clr", GPL_ACCESS(pipeline.attack_cfg.include_clr)),
      EnumField("attack.optimizer", GPL_ACCESS(pipeline.attack_cfg.optimizer), OptimizerName, ParseOptimizer),
      EnumField("attack.readout", GPL_ACCESS(pipeline.attack_cfg.readout), ReadoutName, ParseReadout),
      DoubleField("attack.init_noise", GPL_ACCESS(pipeline.attack_cfg.init_noise)),
      DoubleField("attack.gcba_gamma_t", GPL_ACCESS(pipeline.attack_cfg.gcba_gamma_t)),
      DoubleField("attack.gcba_gamma_g", GPL_ACCESS(pipeline.attack_cfg.gcba_gamma_g)),
      IntField("attack.gcba_clusters", GPL_ACCESS(pipeline.attack_cfg.gcba_clusters)),
      IntField("attack.clr_trace_batch", GPL_ACCESS(pipeline.attack_cfg.clr_trace_batch)),
      EnumField("prompt.variant", GPL_ACCESS(pipeline.prompt.variant), VariantName, ParseVariant),
      IntField("prompt.num_tokens", GPL_ACCESS(pipeline.prompt.num_tokens)),
      EnumField("prompt.link_mode", GPL_ACCESS(pipeline.prompt.link.mode), LinkModeName, ParseLinkMode),
      IntField("prompt.link_k", GPL_ACCESS(pipeline.prompt.link.k)),
      DoubleField("prompt.token_scale", GPL_ACCESS(pipeline.prompt.token_scale)),
      DoubleField("prompt.proto_temperature", GPL_ACCESS(pipeline.prompt.proto_temperature)),
      IntField("prompt.epochs", GPL_ACCESS(pipeline.prompt.epochs)),
      DoubleField("prompt.lr", GPL_ACCESS(pipeline.prompt.lr)),
      EnumField("prompt.optimizer", GPL_ACCESS(pipeline.prompt.optimizer), OptimizerName, ParseOptimizer),
      EnumField("prompt.readout", GPL_ACCESS(pipeline.prompt.readout), ReadoutName, ParseReadout),
      BoolField("defense.enabled", GPL_ACCESS(pipeline.defense)),
      DoubleField("defense.threshold", GPL_ACCESS(pipeline.prune.threshold)),
      IntField("run.shots_per_class", GPL_ACCESS(pipeline.shots_per_class)),
  };
  return fields;
}

#undef GPL_ACCESS

}  // namespace

IniDocument ParseIni(const std::string& text, const std::string& source) {
  IniDocument doc;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string s = Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ParseError(source, line, "malformed section header '" + s + "'");
      section = Trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(source, line, "expected 'key = value', got '" + s + "'");
    if (section.empty()) throw ParseError(source, line, "key outside of any [section]");
    const std::string key = Trim(s.substr(0, eq));
    const std::string value = Trim(s.substr(eq + 1));
    if (key.empty()) throw ParseError(source, line, "empty key");
    const std::string full = section + "." + key;
    if (doc.entries.count(full)) throw ParseError(source, line, "duplicate key '" + full + "'");
    doc.entries[full] = {value, line};
  }
  return doc;
}

void ExperimentConfig::Validate() const {
  synth.Validate();
  if (svd_dim < 0) throw InvalidArgument("experiment: svd_dim must be non-negative");
  if (svd_dim > synth.feature_dim) throw InvalidArgument("experiment: svd_dim exceeds feature_dim");
  if (split.k_hops < 0 || split.max_nodes < 0 || split.num_parts < 2 || split.pretrain_graphs < 0 ||
      split.downstream_graphs < 0) {
    throw InvalidArgument("split: k_hops, max_nodes and graph counts must be non-negative, num_parts >= 2");
  }
  pipeline.Validate();
}

ExperimentConfig DeskDefaults() {
  ExperimentConfig c;
  c.synth.num_blocks = 6;
  c.synth.nodes_per_block = 40;
  c.synth.p_intra = 0.08;
  c.synth.p_inter = 0.005;
  c.synth.feature_dim = 16;
  c.synth.separation = 1.0;
  c.synth.noise = 0.4;
  c.synth.base_level = 1.0;
  c.split.k_hops = 2;
  c.split.max_nodes = 20;
  c.split.num_parts = 6;
  c.split.pretrain_graphs = 60;
  c.split.downstream_graphs = 200;
  PipelineConfig& p = c.pipeline;
  p.pretrain.arch = Architecture::kAttention;
  p.pretrain.hidden_dim = 32;
  p.pretrain.num_layers = 2;
  p.pretrain.epochs = 20;
  p.pretrain.lr = 0.01;
  p.pretrain.batch_size = 16;
  p.attack_cfg.rounds = 150;
  p.attack_cfg.gamma_t = 0.05;
  p.attack_cfg.gamma_g = 0.01;
  p.attack_cfg.alpha = 0.5;
  p.attack_cfg.beta = 0.05;
  p.attack_cfg.lambda = 0.05;
  p.prompt.epochs = 50;
  p.prompt.lr = 0.05;
  p.prompt.num_tokens = 15;
  p.prompt.link = {LinkMode::kSimilarity, 3};
  p.shots_per_class = 5;
  p.prune.threshold = 0.2;
  return c;
}

void ApplyIni(const IniDocument& doc, ExperimentConfig* cfg, const std::string& source) {
  std::map<std::string, const Field*> by_key;
  for (const Field& f : Fields()) by_key[f.key] = &f;
  for (const auto& [key, entry] : doc.entries) {
    auto it = by_key.find(key);
    if (it == by_key.end()) throw ParseError(source, entry.line, "unknown key '" + key + "'");
    it->second->set(*cfg, entry.value, source, entry.line);
  }
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = DeskDefaults();
  ApplyIni(ParseIni(buf.str(), path), &cfg, path);
  cfg.Validate();
  return cfg;
}

std::string ToIni(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const Field& f : Fields()) {
    const auto dot = f.key.find('.');
    const std::string s = f.key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out << "\n";
      out << "[" << s << "]\n";
      section = s;
    }
    out << f.key.substr(dot + 1) << " = " << f.get(cfg) << "\n";
  }
  return out.str();
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const Field& f : Fields()) keys.push_back(f.key);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::string ExperimentCanonicalText(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> sorted;
  for (const Field& f : Fields()) sorted[f.key] = f.get(cfg);
  std::string out;
  for (const auto& [k, v] : sorted) out += k + "=" + v + "\n";
  return out;
}

std::string ExperimentHash(const ExperimentConfig& cfg) { return ShortHash(ExperimentCanonicalText(cfg)); }

PipelineConfig PipelineFor(const ExperimentConfig& cfg) {
  PipelineConfig p = cfg.pipeline;
  p.seed = cfg.seed;
  return p;
}

std::vector<LabeledGraph> BuildMasters(const ExperimentConfig& cfg) {
  SynthConfig a = cfg.synth;
  a.seed = DeriveSeed(cfg.seed, "synth");
  std::vector<LabeledGraph> masters{GenSyntheticCorpus(a)};
  masters[0].name = "synthetic_a";
  if (cfg.scenario == Scenario::kCrossDomain || cfg.scenario == Scenario::kCrossDataset) {
    SynthConfig b = cfg.synth;
    b.seed = DeriveSeed(cfg.seed, "synth_b");
    masters.push_back(GenSyntheticCorpus(b));
    masters[1].name = "synthetic_b";
  }
  return masters;
}

ScenarioSplit BuildSplit(const ExperimentConfig& cfg) {
  cfg.Validate();
  ScenarioSplit split = MakeSplit(BuildMasters(cfg), cfg.scenario, DeriveSeed(cfg.seed, "split"), cfg.split);
  if (cfg.svd_dim > 0) SvdReduce(split, cfg.svd_dim);
  split.metadata["config_hash"] = ExperimentHash(cfg);
  return split;
}

}  // namespace gpl
