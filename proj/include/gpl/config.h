#ifndef GPL_CONFIG_H_
#define GPL_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gpl/pipeline.h"
#include "gpl/scenario.h"

namespace gpl {

// Flat "key = value" text with [section] headers; '#' and ';' start comments.
struct IniDocument {
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries;  // "section.key"
};

IniDocument ParseIni(const std::string& text, const std::string& source = "<config>");

// Everything needed to rebuild one experiment from a root seed.
struct ExperimentConfig {
  Scenario scenario = Scenario::kCrossDistribution;
  SynthConfig synth;
  SplitConfig split;
  int svd_dim = 0;  // 0 keeps the raw features
  PipelineConfig pipeline;
  std::uint64_t seed = 0;

  void Validate() const;
};

// The small configuration used for the trend checks on one CPU core.
ExperimentConfig DeskDefaults();

// Unknown keys and malformed values raise ParseError with the line number.
void ApplyIni(const IniDocument& doc, ExperimentConfig* cfg, const std::string& source = "<config>");
ExperimentConfig LoadExperimentConfig(const std::string& path);
std::string ToIni(const ExperimentConfig& cfg);
// Recognized keys, "section.key", sorted.
std::vector<std::string> ConfigKeys();

// Sorted key=value lines over every field; the seed is the root seed.
std::string ExperimentCanonicalText(const ExperimentConfig& cfg);
std::string ExperimentHash(const ExperimentConfig& cfg);

// Pipeline settings carrying the root seed.
PipelineConfig PipelineFor(const ExperimentConfig& cfg);

// Synthetic master(s) seeded from the root seed, then the scenario split. A
// second master for CROSS_DOMAIN / CROSS_DATASET uses its own derived seed.
std::vector<LabeledGraph> BuildMasters(const ExperimentConfig& cfg);
ScenarioSplit BuildSplit(const ExperimentConfig& cfg);

}  // namespace gpl

#endif  // GPL_CONFIG_H_
