#ifndef GPL_METRICS_H_
#define GPL_METRICS_H_

#include <vector>

#include "gpl/attack.h"
#include "gpl/prompt.h"

namespace gpl {

// Exact count ratio.
struct Rate {
  long hits = 0;
  long total = 0;

  double value() const { return static_cast<double>(hits) / static_cast<double>(total); }
  bool operator==(const Rate&) const = default;
};

// Fraction of predictions equal to target_class.
Rate ComputeAsr(const std::vector<int>& predictions, int target_class, int num_classes);
// Runs the prompted model on every backdoored input first.
Rate ComputeAsr(const EncoderParams& enc, const PromptState& ps, const std::vector<Graph>& backdoored_test,
                int target_class, ReadoutMode readout = ReadoutMode::kSum);

// Downstream prediction on the attack's target graph.
int ResolveTargetClass(const EncoderParams& enc, const AttackState& state, const PromptState& ps,
                       ReadoutMode readout = ReadoutMode::kSum);

struct AccAd {
  Rate acc;        // backdoored model
  Rate clean_acc;  // clean reference
  // clean_acc - acc as a signed count over the shared test size.
  long ad_hits = 0;

  double ad() const { return static_cast<double>(ad_hits) / static_cast<double>(acc.total); }
};

AccAd ComputeAccAd(const std::vector<int>& backdoored_predictions, const std::vector<int>& clean_predictions,
                   const std::vector<int>& labels);
AccAd ComputeAccAd(const EncoderParams& backdoored, const PromptState& backdoored_prompt,
                   const EncoderParams& clean, const PromptState& clean_prompt,
                   const std::vector<LabeledSample>& clean_test, ReadoutMode readout = ReadoutMode::kSum);

std::vector<int> PredictAll(const EncoderParams& enc, const PromptState& ps, const std::vector<Graph>& graphs,
                            ReadoutMode readout = ReadoutMode::kSum);

}  // namespace gpl

#endif  // GPL_METRICS_H_
