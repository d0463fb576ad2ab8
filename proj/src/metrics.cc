#include "gpl/metrics.h"

#include "gpl/errors.h"

namespace gpl {

Rate ComputeAsr(const std::vector<int>& predictions, int target_class, int num_classes) {
  if (predictions.empty()) throw InvalidArgument("compute_asr: empty backdoored test set");
  if (target_class < 0 || target_class >= num_classes) {
    throw IndexOutOfRange("compute_asr: target class " + std::to_string(target_class) + " outside [0, " +
                          std::to_string(num_classes) + ")");
  }
  Rate r{0, static_cast<long>(predictions.size())};
  for (int p : predictions) r.hits += p == target_class;
  return r;
}

std::vector<int> PredictAll(const EncoderParams& enc, const PromptState& ps, const std::vector<Graph>& graphs,
                            ReadoutMode readout) {
  std::vector<int> out;
  out.reserve(graphs.size());
  for (const Graph& g : graphs) out.push_back(Predict(enc, g, ps, readout));
  return out;
}

Rate ComputeAsr(const EncoderParams& enc, const PromptState& ps, const std::vector<Graph>& backdoored_test,
                int target_class, ReadoutMode readout) {
  return ComputeAsr(PredictAll(enc, ps, backdoored_test, readout), target_class, ps.num_classes);
}

int ResolveTargetClass(const EncoderParams& enc, const AttackState& state, const PromptState& ps,
                       ReadoutMode readout) {
  return Predict(enc, state.TargetGraph(), ps, readout);
}

AccAd ComputeAccAd(const std::vector<int>& backdoored_predictions, const std::vector<int>& clean_predictions,
                   const std::vector<int>& labels) {
  if (labels.empty()) throw InvalidArgument("compute_acc_ad: empty test set");
  if (backdoored_predictions.size() != labels.size() || clean_predictions.size() != labels.size()) {
    throw DimensionMismatch("compute_acc_ad: prediction and label counts differ");
  }
  AccAd out;
  out.acc.total = out.clean_acc.total = static_cast<long>(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    out.acc.hits += backdoored_predictions[i] == labels[i];
    out.clean_acc.hits += clean_predictions[i] == labels[i];
  }
  out.ad_hits = out.clean_acc.hits - out.acc.hits;
  return out;
}

AccAd ComputeAccAd(const EncoderParams& backdoored, const PromptState& backdoored_prompt,
                   const EncoderParams& clean, const PromptState& clean_prompt,
                   const std::vector<LabeledSample>& clean_test, ReadoutMode readout) {
  if (backdoored_prompt.num_classes != clean_prompt.num_classes) {
    throw DimensionMismatch("compute_acc_ad: models disagree on the label space");
  }
  std::vector<Graph> graphs;
  std::vector<int> labels;
  for (const LabeledSample& s : clean_test) {
    graphs.push_back(s.graph);
    labels.push_back(s.label);
  }
  return ComputeAccAd(PredictAll(backdoored, backdoored_prompt, graphs, readout),
                      PredictAll(clean, clean_prompt, graphs, readout), labels);
}

}  // namespace gpl
