#ifndef GPL_ENCODER_H_
#define GPL_ENCODER_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gpl/autodiff.h"
#include "gpl/graph.h"
#include "gpl/io.h"

namespace gpl {

// kAttention: single-head additive attention over neighbors + self.
// kTransformer: scaled dot-product attention over neighbors + self followed by a
// residual feed-forward sublayer.
// kLinearGin is analytic only; see linear_gin.h.
enum class Architecture { kAttention, kTransformer, kLinearGin };
enum class ReadoutMode { kSum, kMean };

std::string ArchitectureName(Architecture arch);
Architecture ParseArchitecture(const std::string& name);
std::string ReadoutName(ReadoutMode mode);
ReadoutMode ParseReadout(const std::string& name);

inline constexpr double kLeakySlope = 0.2;

struct EncoderParams {
  Architecture arch = Architecture::kAttention;
  int input_dim = 0;
  int hidden_dim = 100;
  int num_layers = 2;
  // Ordered (name, tensor) pairs; order is part of the checkpoint format.
  std::vector<std::pair<std::string, Matrix>> tensors;

  Matrix& Tensor(const std::string& name);
  const Matrix& Tensor(const std::string& name) const;
  bool AllFinite() const;

  friend bool operator==(const EncoderParams& a, const EncoderParams& b) {
    return a.arch == b.arch && a.input_dim == b.input_dim && a.hidden_dim == b.hidden_dim &&
           a.num_layers == b.num_layers && a.tensors == b.tensors;
  }
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
EncoderParams InitEncoder(Architecture arch, int input_dim, int hidden_dim, int num_layers,
                          std::uint64_t seed);

// Parameters recorded on a tape, either as leaves (trainable) or constants.
struct BoundEncoder {
  const EncoderParams* params = nullptr;
  std::vector<ad::Var> vars;  // parallel to params->tensors
};

BoundEncoder Bind(ad::Tape& tape, const EncoderParams& params, bool trainable);

// Node embeddings [N x h]. `mask` is the N x N neighborhood mask including
// self-loops (Graph::SelfLoopMask()).
ad::Var EncodeNodes(const BoundEncoder& enc, const ad::Var& features, const Matrix& mask);
ad::Var EncodeGraph(const BoundEncoder& enc, const ad::Var& features, const Matrix& mask,
                    ReadoutMode mode = ReadoutMode::kSum);
ad::Var Readout(const ad::Var& node_embs, ReadoutMode mode);
// Encodes a constant graph on the tape the encoder is bound to.
ad::Var EncodeGraph(const BoundEncoder& enc, const Graph& g, ReadoutMode mode = ReadoutMode::kSum);

// Value-only conveniences.
Matrix EncodeNodes(const EncoderParams& params, const Graph& g);
RowVector Readout(const Matrix& node_embs, ReadoutMode mode);
RowVector EncodeGraph(const EncoderParams& params, const Graph& g,
                      ReadoutMode mode = ReadoutMode::kSum);

// Gradient buffers parallel to params.tensors.
std::vector<Matrix> CollectGrads(const ad::Tape& tape, const BoundEncoder& enc);

Checkpoint EncoderToCheckpoint(const EncoderParams& params);
EncoderParams EncoderFromCheckpoint(const Checkpoint& ckpt);
// Hex digest of the checkpoint bytes.
std::string EncoderHash(const EncoderParams& params);

}  // namespace gpl

#endif  // GPL_ENCODER_H_
