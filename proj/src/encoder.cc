#include "gpl/encoder.h"

#include <cmath>
#include <random>

#include "gpl/digest.h"
#include "gpl/errors.h"

namespace gpl {

std::string ArchitectureName(Architecture arch) {
  switch (arch) {
    case Architecture::kAttention:
      return "ATTN";
    case Architecture::kTransformer:
      return "TRANS";
    case Architecture::kLinearGin:
      return "LINEAR_GIN";
  }
  return "?";
}

Architecture ParseArchitecture(const std::string& name) {
  if (name == "ATTN" || name == "attn" || name == "gat") return Architecture::kAttention;
  if (name == "TRANS" || name == "trans" || name == "gt") return Architecture::kTransformer;
  if (name == "LINEAR_GIN" || name == "linear_gin") return Architecture::kLinearGin;
  throw InvalidArgument("unknown architecture '" + name + "' (expected ATTN or TRANS)");
}

std::string ReadoutName(ReadoutMode mode) { return mode == ReadoutMode::kSum ? "SUM" : "MEAN"; }

ReadoutMode ParseReadout(const std::string& name) {
  if (name == "SUM" || name == "sum") return ReadoutMode::kSum;
  if (name == "MEAN" || name == "mean") return ReadoutMode::kMean;
  throw InvalidArgument("unknown readout '" + name + "' (expected SUM or MEAN)");
}

Matrix& EncoderParams::Tensor(const std::string& name) {
  for (auto& [k, m] : tensors) {
    if (k == name) return m;
  }
  throw InvalidArgument("encoder: no tensor '" + name + "'");
}

const Matrix& EncoderParams::Tensor(const std::string& name) const {
  return const_cast<EncoderParams*>(this)->Tensor(name);
}

bool EncoderParams::AllFinite() const {
  for (const auto& kv : tensors) {
    if (!kv.second.allFinite()) return false;
  }
  return true;
}

namespace {

std::string LayerName(int layer, const char* what) {
  return "layer" + std::to_string(layer) + "." + what;
}

Matrix Uniform(std::mt19937_64& rng, int rows, int cols, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

}  // namespace

EncoderParams InitEncoder(Architecture arch, int input_dim, int hidden_dim, int num_layers,
                          std::uint64_t seed) {
  if (arch == Architecture::kLinearGin) {
    throw InvalidArgument("InitEncoder: LINEAR_GIN parameters live in LinearGinParams");
  }
  if (input_dim < 1 || hidden_dim < 1 || num_layers < 1) {
    throw InvalidArgument("InitEncoder: dimensions and layer count must be positive");
  }
  EncoderParams p;
  p.arch = arch;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.num_layers = num_layers;
  std::mt19937_64 rng(seed);
  for (int l = 0; l < num_layers; ++l) {
    const int in = l == 0 ? input_dim : hidden_dim;
    const int h = hidden_dim;
    if (arch == Architecture::kAttention) {
      p.tensors.emplace_back(LayerName(l, "weight"), Uniform(rng, in, h, in));
      p.tensors.emplace_back(LayerName(l, "att_src"), Uniform(rng, h, 1, h));
      p.tensors.emplace_back(LayerName(l, "att_dst"), Uniform(rng, h, 1, h));
      p.tensors.emplace_back(LayerName(l, "bias"), Matrix::Zero(1, h));
    } else {
      p.tensors.emplace_back(LayerName(l, "query"), Uniform(rng, in, h, in));
      p.tensors.emplace_back(LayerName(l, "key"), Uniform(rng, in, h, in));
      p.tensors.emplace_back(LayerName(l, "value"), Uniform(rng, in, h, in));
      p.tensors.emplace_back(LayerName(l, "ffn_w1"), Uniform(rng, h, h, h));
      p.tensors.emplace_back(LayerName(l, "ffn_b1"), Matrix::Zero(1, h));
      p.tensors.emplace_back(LayerName(l, "ffn_w2"), Uniform(rng, h, h, h));
      p.tensors.emplace_back(LayerName(l, "ffn_b2"), Matrix::Zero(1, h));
    }
  }
  return p;
}

BoundEncoder Bind(ad::Tape& tape, const EncoderParams& params, bool trainable) {
  if (!params.AllFinite()) throw InvalidArgument("encoder: non-finite parameter");
  BoundEncoder enc;
  enc.params = &params;
  enc.vars.reserve(params.tensors.size());
  for (const auto& kv : params.tensors) {
    enc.vars.push_back(trainable ? tape.Leaf(kv.second) : tape.Constant(kv.second));
  }
  return enc;
}

namespace {

ad::Var AttentionLayer(const ad::Var* w, const ad::Var& h, const Matrix& mask) {
  // w: weight, att_src, att_dst, bias
  ad::Var z = ad::MatMul(h, w[0]);
  ad::Var scores = ad::LeakyRelu(ad::OuterSum(ad::MatMul(z, w[1]), ad::MatMul(z, w[2])), kLeakySlope);
  ad::Var attn = ad::MaskedSoftmaxRows(scores, mask);
  return ad::AddRowBroadcast(ad::MatMul(attn, z), w[3]);
}

ad::Var TransformerLayer(const ad::Var* w, const ad::Var& h, const Matrix& mask, int hidden) {
  // w: query, key, value, ffn_w1, ffn_b1, ffn_w2, ffn_b2
  ad::Var q = ad::MatMul(h, w[0]);
  ad::Var k = ad::MatMul(h, w[1]);
  ad::Var v = ad::MatMul(h, w[2]);
  ad::Var scores = ad::Scale(ad::MatMul(q, ad::Transpose(k)), 1.0 / std::sqrt(double(hidden)));
  ad::Var attended = ad::MatMul(ad::MaskedSoftmaxRows(scores, mask), v);
  ad::Var ffn = ad::AddRowBroadcast(
      ad::MatMul(ad::LeakyRelu(ad::AddRowBroadcast(ad::MatMul(attended, w[3]), w[4]), kLeakySlope),
                 w[5]),
      w[6]);
  return ad::Add(attended, ffn);
}

}  // namespace

ad::Var EncodeNodes(const BoundEncoder& enc, const ad::Var& features, const Matrix& mask) {
  const EncoderParams& p = *enc.params;
  if (features.cols() != p.input_dim) {
    throw DimensionMismatch("encode_nodes: feature dim " + std::to_string(features.cols()) +
                            " but encoder expects " + std::to_string(p.input_dim));
  }
  if (mask.rows() != features.rows() || mask.cols() != features.rows()) {
    throw DimensionMismatch("encode_nodes: mask does not match node count");
  }
  const size_t per_layer = p.arch == Architecture::kAttention ? 4 : 7;
  ad::Var h = features;
  for (int l = 0; l < p.num_layers; ++l) {
    const ad::Var* w = enc.vars.data() + l * per_layer;
    h = p.arch == Architecture::kAttention ? AttentionLayer(w, h, mask)
                                           : TransformerLayer(w, h, mask, p.hidden_dim);
    if (l + 1 < p.num_layers) h = ad::LeakyRelu(h, kLeakySlope);
  }
  return h;
}

ad::Var Readout(const ad::Var& node_embs, ReadoutMode mode) {
  if (node_embs.rows() == 0) throw InvalidArgument("readout: empty node set");
  return mode == ReadoutMode::kSum ? ad::SumRows(node_embs) : ad::MeanRows(node_embs);
}

ad::Var EncodeGraph(const BoundEncoder& enc, const ad::Var& features, const Matrix& mask,
                    ReadoutMode mode) {
  return Readout(EncodeNodes(enc, features, mask), mode);
}

ad::Var EncodeGraph(const BoundEncoder& enc, const Graph& g, ReadoutMode mode) {
  ad::Tape* tape = enc.vars.front().tape();
  return EncodeGraph(enc, tape->Constant(g.features()), g.SelfLoopMask(), mode);
}

Matrix EncodeNodes(const EncoderParams& params, const Graph& g) {
  ad::Tape tape;
  BoundEncoder enc = Bind(tape, params, false);
  return EncodeNodes(enc, tape.Constant(g.features()), g.SelfLoopMask()).value();
}

RowVector Readout(const Matrix& node_embs, ReadoutMode mode) {
  if (node_embs.rows() == 0) throw InvalidArgument("readout: empty node set");
  RowVector sum = node_embs.colwise().sum();
  if (mode == ReadoutMode::kMean) sum /= static_cast<double>(node_embs.rows());
  return sum;
}

RowVector EncodeGraph(const EncoderParams& params, const Graph& g, ReadoutMode mode) {
  return Readout(EncodeNodes(params, g), mode);
}

std::vector<Matrix> CollectGrads(const ad::Tape& tape, const BoundEncoder& enc) {
  std::vector<Matrix> grads;
  grads.reserve(enc.vars.size());
  for (const ad::Var& v : enc.vars) grads.push_back(tape.Grad(v));
  return grads;
}

Checkpoint EncoderToCheckpoint(const EncoderParams& params) {
  Checkpoint ckpt;
  ckpt.kind = "encoder";
  ckpt.meta = {{"arch", ArchitectureName(params.arch)},
               {"input_dim", std::to_string(params.input_dim)},
               {"hidden_dim", std::to_string(params.hidden_dim)},
               {"num_layers", std::to_string(params.num_layers)}};
  ckpt.tensors = params.tensors;
  return ckpt;
}

EncoderParams EncoderFromCheckpoint(const Checkpoint& ckpt) {
  EncoderParams p;
  p.arch = ParseArchitecture(ckpt.Meta("arch"));
  p.input_dim = std::stoi(ckpt.Meta("input_dim"));
  p.hidden_dim = std::stoi(ckpt.Meta("hidden_dim"));
  p.num_layers = std::stoi(ckpt.Meta("num_layers"));
  const EncoderParams shape = InitEncoder(p.arch, p.input_dim, p.hidden_dim, p.num_layers, 0);
  for (const auto& [name, m] : shape.tensors) {
    const Matrix& loaded = ckpt.Tensor(name);
    if (loaded.rows() != m.rows() || loaded.cols() != m.cols()) {
      throw ValidationError("checkpoint: tensor '" + name + "' has the wrong shape");
    }
    p.tensors.emplace_back(name, loaded);
  }
  if (!p.AllFinite()) throw ValidationError("checkpoint: non-finite parameter");
  return p;
}

std::string EncoderHash(const EncoderParams& params) {
  return ShortHash(CheckpointText(EncoderToCheckpoint(params)));
}

}  // namespace gpl
