#pragma once

#include "memcomp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

namespace memcomp {

/// Product-Bernoulli likelihood of `e` under per-node probabilities:
/// prod_j (probs_j if e_j = 1 else 1 - probs_j).
double conditional_likelihood(const Eigen::VectorXd& probs, const BitVector& e);

/// Hard threshold of squashed activations at 0.5; ties quantize to 1.
BitVector quantize(const Eigen::VectorXd& squashed);

/// Clipped straight-through backward for quantize(): upstream gradients pass
/// unchanged where |squashed - 0.5| < window and are zeroed elsewhere.
Eigen::VectorXd quantize_backward(const Eigen::VectorXd& squashed,
                                  const Eigen::VectorXd& upstream,
                                  double window = 0.49);

/// Conditional per-node frequencies P(e_j = 1 | encode(e) = m) under `dist`.
/// Memories with zero pushforward mass decode to 0.5 per node. This is the
/// decoder minimizing the expected reconstruction code length for the map.
std::vector<Eigen::VectorXd> optimal_tabular_decoder(const std::vector<int>& encode_map,
                                                     const ProbDist& dist,
                                                     const std::vector<BitVector>& events,
                                                     int num_memories);

/// Explicit event->memory index map plus per-memory Bernoulli decoder rows.
/// Memory index k is realized as the bit vector with big-endian value k in
/// `memory_dim` bits.
class TabularCodec {
 public:
  TabularCodec(std::vector<BitVector> events, std::vector<int> encode_map,
               std::vector<Eigen::VectorXd> decode_probs, int memory_dim);

  int num_events() const { return static_cast<int>(events_.size()); }
  int num_memories() const { return static_cast<int>(decode_probs_.size()); }
  int d_in() const { return events_.front().dim(); }
  int d_mem() const { return memory_dim_; }
  const std::vector<BitVector>& events() const { return events_; }
  const std::vector<int>& encode_map() const { return encode_map_; }
  const std::vector<Eigen::VectorXd>& decoder_rows() const { return decode_probs_; }

  int encode_index(int event_index) const;
  int event_index(const BitVector& e) const;
  BitVector memory_vector(int memory_index) const;

  BitVector encode(const BitVector& e) const;
  Eigen::VectorXd decode_probs(const BitVector& m) const;

 private:
  std::vector<BitVector> events_;
  std::vector<int> encode_map_;
  std::vector<Eigen::VectorXd> decode_probs_;
  int memory_dim_ = 0;
  std::map<BitVector, int> event_lookup_;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

/// Per-layer activations of one pass through a dense stack: hidden layers
/// use tanh, the final layer the logistic squashing into (0,1).
struct ForwardTrace {
  std::vector<Eigen::VectorXd> inputs;           // input to each layer
  std::vector<Eigen::VectorXd> pre_activations;  // affine outputs per layer
  Eigen::VectorXd output;                        // squashed final activations
};

struct LayerGrads {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

ForwardTrace dense_forward(const std::vector<DenseLayer>& layers, const Eigen::VectorXd& input);

/// Backpropagates `grad_output` (gradient at the squashed final output)
/// through the stack; optionally reports the gradient at the stack input.
std::vector<LayerGrads> dense_backward(const std::vector<DenseLayer>& layers,
                                       const ForwardTrace& trace,
                                       const Eigen::VectorXd& grad_output,
                                       Eigen::VectorXd* grad_input = nullptr);

/// Trainable encoder/decoder pair with a quantized binary middle layer.
/// Immutable during inference; parameter updates require exclusive access.
class MlpCodec {
 public:
  MlpCodec(std::vector<DenseLayer> encoder, std::vector<DenseLayer> decoder);

  /// Seeded uniform initialization scaled per layer fan-in/out. Layer sizes
  /// are d_in -> encoder_hidden... -> d_mem and d_mem -> decoder_hidden... -> d_in.
  static MlpCodec random(int d_in, const std::vector<int>& encoder_hidden, int d_mem,
                         const std::vector<int>& decoder_hidden, std::uint64_t seed);

  int d_in() const;
  int d_mem() const;
  const std::vector<DenseLayer>& encoder() const { return encoder_; }
  const std::vector<DenseLayer>& decoder() const { return decoder_; }
  std::vector<DenseLayer>& encoder() { return encoder_; }
  std::vector<DenseLayer>& decoder() { return decoder_; }

  /// Squashed middle-layer activations, before quantization.
  Eigen::VectorXd middle_activations(const BitVector& e) const;
  BitVector encode(const BitVector& e) const;
  Eigen::VectorXd decode_probs(const BitVector& m) const;

  void save(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;
  static MlpCodec load(std::istream& in);
  static MlpCodec load_file(const std::filesystem::path& path);

 private:
  std::vector<DenseLayer> encoder_;
  std::vector<DenseLayer> decoder_;
};

}  // namespace memcomp
