#pragma once

#include "memcomp/codec.hpp"
#include "memcomp/memory_store.hpp"
#include "memcomp/types.hpp"

#include <vector>

namespace memcomp {

struct LossWeights {
  double alpha = 0.0;
  double beta = 0.0;
};

/// The two weighted code-length terms of one sample, in nats.
struct LossBreakdown {
  double memory_term = 0.0;          // -(1+alpha) ln P(M)
  double reconstruction_term = 0.0;  // -(1+beta)  ln P(E|M)
  double total = 0.0;
};

/// Weighted two-part code length for one sample. A zero probability maps to
/// +infinity instead of throwing, so search code can reject such codecs.
LossBreakdown sample_loss(double p_memory_hat, double p_event_given_memory_hat, LossWeights w);

/// Probabilities of memory indices induced by `dist` through `encode_map`.
ProbDist pushforward_memory_probs(const std::vector<int>& encode_map, const ProbDist& dist,
                                  int num_memories);

/// Expectation of sample_loss under `dist`, with the exact pushforward P(M)
/// (no neighborhood smoothing). `memory_probs` must equal the pushforward of
/// `dist` through the codec's encode map.
double expected_loss(const TabularCodec& codec, const ProbDist& dist,
                     const ProbDist& memory_probs, LossWeights w);

/// expected_loss at weights (0,0) minus entropy(dist). Non-negative up to
/// rounding for every codec; zero exactly when the codec's implied event
/// distribution matches `dist`.
double info_gap(const TabularCodec& codec, const ProbDist& dist, const ProbDist& memory_probs);

/// Encodes `e`, estimates P(M) from the store's smoothed frequencies and
/// P(E|M) from the decoder row, and returns the weighted breakdown.
template <typename Codec>
LossBreakdown empirical_loss(const Codec& codec, const MemoryStore& store,
                             const NeighborhoodSpec& spec, const BitVector& e, LossWeights w) {
  const BitVector m = codec.encode(e);
  const double p_memory = store.smoothed_probability(m, spec);
  const double p_event = conditional_likelihood(codec.decode_probs(m), e);
  return sample_loss(p_memory, p_event, w);
}

namespace detail {

/// Core scan shared by expected_loss and the oracle; assumes memory_probs is
/// the exact pushforward and skips revalidation.
double expected_loss_over_events(const std::vector<int>& encode_map,
                                 const std::vector<Eigen::VectorXd>& decoder_rows,
                                 const std::vector<BitVector>& events, const ProbDist& dist,
                                 const Eigen::VectorXd& memory_probs, LossWeights w);

}  // namespace detail

}  // namespace memcomp
