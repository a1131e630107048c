#include "memcomp/loss.hpp"

#include "memcomp/info.hpp"

#include <cmath>
#include <limits>

namespace memcomp {
namespace {

void validate_weights(LossWeights w) {
  if (!std::isfinite(w.alpha) || !std::isfinite(w.beta) || w.alpha < 0.0 || w.beta < 0.0) {
    throw std::domain_error("loss weights must be finite and non-negative");
  }
}

double weighted_self_information(double p, double weight) {
  if (p == 0.0) return std::numeric_limits<double>::infinity();
  return -weight * std::log(p);
}

}  // namespace

LossBreakdown sample_loss(double p_memory_hat, double p_event_given_memory_hat, LossWeights w) {
  validate_weights(w);
  for (double p : {p_memory_hat, p_event_given_memory_hat}) {
    if (!(p >= 0.0) || p > 1.0) {
      throw std::domain_error("sample_loss: probabilities must be in [0, 1]");
    }
  }
  LossBreakdown breakdown;
  breakdown.memory_term = weighted_self_information(p_memory_hat, 1.0 + w.alpha);
  breakdown.reconstruction_term = weighted_self_information(p_event_given_memory_hat, 1.0 + w.beta);
  breakdown.total = breakdown.memory_term + breakdown.reconstruction_term;
  return breakdown;
}

ProbDist pushforward_memory_probs(const std::vector<int>& encode_map, const ProbDist& dist,
                                  int num_memories) {
  if (dist.size() != static_cast<int>(encode_map.size())) {
    throw std::domain_error("pushforward_memory_probs: size mismatch");
  }
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(num_memories);
  for (std::size_t i = 0; i < encode_map.size(); ++i) {
    const int m = encode_map[i];
    if (m < 0 || m >= num_memories) {
      throw std::domain_error("pushforward_memory_probs: memory index out of range");
    }
    probs[m] += dist[static_cast<int>(i)];
  }
  return ProbDist(std::move(probs));
}

namespace detail {

double expected_loss_over_events(const std::vector<int>& encode_map,
                                 const std::vector<Eigen::VectorXd>& decoder_rows,
                                 const std::vector<BitVector>& events, const ProbDist& dist,
                                 const Eigen::VectorXd& memory_probs, LossWeights w) {
  double sum = 0.0;
  double compensation = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const double p_event = dist[static_cast<int>(i)];
    if (p_event == 0.0) continue;
    const int m = encode_map[i];
    const double likelihood = conditional_likelihood(decoder_rows[static_cast<std::size_t>(m)], events[i]);
    const double memory_term = weighted_self_information(memory_probs[m], 1.0 + w.alpha);
    const double recon_term = weighted_self_information(likelihood, 1.0 + w.beta);
    if (std::isinf(memory_term) || std::isinf(recon_term)) {
      return std::numeric_limits<double>::infinity();
    }
    const double term = p_event * (memory_term + recon_term);
    const double y = term - compensation;
    const double next = sum + y;
    compensation = (next - sum) - y;
    sum = next;
  }
  return sum;
}

}  // namespace detail

double expected_loss(const TabularCodec& codec, const ProbDist& dist,
                     const ProbDist& memory_probs, LossWeights w) {
  validate_weights(w);
  if (dist.size() != codec.num_events()) throw std::domain_error("expected_loss: distribution size mismatch");
  if (memory_probs.size() != codec.num_memories()) {
    throw std::domain_error("expected_loss: memory distribution size mismatch");
  }
  const ProbDist pushforward =
      pushforward_memory_probs(codec.encode_map(), dist, codec.num_memories());
  for (int m = 0; m < codec.num_memories(); ++m) {
    if (std::abs(pushforward[m] - memory_probs[m]) > kDistributionTolerance) {
      throw std::domain_error("expected_loss: memory_probs is not the pushforward of dist");
    }
  }
  return detail::expected_loss_over_events(codec.encode_map(), codec.decoder_rows(),
                                           codec.events(), dist, memory_probs.probs(), w);
}

double info_gap(const TabularCodec& codec, const ProbDist& dist, const ProbDist& memory_probs) {
  return expected_loss(codec, dist, memory_probs, LossWeights{0.0, 0.0}) - entropy(dist);
}

}  // namespace memcomp
