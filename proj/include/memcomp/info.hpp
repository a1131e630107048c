#pragma once

#include "memcomp/types.hpp"

#include <cstddef>

namespace memcomp {

// All information measures below are in nats (natural logarithm).

/// -ln(p) for p in (0, 1].
double self_information(double probability);

/// Shannon entropy -sum p_i ln p_i. Zero-probability entries contribute
/// exactly zero. Invariant under permutations of the entries, bit for bit:
/// the terms are summed in a canonical order independent of storage order.
double entropy(const ProbDist& dist);

/// ln(num_events), the entropy of the uniform distribution on that support.
double max_entropy(std::size_t num_events);

/// max_entropy(|dist|) - entropy(dist); non-negative up to rounding.
double redundancy(const ProbDist& dist);

/// -sum p_i ln q_i over a shared support. Returns +infinity when some q_i
/// is zero on an event with p_i > 0. Never smaller than entropy(p).
double cross_entropy(const ProbDist& p, const ProbDist& q);

/// |I(E) - (I(M) + L)| for a consistent factorization
/// p_event = p_memory * p_event_given_memory, all probabilities in (0,1].
/// Rejects triples violating the factorization beyond kDistributionTolerance.
double conservation_check(double p_event, double p_memory, double p_event_given_memory);

}  // namespace memcomp
