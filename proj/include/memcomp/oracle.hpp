#pragma once

#include "memcomp/codec.hpp"
#include "memcomp/loss.hpp"
#include "memcomp/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace memcomp {

struct OracleProblem {
  std::vector<BitVector> events;
  ProbDist dist;
  int num_memories = 0;
  LossWeights weights;
};

struct OracleSolution {
  TabularCodec best_codec;
  double best_expected_loss = 0.0;
  /// Encode maps tying at the minimum, counted up to memory relabeling.
  std::size_t argmin_count = 0;
};

/// Generates every total map from event index to memory index exactly once,
/// in lexicographic order. Refuses search spaces above 10^8 maps.
class EncodingEnumerator {
 public:
  EncodingEnumerator(std::size_t num_events, int num_memories);

  std::uint64_t total() const { return total_; }
  /// Next map, or nullopt once exhausted.
  std::optional<std::vector<int>> next();
  /// The map at lexicographic position `index`.
  static std::vector<int> at(std::uint64_t index, std::size_t num_events, int num_memories);

 private:
  std::size_t num_events_;
  int num_memories_;
  std::uint64_t total_ = 0;
  std::uint64_t position_ = 0;
  std::vector<int> current_;
};

/// Expectation of the input self-information; numerically this is the
/// entropy of the distribution, the floor every unweighted code length
/// expectation is bounded by.
double expected_self_information(const ProbDist& dist);

/// Exhaustive scan over all encode maps with analytically optimal decoders;
/// returns the minimum expected weighted loss. Ties within 1e-12 are broken
/// by the lexicographically smallest encode map. The scan honours the
/// MEMCOMP_THREADS environment variable; the reduction is deterministic
/// under any partitioning.
OracleSolution solve(const OracleProblem& problem);

/// Same scan with each decoder row found by exhaustive grid search at
/// `grid_step` resolution instead of the analytic conditional frequencies.
/// Restricted to d_in <= 3 and grid_step >= 1e-3.
OracleSolution solve_with_grid_decoder(const OracleProblem& problem, double grid_step);

/// Display form of the grouping an encode map induces, e.g. "{E1,E2|E3,E4}".
/// Groups are ordered by first event occurrence, so relabeling the memories
/// leaves the string unchanged. Labels default to E1..En.
std::string partition_string(const std::vector<int>& encode_map,
                             const std::vector<std::string>& labels = {});

}  // namespace memcomp
