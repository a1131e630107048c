#pragma once

#include "memcomp/memory_store.hpp"
#include "memcomp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace memcomp {

/// Enumerated event list with its ground-truth distribution.
struct EventTable {
  std::vector<BitVector> events;
  ProbDist dist;
  std::vector<std::string> labels;  // optional display names, E1...
};

/// Checks |events| = |dist|, pairwise-distinct events and a shared dimension.
void validate_table(const EventTable& table);

/// The worked two-bit system: events (0,0),(0,1),(1,0),(1,1) with
/// probabilities (0.6, 0.1, 0.1, 0.2).
EventTable four_state_table();

/// 52 equiprobable cards as 6-bit big-endian indices, suits in blocks of 13
/// (spades, hearts, diamonds, clubs).
EventTable playing_cards_table();

/// Card index -> suit index, the remember-only-the-suit coarsening.
std::vector<int> suit_coarsening_map();
/// 2-bit big-endian suit code.
BitVector suit_memory(int suit_index);

/// All bits copy one fair hidden bit with probability `coupling`, otherwise
/// the bits are independent and fair. coupling 0 gives the uniform (zero
/// redundancy) table. Explicit table, so dim <= 16.
EventTable correlated_bits_table(int dim, double coupling);

/// Seeded iid sampler over an event table. Deterministic given the seed.
class SampleStream {
 public:
  SampleStream(EventTable table, std::uint64_t seed);

  const EventTable& table() const { return table_; }
  std::uint64_t seed() const { return seed_; }
  BitVector next();
  /// Discards `count` draws; used to fast-forward when resuming a run.
  void skip(std::uint64_t count);

 private:
  EventTable table_;
  std::vector<double> cumulative_;
  std::mt19937_64 rng_;
  std::uint64_t seed_ = 0;
};

std::vector<BitVector> sample(SampleStream& stream, std::size_t count);

/// Concatenates the index-aligned memory vectors of several stores into one
/// input for a second-stage codec.
BitVector stack_memories_as_input(const std::vector<const MemoryStore*>& stores,
                                  std::size_t aligned_index);

/// CSV import/export, rows of `bits,probability` under a header line.
EventTable load_table_csv(const std::filesystem::path& path);
void save_table_csv(const EventTable& table, const std::filesystem::path& path);

}  // namespace memcomp
