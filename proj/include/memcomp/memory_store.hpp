#pragma once

#include "memcomp/types.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

namespace memcomp {

/// Number of recorded memories that defines the neighborhood radius: the
/// radius is the distance to the n-th nearest record.
struct NeighborhoodSpec {
  int n = 1;
};

struct MemoryRecord {
  std::uint64_t seq = 0;
  BitVector vector;
};

/// Number of {0,1}^dim lattice points inside the closed euclidean ball of
/// `radius` around any lattice point: sum of binomial(dim, k) for
/// k <= floor(radius^2). Translation-invariant on the hypercube.
std::uint64_t lattice_ball_size(int dim, double radius);

/// Append-only log of recorded memory vectors with exact per-value counts
/// and nearest-neighbor frequency smoothing.
///
/// Concurrency: any number of readers may share a store; record() and
/// prune() require exclusive access.
class MemoryStore {
 public:
  explicit MemoryStore(int dim, std::optional<std::size_t> capacity = std::nullopt);

  int dim() const { return dim_; }
  /// Total number of records, the estimator's N.
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::optional<std::size_t> capacity() const { return capacity_; }
  const std::deque<MemoryRecord>& records() const { return records_; }
  /// Occurrence counts per distinct memory value.
  const std::map<BitVector, std::size_t>& counts() const { return counts_; }
  /// n(M): how many times `m` has been recorded.
  std::size_t count(const BitVector& m) const;
  std::size_t distinct_count() const { return counts_.size(); }

  /// Appends one memory. When a capacity is set and exceeded, the oldest
  /// record is evicted first.
  void record(const BitVector& m);

  /// n(M) / N. Zero for values never recorded.
  double exact_probability(const BitVector& m) const;

  /// Euclidean distances from `m` to every record (duplicates included),
  /// ascending. For bit vectors the squared distance is the hamming distance.
  std::vector<double> neighbor_distances(const BitVector& m) const;

  /// Frequency estimate averaged over the closed ball whose radius is the
  /// distance to the spec.n-th nearest record:
  ///
  ///   (records inside the ball) / (lattice points inside the ball * N)
  ///
  /// The ball is closed, so records tied at the radius are all included.
  /// Strictly positive whenever N >= spec.n.
  double smoothed_probability(const BitVector& m, const NeighborhoodSpec& spec) const;

  /// Keeps the `keep` most recent records; counts are rebuilt consistently.
  /// A no-op when keep >= N.
  void prune(std::size_t keep);

  void save(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;
  /// Parses the line-oriented store format. Throws ParseError (with the
  /// offending line number) without returning a partial store.
  static MemoryStore load(std::istream& in);
  static MemoryStore load_file(const std::filesystem::path& path);

 private:
  void evict_oldest();

  int dim_ = 0;
  std::optional<std::size_t> capacity_;
  std::uint64_t next_seq_ = 1;
  std::deque<MemoryRecord> records_;
  std::map<BitVector, std::size_t> counts_;
};

}  // namespace memcomp
