#include "memcomp/memory_store.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

namespace memcomp {

std::uint64_t lattice_ball_size(int dim, double radius) {
  if (dim <= 0 || dim > 62) throw std::domain_error("lattice_ball_size: dimension out of range");
  if (radius < 0.0) throw std::domain_error("lattice_ball_size: radius must be non-negative");
  // Radii arise as square roots of integer hamming distances; the slack
  // absorbs the sqrt/square round trip.
  const auto max_flips = static_cast<std::uint64_t>(std::floor(radius * radius + 1e-9));
  if (max_flips >= static_cast<std::uint64_t>(dim)) {
    return std::uint64_t{1} << dim;
  }
  std::uint64_t total = 0;
  std::uint64_t binom = 1;  // binomial(dim, k)
  for (std::uint64_t k = 0; k <= max_flips; ++k) {
    total += binom;
    binom = binom * (static_cast<std::uint64_t>(dim) - k) / (k + 1);
  }
  return total;
}

MemoryStore::MemoryStore(int dim, std::optional<std::size_t> capacity)
    : dim_(dim), capacity_(capacity) {
  if (dim <= 0) throw std::domain_error("MemoryStore: dimension must be positive");
  if (capacity_ && *capacity_ == 0) throw std::domain_error("MemoryStore: capacity must be positive");
}

std::size_t MemoryStore::count(const BitVector& m) const {
  const auto it = counts_.find(m);
  return it == counts_.end() ? 0 : it->second;
}

void MemoryStore::record(const BitVector& m) {
  if (m.dim() != dim_) throw std::domain_error("record: dimension mismatch");
  records_.push_back({next_seq_++, m});
  ++counts_[m];
  if (capacity_ && records_.size() > *capacity_) evict_oldest();
}

void MemoryStore::evict_oldest() {
  const auto it = counts_.find(records_.front().vector);
  if (--it->second == 0) counts_.erase(it);
  records_.pop_front();
}

double MemoryStore::exact_probability(const BitVector& m) const {
  if (records_.empty()) throw std::domain_error("exact_probability: empty store");
  if (m.dim() != dim_) throw std::domain_error("exact_probability: dimension mismatch");
  return static_cast<double>(count(m)) / static_cast<double>(records_.size());
}

std::vector<double> MemoryStore::neighbor_distances(const BitVector& m) const {
  if (records_.empty()) throw std::domain_error("neighbor_distances: empty store");
  if (m.dim() != dim_) throw std::domain_error("neighbor_distances: dimension mismatch");
  std::vector<double> distances;
  distances.reserve(records_.size());
  for (const auto& [value, count] : counts_) {
    const double d = std::sqrt(static_cast<double>(hamming_distance(m, value)));
    distances.insert(distances.end(), count, d);
  }
  std::sort(distances.begin(), distances.end());
  return distances;
}

double MemoryStore::smoothed_probability(const BitVector& m, const NeighborhoodSpec& spec) const {
  if (spec.n < 1) throw std::domain_error("smoothed_probability: neighborhood size must be positive");
  if (records_.size() < static_cast<std::size_t>(spec.n)) {
    throw std::domain_error("smoothed_probability: store holds fewer records than the neighborhood size");
  }
  if (m.dim() != dim_) throw std::domain_error("smoothed_probability: dimension mismatch");

  // Work with integer squared distances so the ball radius is exact.
  std::vector<std::pair<int, std::size_t>> buckets;  // (hamming distance, count)
  buckets.reserve(counts_.size());
  for (const auto& [value, count] : counts_) {
    buckets.emplace_back(hamming_distance(m, value), count);
  }
  std::sort(buckets.begin(), buckets.end());

  std::size_t cumulative = 0;
  int radius_sq = 0;
  for (const auto& [dist, count] : buckets) {
    cumulative += count;
    if (cumulative >= static_cast<std::size_t>(spec.n)) {
      radius_sq = dist;
      break;
    }
  }
  // The ball is closed: every record tied at the radius is included, even
  // when that exceeds n.
  std::size_t records_in_ball = 0;
  for (const auto& [dist, count] : buckets) {
    if (dist <= radius_sq) records_in_ball += count;
  }

  const std::uint64_t ball = lattice_ball_size(dim_, std::sqrt(static_cast<double>(radius_sq)));
  return static_cast<double>(records_in_ball) /
         (static_cast<double>(ball) * static_cast<double>(records_.size()));
}

void MemoryStore::prune(std::size_t keep) {
  if (keep == 0) throw std::domain_error("prune: keep must be positive");
  while (records_.size() > keep) evict_oldest();
}

void MemoryStore::save(std::ostream& out) const {
  out << "memstore v1 dim=" << dim_ << "\n";
  for (const auto& record : records_) {
    out << record.seq << '\t' << record.vector.to_string() << "\n";
  }
}

void MemoryStore::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save(out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

MemoryStore MemoryStore::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header line", 1);
  int dim = 0;
  {
    std::istringstream header(line);
    std::string magic, version, dim_field;
    header >> magic >> version >> dim_field;
    if (magic != "memstore" || version != "v1" || dim_field.rfind("dim=", 0) != 0) {
      throw ParseError("bad header, expected 'memstore v1 dim=<d>'", 1);
    }
    const std::string digits = dim_field.substr(4);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dim);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || dim <= 0) {
      throw ParseError("bad dimension in header", 1);
    }
  }

  MemoryStore store(dim);
  std::size_t line_no = 1;
  std::uint64_t previous_seq = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.eof()) break;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected 'seq<TAB>bits'", line_no);
    std::uint64_t seq = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, seq);
    if (ec != std::errc() || ptr != line.data() + tab) {
      throw ParseError("bad sequence number", line_no);
    }
    if (seq <= previous_seq) throw ParseError("sequence numbers must be strictly increasing", line_no);
    const std::string_view bits(line.data() + tab + 1, line.size() - tab - 1);
    BitVector vector;
    try {
      vector = BitVector::from_string(bits);
    } catch (const std::domain_error& e) {
      throw ParseError(e.what(), line_no);
    }
    if (vector.dim() != dim) throw ParseError("record dimension does not match the header", line_no);
    store.records_.push_back({seq, vector});
    ++store.counts_[vector];
    previous_seq = seq;
  }
  store.next_seq_ = previous_seq + 1;
  return store;
}

MemoryStore MemoryStore::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load(in);
}

}  // namespace memcomp
