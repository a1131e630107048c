#include "memcomp/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace memcomp {

void validate_table(const EventTable& table) {
  if (table.events.empty()) throw std::domain_error("event table: no events");
  if (static_cast<int>(table.events.size()) != table.dist.size()) {
    throw std::domain_error("event table: events and probabilities disagree in size");
  }
  if (!table.labels.empty() && table.labels.size() != table.events.size()) {
    throw std::domain_error("event table: label count mismatch");
  }
  const int dim = table.events.front().dim();
  std::set<BitVector> seen;
  for (const auto& e : table.events) {
    if (e.dim() != dim) throw std::domain_error("event table: events must share a dimension");
    if (!seen.insert(e).second) throw std::domain_error("event table: duplicate event");
  }
}

EventTable four_state_table() {
  EventTable table{{BitVector{0, 0}, BitVector{0, 1}, BitVector{1, 0}, BitVector{1, 1}},
                   ProbDist{0.6, 0.1, 0.1, 0.2},
                   {"E1", "E2", "E3", "E4"}};
  return table;
}

EventTable playing_cards_table() {
  static const char* suits[] = {"S", "H", "D", "C"};
  EventTable table;
  table.events.reserve(52);
  table.labels.reserve(52);
  for (int card = 0; card < 52; ++card) {
    table.events.push_back(BitVector::from_index(static_cast<std::uint64_t>(card), 6));
    table.labels.push_back(std::string(suits[card / 13]) + std::to_string(card % 13 + 1));
  }
  table.dist = ProbDist::uniform(52);
  return table;
}

std::vector<int> suit_coarsening_map() {
  std::vector<int> map(52);
  for (int card = 0; card < 52; ++card) map[static_cast<std::size_t>(card)] = card / 13;
  return map;
}

BitVector suit_memory(int suit_index) {
  if (suit_index < 0 || suit_index > 3) throw std::domain_error("suit_memory: suit index out of range");
  return BitVector::from_index(static_cast<std::uint64_t>(suit_index), 2);
}

EventTable correlated_bits_table(int dim, double coupling) {
  if (dim < 1 || dim > 16) throw std::domain_error("correlated_bits_table: dim must be in [1, 16]");
  if (!(coupling >= 0.0 && coupling <= 1.0)) {
    throw std::domain_error("correlated_bits_table: coupling must be in [0, 1]");
  }
  const std::uint64_t n = std::uint64_t{1} << dim;
  EventTable table;
  table.events.reserve(n);
  Eigen::VectorXd probs(static_cast<Eigen::Index>(n));
  for (std::uint64_t idx = 0; idx < n; ++idx) {
    table.events.push_back(BitVector::from_index(idx, dim));
    double p = (1.0 - coupling) / static_cast<double>(n);
    if (idx == 0 || idx == n - 1) p += coupling / 2.0;
    probs[static_cast<Eigen::Index>(idx)] = p;
  }
  table.dist = ProbDist(std::move(probs));
  return table;
}

SampleStream::SampleStream(EventTable table, std::uint64_t seed)
    : table_(std::move(table)), rng_(seed), seed_(seed) {
  validate_table(table_);
  cumulative_.reserve(static_cast<std::size_t>(table_.dist.size()));
  double sum = 0.0;
  for (int i = 0; i < table_.dist.size(); ++i) {
    sum += table_.dist[i];
    cumulative_.push_back(sum);
  }
  cumulative_.back() = 1.0;
}

BitVector SampleStream::next() {
  // Raw 53-bit mantissa draw; identical across standard library
  // implementations, unlike the distribution adapters.
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto index = std::min<std::size_t>(
      static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  return table_.events[index];
}

void SampleStream::skip(std::uint64_t count) {
  for (std::uint64_t i = 0; i < count; ++i) rng_();
}

std::vector<BitVector> sample(SampleStream& stream, std::size_t count) {
  std::vector<BitVector> draws;
  draws.reserve(count);
  for (std::size_t i = 0; i < count; ++i) draws.push_back(stream.next());
  return draws;
}

BitVector stack_memories_as_input(const std::vector<const MemoryStore*>& stores,
                                  std::size_t aligned_index) {
  if (stores.empty()) throw std::domain_error("stack_memories_as_input: no stores");
  int total_dim = 0;
  for (const auto* store : stores) {
    if (store == nullptr) throw std::domain_error("stack_memories_as_input: null store");
    if (aligned_index >= store->size()) {
      throw std::domain_error("stack_memories_as_input: aligned index out of range");
    }
    total_dim += store->dim();
  }
  Eigen::VectorXi bits(total_dim);
  int offset = 0;
  for (const auto* store : stores) {
    const BitVector& v = store->records()[aligned_index].vector;
    bits.segment(offset, v.dim()) = v.bits();
    offset += v.dim();
  }
  return BitVector(std::move(bits));
}

EventTable load_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "bits,probability") {
    throw ParseError("expected header 'bits,probability'", 1);
  }
  EventTable table;
  std::vector<double> probs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.eof()) break;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected 'bits,probability'", line_no);
    try {
      table.events.push_back(BitVector::from_string(std::string_view(line).substr(0, comma)));
    } catch (const std::domain_error& e) {
      throw ParseError(e.what(), line_no);
    }
    std::size_t parsed = 0;
    double p = 0.0;
    try {
      p = std::stod(line.substr(comma + 1), &parsed);
    } catch (const std::exception&) {
      throw ParseError("bad probability", line_no);
    }
    if (parsed != line.size() - comma - 1) throw ParseError("trailing characters after probability", line_no);
    probs.push_back(p);
  }
  if (probs.empty()) throw ParseError("table has no rows", line_no);
  try {
    table.dist = ProbDist(Eigen::VectorXd::Map(probs.data(), static_cast<Eigen::Index>(probs.size())));
    validate_table(table);
  } catch (const std::domain_error& e) {
    throw ParseError(e.what(), line_no);
  }
  return table;
}

void save_table_csv(const EventTable& table, const std::filesystem::path& path) {
  validate_table(table);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "bits,probability\n";
  char buffer[40];
  for (std::size_t i = 0; i < table.events.size(); ++i) {
    std::snprintf(buffer, sizeof buffer, "%.17g", table.dist[static_cast<int>(i)]);
    out << table.events[i].to_string() << ',' << buffer << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace memcomp
