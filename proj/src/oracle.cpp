#include "memcomp/oracle.hpp"

#include "memcomp/info.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <thread>

namespace memcomp {
namespace {

constexpr double kEnumerationGuard = 1e8;
constexpr double kTieTolerance = 1e-12;

std::uint64_t checked_total(std::size_t num_events, int num_memories) {
  if (num_events == 0) throw std::domain_error("enumeration: need at least one event");
  if (num_memories <= 0) throw std::domain_error("enumeration: need at least one memory");
  double total = 1.0;
  for (std::size_t i = 0; i < num_events; ++i) {
    total *= static_cast<double>(num_memories);
    if (total > kEnumerationGuard) {
      throw std::domain_error("enumeration refused: search space exceeds 1e8 maps");
    }
  }
  return static_cast<std::uint64_t>(total);
}

// Relabels memories in order of first appearance, the canonical form used to
// count ties up to memory relabeling.
std::vector<int> canonical_map(const std::vector<int>& map) {
  std::vector<int> relabel(map.size(), -1);
  std::vector<int> out;
  out.reserve(map.size());
  int next = 0;
  for (int m : map) {
    if (relabel[static_cast<std::size_t>(m)] < 0) relabel[static_cast<std::size_t>(m)] = next++;
    out.push_back(relabel[static_cast<std::size_t>(m)]);
  }
  return out;
}

struct ScanResult {
  double min_loss = std::numeric_limits<double>::infinity();
  // All maps with loss within kTieTolerance of min_loss seen so far.
  std::vector<std::pair<double, std::vector<int>>> near_minima;

  void offer(double loss, const std::vector<int>& map) {
    if (loss < min_loss) {
      min_loss = loss;
      std::erase_if(near_minima,
                    [&](const auto& c) { return c.first > min_loss + kTieTolerance; });
    }
    if (loss <= min_loss + kTieTolerance) near_minima.emplace_back(loss, map);
  }

  void merge(const ScanResult& other) {
    if (other.min_loss < min_loss) min_loss = other.min_loss;
    for (const auto& c : other.near_minima) {
      if (c.first <= min_loss + kTieTolerance) near_minima.push_back(c);
    }
    std::erase_if(near_minima, [&](const auto& c) { return c.first > min_loss + kTieTolerance; });
  }
};

int scan_threads() {
  if (const char* env = std::getenv("MEMCOMP_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void validate_problem(const OracleProblem& problem) {
  if (problem.events.empty()) throw std::domain_error("oracle: no events");
  if (problem.dist.size() != static_cast<int>(problem.events.size())) {
    throw std::domain_error("oracle: distribution size mismatch");
  }
  if (problem.num_memories <= 0) throw std::domain_error("oracle: need at least one memory");
}

int memory_dim_for(int num_memories) {
  int dim = 1;
  while ((1 << dim) < num_memories) ++dim;
  return dim;
}

using DecoderBuilder = std::vector<Eigen::VectorXd> (*)(const std::vector<int>&, const OracleProblem&,
                                                        double);

std::vector<Eigen::VectorXd> analytic_decoder(const std::vector<int>& map,
                                              const OracleProblem& problem, double) {
  return optimal_tabular_decoder(map, problem.dist, problem.events, problem.num_memories);
}

// Grid search per memory and node. The expected reconstruction code length
// splits into one convex sum per output node, so scanning each node's grid
// independently finds the joint grid optimum.
std::vector<Eigen::VectorXd> grid_decoder(const std::vector<int>& map, const OracleProblem& problem,
                                          double grid_step) {
  const int d_in = problem.events.front().dim();
  const auto steps = static_cast<int>(std::llround(1.0 / grid_step));
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(static_cast<std::size_t>(problem.num_memories));
  for (int m = 0; m < problem.num_memories; ++m) {
    double mass = 0.0;
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (map[i] == m) mass += problem.dist[static_cast<int>(i)];
    }
    if (mass == 0.0) {
      rows.push_back(Eigen::VectorXd::Constant(d_in, 0.5));
      continue;
    }
    Eigen::VectorXd row(d_in);
    for (int j = 0; j < d_in; ++j) {
      double best_objective = std::numeric_limits<double>::infinity();
      double best_p = 0.0;
      for (int g = 0; g <= steps; ++g) {
        const double p = std::min(1.0, g * grid_step);
        double objective = 0.0;
        for (std::size_t i = 0; i < map.size(); ++i) {
          if (map[i] != m || problem.dist[static_cast<int>(i)] == 0.0) continue;
          const double bit_prob = problem.events[i][j] == 1 ? p : 1.0 - p;
          objective += bit_prob > 0.0
                           ? -problem.dist[static_cast<int>(i)] * std::log(bit_prob)
                           : std::numeric_limits<double>::infinity();
        }
        if (objective < best_objective) {
          best_objective = objective;
          best_p = p;
        }
      }
      row[j] = best_p;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

OracleSolution scan(const OracleProblem& problem, DecoderBuilder build_decoder, double grid_step) {
  validate_problem(problem);
  const std::uint64_t total = checked_total(problem.events.size(), problem.num_memories);

  const auto evaluate = [&](std::uint64_t begin, std::uint64_t end, ScanResult& result) {
    for (std::uint64_t index = begin; index < end; ++index) {
      const auto map = EncodingEnumerator::at(index, problem.events.size(), problem.num_memories);
      const auto decoder = build_decoder(map, problem, grid_step);
      const auto memory_probs = pushforward_memory_probs(map, problem.dist, problem.num_memories);
      const double loss = detail::expected_loss_over_events(
          map, decoder, problem.events, problem.dist, memory_probs.probs(), problem.weights);
      result.offer(loss, map);
    }
  };

  const int threads = static_cast<int>(
      std::min<std::uint64_t>(static_cast<std::uint64_t>(scan_threads()), total));
  ScanResult result;
  if (threads <= 1 || total < 1024) {
    evaluate(0, total, result);
  } else {
    std::vector<ScanResult> partial(static_cast<std::size_t>(threads));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> workers;
    const std::uint64_t chunk = (total + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::uint64_t begin = t * chunk;
      const std::uint64_t end = std::min(total, begin + chunk);
      workers.emplace_back([&, t, begin, end] {
        try {
          evaluate(begin, end, partial[static_cast<std::size_t>(t)]);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& error : errors) {
      if (error) std::rethrow_exception(error);
    }
    for (const auto& p : partial) result.merge(p);
  }

  const auto best = std::min_element(result.near_minima.begin(), result.near_minima.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  if (best == result.near_minima.end()) throw std::logic_error("oracle scan produced no candidate");

  std::set<std::vector<int>> canonical;
  for (const auto& [loss, map] : result.near_minima) canonical.insert(canonical_map(map));

  OracleSolution solution{
      TabularCodec(problem.events, best->second, build_decoder(best->second, problem, grid_step),
                   memory_dim_for(problem.num_memories)),
      best->first, canonical.size()};
  return solution;
}

}  // namespace

EncodingEnumerator::EncodingEnumerator(std::size_t num_events, int num_memories)
    : num_events_(num_events),
      num_memories_(num_memories),
      total_(checked_total(num_events, num_memories)),
      current_(num_events, 0) {}

std::optional<std::vector<int>> EncodingEnumerator::next() {
  if (position_ >= total_) return std::nullopt;
  std::vector<int> out = current_;
  ++position_;
  // Odometer increment with the first event as the most significant digit.
  for (std::size_t i = num_events_; i-- > 0;) {
    if (++current_[i] < num_memories_) break;
    current_[i] = 0;
  }
  return out;
}

std::vector<int> EncodingEnumerator::at(std::uint64_t index, std::size_t num_events,
                                        int num_memories) {
  std::vector<int> map(num_events, 0);
  for (std::size_t i = num_events; i-- > 0;) {
    map[i] = static_cast<int>(index % static_cast<std::uint64_t>(num_memories));
    index /= static_cast<std::uint64_t>(num_memories);
  }
  return map;
}

double expected_self_information(const ProbDist& dist) { return entropy(dist); }

OracleSolution solve(const OracleProblem& problem) {
  return scan(problem, &analytic_decoder, 0.0);
}

OracleSolution solve_with_grid_decoder(const OracleProblem& problem, double grid_step) {
  validate_problem(problem);
  if (problem.events.front().dim() > 3) {
    throw std::domain_error("solve_with_grid_decoder: refused for d_in > 3");
  }
  if (!(grid_step >= 1e-3)) {
    throw std::domain_error("solve_with_grid_decoder: grid_step must be at least 1e-3");
  }
  return scan(problem, &grid_decoder, grid_step);
}

std::string partition_string(const std::vector<int>& encode_map,
                             const std::vector<std::string>& labels) {
  if (!labels.empty() && labels.size() != encode_map.size()) {
    throw std::domain_error("partition_string: label count mismatch");
  }
  const std::vector<int> canon = canonical_map(encode_map);
  const int groups = *std::max_element(canon.begin(), canon.end()) + 1;
  std::string out = "{";
  for (int g = 0; g < groups; ++g) {
    if (g > 0) out += '|';
    bool first = true;
    for (std::size_t i = 0; i < canon.size(); ++i) {
      if (canon[i] != g) continue;
      if (!first) out += ',';
      out += labels.empty() ? "E" + std::to_string(i + 1) : labels[i];
      first = false;
    }
  }
  out += '}';
  return out;
}

}  // namespace memcomp
