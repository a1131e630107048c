#include "memcomp/info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace memcomp {
namespace {

// Compensated summation over terms in a canonical (sorted) order, so the
// result does not depend on how the caller happened to order the entries.
double stable_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  double compensation = 0.0;
  for (double t : terms) {
    const double y = t - compensation;
    const double next = sum + y;
    compensation = (next - sum) - y;
    sum = next;
  }
  return sum;
}

}  // namespace

double self_information(double probability) {
  if (!(probability > 0.0) || probability > 1.0) {
    throw std::domain_error("self_information: probability must be in (0, 1]");
  }
  return -std::log(probability);
}

double entropy(const ProbDist& dist) {
  if (dist.size() == 0) throw std::domain_error("entropy: empty distribution");
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(dist.size()));
  for (int i = 0; i < dist.size(); ++i) {
    const double p = dist[i];
    if (p > 0.0) terms.push_back(-p * std::log(p));
  }
  return stable_sum(terms);
}

double max_entropy(std::size_t num_events) {
  if (num_events == 0) throw std::domain_error("max_entropy: need at least one event");
  return std::log(static_cast<double>(num_events));
}

double redundancy(const ProbDist& dist) {
  return max_entropy(static_cast<std::size_t>(dist.size())) - entropy(dist);
}

double cross_entropy(const ProbDist& p, const ProbDist& q) {
  if (p.size() != q.size()) {
    throw std::domain_error("cross_entropy: distributions must share a support size");
  }
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(p.size()));
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    terms.push_back(-p[i] * std::log(q[i]));
  }
  return stable_sum(terms);
}

double conservation_check(double p_event, double p_memory, double p_event_given_memory) {
  for (double p : {p_event, p_memory, p_event_given_memory}) {
    if (!(p > 0.0) || p > 1.0) {
      throw std::domain_error("conservation_check: probabilities must be in (0, 1]");
    }
  }
  if (std::abs(p_event - p_memory * p_event_given_memory) > kDistributionTolerance) {
    throw std::domain_error("conservation_check: p_event must factor as p_memory * p_event_given_memory");
  }
  const double lhs = self_information(p_event);
  const double rhs = self_information(p_memory) + self_information(p_event_given_memory);
  return std::abs(lhs - rhs);
}

}  // namespace memcomp
