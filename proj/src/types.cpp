#include "memcomp/types.hpp"

#include <cmath>

namespace memcomp {

BitVector::BitVector(Eigen::VectorXi bits) : bits_(std::move(bits)) {
  for (int i = 0; i < bits_.size(); ++i) {
    if (bits_[i] != 0 && bits_[i] != 1) {
      throw std::domain_error("BitVector entries must be 0 or 1");
    }
  }
}

BitVector::BitVector(std::initializer_list<int> bits)
    : BitVector(Eigen::VectorXi::Map(bits.begin(), static_cast<Eigen::Index>(bits.size()))) {}

BitVector BitVector::zeros(int dim) {
  if (dim <= 0) throw std::domain_error("BitVector dimension must be positive");
  BitVector v;
  v.bits_ = Eigen::VectorXi::Zero(dim);
  return v;
}

BitVector BitVector::from_string(std::string_view text) {
  if (text.empty()) throw std::domain_error("empty bit string");
  BitVector v;
  v.bits_.resize(static_cast<Eigen::Index>(text.size()));
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '0') {
      v.bits_[static_cast<Eigen::Index>(i)] = 0;
    } else if (text[i] == '1') {
      v.bits_[static_cast<Eigen::Index>(i)] = 1;
    } else {
      throw std::domain_error("bit string may contain only '0' and '1'");
    }
  }
  return v;
}

BitVector BitVector::from_index(std::uint64_t index, int dim) {
  if (dim <= 0 || dim > 63) throw std::domain_error("BitVector dimension out of range");
  if (dim < 64 && index >> dim != 0) {
    throw std::domain_error("index does not fit in the requested dimension");
  }
  BitVector v;
  v.bits_.resize(dim);
  for (int j = 0; j < dim; ++j) {
    v.bits_[j] = static_cast<int>((index >> (dim - 1 - j)) & 1u);
  }
  return v;
}

std::uint64_t BitVector::to_index() const {
  if (dim() > 63) throw std::domain_error("BitVector too wide for an index");
  std::uint64_t index = 0;
  for (int j = 0; j < dim(); ++j) {
    index = (index << 1) | static_cast<std::uint64_t>(bits_[j]);
  }
  return index;
}

std::string BitVector::to_string() const {
  std::string s(static_cast<std::size_t>(dim()), '0');
  for (int j = 0; j < dim(); ++j) {
    if (bits_[j] == 1) s[static_cast<std::size_t>(j)] = '1';
  }
  return s;
}

std::strong_ordering operator<=>(const BitVector& a, const BitVector& b) {
  const int n = std::min(a.dim(), b.dim());
  for (int i = 0; i < n; ++i) {
    if (a.bits_[i] != b.bits_[i]) {
      return a.bits_[i] < b.bits_[i] ? std::strong_ordering::less : std::strong_ordering::greater;
    }
  }
  return a.dim() <=> b.dim();
}

int hamming_distance(const BitVector& a, const BitVector& b) {
  if (a.dim() != b.dim()) throw std::domain_error("hamming_distance: dimension mismatch");
  return (a.bits().array() != b.bits().array()).count();
}

ProbDist::ProbDist(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw std::domain_error("distribution must have at least one event");
  double sum = 0.0;
  for (int i = 0; i < probs_.size(); ++i) {
    const double p = probs_[i];
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::domain_error("probability entries must be finite and non-negative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    throw std::domain_error("probabilities must sum to one");
  }
}

ProbDist::ProbDist(std::initializer_list<double> probs)
    : ProbDist(Eigen::VectorXd::Map(probs.begin(), static_cast<Eigen::Index>(probs.size()))) {}

ProbDist ProbDist::uniform(int num_events) {
  if (num_events <= 0) throw std::domain_error("uniform distribution needs at least one event");
  return ProbDist(Eigen::VectorXd::Constant(num_events, 1.0 / num_events));
}

}  // namespace memcomp
