#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>

namespace memcomp {

/// Absolute tolerance on the total mass of an explicit distribution.
inline constexpr double kDistributionTolerance = 1e-12;

/// Thrown by the text-format loaders; `line()` is the 1-based line (or CSV
/// row) the parse failed on.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : std::runtime_error(message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Fixed-length vector with entries in {0,1}. Inputs, memories and
/// enumerated events are all bit vectors.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(Eigen::VectorXi bits);
  BitVector(std::initializer_list<int> bits);

  static BitVector zeros(int dim);
  /// Parses a "0110"-style string.
  static BitVector from_string(std::string_view text);
  /// Big-endian binary expansion of `index` over `dim` bits.
  static BitVector from_index(std::uint64_t index, int dim);

  int dim() const { return static_cast<int>(bits_.size()); }
  int operator[](int i) const { return bits_[i]; }
  const Eigen::VectorXi& bits() const { return bits_; }

  /// The vector as the real coordinates of a hypercube corner.
  Eigen::VectorXd as_real() const { return bits_.cast<double>(); }
  std::uint64_t to_index() const;
  std::string to_string() const;

  friend bool operator==(const BitVector& a, const BitVector& b) {
    return a.bits_.size() == b.bits_.size() && (a.bits_.array() == b.bits_.array()).all();
  }
  friend std::strong_ordering operator<=>(const BitVector& a, const BitVector& b);

 private:
  Eigen::VectorXi bits_;
};

/// Number of coordinates in which `a` and `b` differ. Squared euclidean
/// distance between bit vectors equals their hamming distance.
int hamming_distance(const BitVector& a, const BitVector& b);

/// Explicit finite probability distribution indexed by event id.
///
/// Construction validates the invariants: every entry non-negative and the
/// total mass equal to one within kDistributionTolerance.
class ProbDist {
 public:
  ProbDist() = default;
  explicit ProbDist(Eigen::VectorXd probs);
  ProbDist(std::initializer_list<double> probs);

  static ProbDist uniform(int num_events);

  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_[i]; }
  const Eigen::VectorXd& probs() const { return probs_; }

 private:
  Eigen::VectorXd probs_;
};

}  // namespace memcomp
