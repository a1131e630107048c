#pragma once

#include "memcomp/codec.hpp"
#include "memcomp/datasets.hpp"
#include "memcomp/loss.hpp"
#include "memcomp/memory_store.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace memcomp {

/// One-sample-at-a-time streaming training; the store is updated after every
/// input (evaluate, then record).
struct TrainConfig {
  double alpha = 0.0;
  double beta = 0.0;
  double learning_rate = 0.1;
  int epochs = 1;
  int samples_per_epoch = 1000;
  int neighborhood_n = 1;
  double surrogate_bandwidth = 0.35;
  std::optional<std::size_t> memory_capacity;
  std::uint64_t seed = 0;

  LossWeights weights() const { return {alpha, beta}; }
};

void validate_config(const TrainConfig& config);

struct EpochStats {
  double mean_loss = 0.0;
  double mean_memory_term = 0.0;
  double mean_reconstruction_term = 0.0;
  std::size_t store_size = 0;
  std::size_t distinct_memories = 0;
  std::size_t rejected_steps = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t total_samples = 0;
  double first_quarter_mean_loss = 0.0;
  double last_quarter_mean_loss = 0.0;
  /// Expected empirical loss of the final codec/store under the true table.
  double heldout_exact_loss = 0.0;
  /// Exact optimum for the same weights, when the table is small enough to
  /// enumerate.
  std::optional<double> oracle_loss;
};

/// Kernel-smoothed probability estimate at real-valued middle-layer
/// coordinates:
///
///   sum_i exp(-|a - M_i|^2 / (2 b^2)) / (N * Z)
///
/// with Z the lattice partition sum of the kernel around the nearest lattice
/// point, (1 + exp(-1/(2 b^2)))^dim by separability. Differentiable in `a`,
/// approaches the exact record frequency as the bandwidth shrinks.
double density_surrogate(const MemoryStore& store, const Eigen::VectorXd& activations,
                         double bandwidth);

/// Gradient of ln density_surrogate with respect to the activations.
Eigen::VectorXd density_surrogate_log_gradient(const MemoryStore& store,
                                               const Eigen::VectorXd& activations,
                                               double bandwidth);

struct StepResult {
  /// Exact-estimator breakdown evaluated before the memory was recorded.
  LossBreakdown reported;
  /// True when the training-loss gradients were non-finite; the parameters
  /// were left unchanged (the memory is still recorded).
  bool rejected = false;
};

/// One streamed sample: forward with quantized middle layer, gradient step on
/// the surrogate loss, then record the quantized memory.
StepResult train_step(MlpCodec& codec, const BitVector& e, MemoryStore& store,
                      const TrainConfig& config);

/// Streams epochs * samples_per_epoch draws through train_step, pruning the
/// store to memory_capacity after each epoch.
TrainReport run_training(SampleStream& stream, MlpCodec& codec, MemoryStore& store,
                         const TrainConfig& config);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  Eigen::VectorXd analytic;
  Eigen::VectorXd finite_difference;
};

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, 1e-3).
double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Central finite differences of the piecewise-smooth training objective
/// against its analytic gradients (the straight-through path is excluded;
/// it is not a derivative of the objective). Refuses codecs with a middle
/// activation within 1e-3 of the quantization threshold, except for the
/// exactly symmetric point, which is reported as-is.
GradientCheckReport gradient_check(const MlpCodec& codec, const BitVector& e,
                                   const MemoryStore& store, const TrainConfig& config,
                                   double step = 1e-4);

}  // namespace memcomp
