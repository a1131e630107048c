#include "memcomp/trainer.hpp"

#include "memcomp/info.hpp"
#include "memcomp/oracle.hpp"

#include <cmath>
#include <limits>

namespace memcomp {
namespace {

constexpr double kDecoderClamp = 1e-7;

void validate_weights_config(const TrainConfig& c) {
  if (!std::isfinite(c.alpha) || c.alpha < 0.0 || !std::isfinite(c.beta) || c.beta < 0.0) {
    throw std::domain_error("train config: weights must be finite and non-negative");
  }
  if (!(c.learning_rate > 0.0) || c.learning_rate > 1.0) {
    throw std::domain_error("train config: learning rate must be in (0, 1]");
  }
  if (c.epochs < 0) throw std::domain_error("train config: epochs must be non-negative");
  if (c.samples_per_epoch < 0) throw std::domain_error("train config: samples_per_epoch must be non-negative");
  if (c.neighborhood_n < 1) throw std::domain_error("train config: neighborhood size must be positive");
  if (!(c.surrogate_bandwidth > 0.0)) throw std::domain_error("train config: bandwidth must be positive");
  if (c.memory_capacity && *c.memory_capacity == 0) {
    throw std::domain_error("train config: memory capacity must be positive");
  }
}

double clamp_prob(double p) { return std::clamp(p, kDecoderClamp, 1.0 - kDecoderClamp); }

// -(1+beta) * ln P(e | clamped decoder probs)
double clamped_reconstruction_term(const Eigen::VectorXd& probs, const BitVector& e, double beta) {
  double log_likelihood = 0.0;
  for (int j = 0; j < e.dim(); ++j) {
    const double p = clamp_prob(probs[j]);
    log_likelihood += std::log(e[j] == 1 ? p : 1.0 - p);
  }
  return -(1.0 + beta) * log_likelihood;
}

// dL/d p_j of the clamped reconstruction term; zero where the clamp is live.
Eigen::VectorXd reconstruction_grad(const Eigen::VectorXd& probs, const BitVector& e, double beta) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(probs.size());
  for (int j = 0; j < e.dim(); ++j) {
    const double p = probs[j];
    if (p < kDecoderClamp || p > 1.0 - kDecoderClamp) continue;
    grad[j] = -(1.0 + beta) * (e[j] == 1 ? 1.0 / p : -1.0 / (1.0 - p));
  }
  return grad;
}

bool memory_term_active(const MemoryStore& store, const TrainConfig& config) {
  return store.size() >= static_cast<std::size_t>(config.neighborhood_n);
}

// The differentiable training objective: surrogate memory term plus the
// clamped reconstruction term behind the hard quantization.
double training_objective(const MlpCodec& codec, const BitVector& e, const MemoryStore& store,
                          const TrainConfig& config) {
  const Eigen::VectorXd activations = dense_forward(codec.encoder(), e.as_real()).output;
  const BitVector memory = quantize(activations);
  const Eigen::VectorXd probs = dense_forward(codec.decoder(), memory.as_real()).output;
  double objective = clamped_reconstruction_term(probs, e, config.beta);
  if (memory_term_active(store, config)) {
    objective += -(1.0 + config.alpha) *
                 std::log(density_surrogate(store, activations, config.surrogate_bandwidth));
  }
  return objective;
}

struct Gradients {
  std::vector<LayerGrads> encoder;
  std::vector<LayerGrads> decoder;
  double objective = 0.0;
};

// Analytic gradients of the training objective. When `straight_through` is
// set, the reconstruction gradient also flows into the encoder through the
// clipped pass-through; that path is an estimator, not a derivative, so the
// finite-difference check runs without it.
Gradients analytic_gradients(const MlpCodec& codec, const BitVector& e, const MemoryStore& store,
                             const TrainConfig& config, bool straight_through) {
  Gradients grads;
  const ForwardTrace encoder_trace = dense_forward(codec.encoder(), e.as_real());
  const Eigen::VectorXd& activations = encoder_trace.output;
  const BitVector memory = quantize(activations);

  const ForwardTrace decoder_trace = dense_forward(codec.decoder(), memory.as_real());
  const Eigen::VectorXd& probs = decoder_trace.output;
  grads.objective = clamped_reconstruction_term(probs, e, config.beta);

  Eigen::VectorXd grad_at_memory;
  grads.decoder = dense_backward(codec.decoder(), decoder_trace,
                                 reconstruction_grad(probs, e, config.beta), &grad_at_memory);

  Eigen::VectorXd grad_at_activations = Eigen::VectorXd::Zero(activations.size());
  if (memory_term_active(store, config)) {
    const double density = density_surrogate(store, activations, config.surrogate_bandwidth);
    grads.objective += -(1.0 + config.alpha) * std::log(density);
    grad_at_activations =
        -(1.0 + config.alpha) *
        density_surrogate_log_gradient(store, activations, config.surrogate_bandwidth);
  }
  if (straight_through) {
    grad_at_activations += quantize_backward(activations, grad_at_memory);
  }
  grads.encoder = dense_backward(codec.encoder(), encoder_trace, grad_at_activations);
  return grads;
}

bool all_finite(const std::vector<LayerGrads>& grads) {
  for (const auto& g : grads) {
    if (!g.weights.allFinite() || !g.bias.allFinite()) return false;
  }
  return true;
}

void apply_update(std::vector<DenseLayer>& layers, const std::vector<LayerGrads>& grads,
                  double learning_rate) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weights -= learning_rate * grads[k].weights;
    layers[k].bias -= learning_rate * grads[k].bias;
  }
}

std::size_t parameter_count(const MlpCodec& codec) {
  std::size_t count = 0;
  for (const auto* stack : {&codec.encoder(), &codec.decoder()}) {
    for (const auto& layer : *stack) {
      count += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
    }
  }
  return count;
}

}  // namespace

void validate_config(const TrainConfig& config) { validate_weights_config(config); }

double density_surrogate(const MemoryStore& store, const Eigen::VectorXd& activations,
                         double bandwidth) {
  if (store.empty()) throw std::domain_error("density_surrogate: empty store");
  if (!(bandwidth > 0.0)) throw std::domain_error("density_surrogate: bandwidth must be positive");
  if (activations.size() != store.dim()) throw std::domain_error("density_surrogate: dimension mismatch");
  if (!activations.allFinite()) throw std::domain_error("density_surrogate: non-finite activations");

  const double inv_two_bw_sq = 1.0 / (2.0 * bandwidth * bandwidth);
  double kernel_sum = 0.0;
  for (const auto& [value, count] : store.counts()) {
    const double sq = (activations - value.as_real()).squaredNorm();
    kernel_sum += static_cast<double>(count) * std::exp(-sq * inv_two_bw_sq);
  }
  const double per_coordinate = 1.0 + std::exp(-inv_two_bw_sq);
  const double partition = std::pow(per_coordinate, store.dim());
  return kernel_sum / (static_cast<double>(store.size()) * partition);
}

Eigen::VectorXd density_surrogate_log_gradient(const MemoryStore& store,
                                               const Eigen::VectorXd& activations,
                                               double bandwidth) {
  if (store.empty()) throw std::domain_error("density_surrogate_log_gradient: empty store");
  const double inv_bw_sq = 1.0 / (bandwidth * bandwidth);
  double kernel_sum = 0.0;
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(activations.size());
  for (const auto& [value, count] : store.counts()) {
    const Eigen::VectorXd diff = value.as_real() - activations;
    const double kernel = static_cast<double>(count) * std::exp(-0.5 * diff.squaredNorm() * inv_bw_sq);
    kernel_sum += kernel;
    weighted += kernel * diff;
  }
  if (kernel_sum == 0.0) {
    return Eigen::VectorXd::Constant(activations.size(), std::numeric_limits<double>::quiet_NaN());
  }
  return weighted * (inv_bw_sq / kernel_sum);
}

StepResult train_step(MlpCodec& codec, const BitVector& e, MemoryStore& store,
                      const TrainConfig& config) {
  validate_config(config);
  if (e.dim() != codec.d_in()) throw std::domain_error("train_step: input dimension mismatch");
  if (store.dim() != codec.d_mem()) throw std::domain_error("train_step: store dimension mismatch");

  const BitVector memory = codec.encode(e);

  // Reported loss uses the exact smoothed estimator against the store as it
  // stands before this sample is recorded.
  StepResult result;
  const Eigen::VectorXd probs = codec.decode_probs(memory);
  result.reported.reconstruction_term = clamped_reconstruction_term(probs, e, config.beta);
  if (memory_term_active(store, config)) {
    const double p_memory = store.smoothed_probability(memory, {config.neighborhood_n});
    result.reported.memory_term = -(1.0 + config.alpha) * std::log(p_memory);
  }
  result.reported.total = result.reported.memory_term + result.reported.reconstruction_term;

  const Gradients grads = analytic_gradients(codec, e, store, config, /*straight_through=*/true);
  if (!std::isfinite(grads.objective) || !all_finite(grads.encoder) || !all_finite(grads.decoder)) {
    result.rejected = true;
  } else {
    apply_update(codec.encoder(), grads.encoder, config.learning_rate);
    apply_update(codec.decoder(), grads.decoder, config.learning_rate);
  }

  store.record(memory);
  return result;
}

TrainReport run_training(SampleStream& stream, MlpCodec& codec, MemoryStore& store,
                         const TrainConfig& config) {
  validate_config(config);
  TrainReport report;
  std::vector<double> per_sample_totals;
  per_sample_totals.reserve(static_cast<std::size_t>(config.epochs) *
                            static_cast<std::size_t>(config.samples_per_epoch));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochStats stats;
    double sum_total = 0.0, sum_memory = 0.0, sum_recon = 0.0;
    for (int s = 0; s < config.samples_per_epoch; ++s) {
      const StepResult step = train_step(codec, stream.next(), store, config);
      sum_total += step.reported.total;
      sum_memory += step.reported.memory_term;
      sum_recon += step.reported.reconstruction_term;
      if (step.rejected) ++stats.rejected_steps;
      per_sample_totals.push_back(step.reported.total);
    }
    if (config.memory_capacity && store.size() > *config.memory_capacity) {
      store.prune(*config.memory_capacity);
    }
    const double n = std::max(1, config.samples_per_epoch);
    stats.mean_loss = sum_total / n;
    stats.mean_memory_term = sum_memory / n;
    stats.mean_reconstruction_term = sum_recon / n;
    stats.store_size = store.size();
    stats.distinct_memories = store.distinct_count();
    report.epochs.push_back(stats);
  }

  report.total_samples = per_sample_totals.size();
  if (!per_sample_totals.empty()) {
    const std::size_t quarter = std::max<std::size_t>(1, per_sample_totals.size() / 4);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < quarter; ++i) {
      first += per_sample_totals[i];
      last += per_sample_totals[per_sample_totals.size() - 1 - i];
    }
    report.first_quarter_mean_loss = first / static_cast<double>(quarter);
    report.last_quarter_mean_loss = last / static_cast<double>(quarter);
  }

  const EventTable& table = stream.table();
  if (memory_term_active(store, config)) {
    double heldout = 0.0;
    for (std::size_t i = 0; i < table.events.size(); ++i) {
      const double p = table.dist[static_cast<int>(i)];
      if (p == 0.0) continue;
      heldout += p * empirical_loss(codec, store, {config.neighborhood_n}, table.events[i],
                                    config.weights())
                         .total;
    }
    report.heldout_exact_loss = heldout;
  }

  try {
    OracleProblem problem{table.events, table.dist, 1 << codec.d_mem(), config.weights()};
    report.oracle_loss = solve(problem).best_expected_loss;
  } catch (const std::domain_error&) {
    // Table too large to enumerate; leave the comparison empty.
  }
  return report;
}

double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::domain_error("max_relative_error: length mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-3});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

GradientCheckReport gradient_check(const MlpCodec& codec, const BitVector& e,
                                   const MemoryStore& store, const TrainConfig& config,
                                   double step) {
  validate_config(config);
  if (!(step > 0.0)) throw std::domain_error("gradient_check: step must be positive");

  const Eigen::VectorXd activations = dense_forward(codec.encoder(), e.as_real()).output;
  for (Eigen::Index j = 0; j < activations.size(); ++j) {
    const double gap = std::abs(activations[j] - 0.5);
    // The exactly symmetric point is reported as-is; anything else this
    // close to the threshold makes finite differences meaningless.
    if (gap > 0.0 && gap < 1e-3) {
      throw std::domain_error(
          "gradient_check: middle activation within 1e-3 of the quantization threshold "
          "(activation " + std::to_string(activations[j]) + " at node " + std::to_string(j) + ")");
    }
  }

  const Gradients grads = analytic_gradients(codec, e, store, config, /*straight_through=*/false);

  GradientCheckReport report;
  const std::size_t count = parameter_count(codec);
  report.analytic.resize(static_cast<Eigen::Index>(count));
  report.finite_difference.resize(static_cast<Eigen::Index>(count));

  Eigen::Index flat = 0;
  for (const auto* stack : {&grads.encoder, &grads.decoder}) {
    for (const auto& layer : *stack) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
          report.analytic[flat++] = layer.weights(r, c);
        }
      }
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) report.analytic[flat++] = layer.bias[i];
    }
  }

  MlpCodec probe = codec;
  const auto probe_objective = [&]() { return training_objective(probe, e, store, config); };
  flat = 0;
  for (auto* stack : {&probe.encoder(), &probe.decoder()}) {
    for (auto& layer : *stack) {
      const auto central_difference = [&](double& parameter) {
        const double saved = parameter;
        parameter = saved + step;
        const double plus = probe_objective();
        parameter = saved - step;
        const double minus = probe_objective();
        parameter = saved;
        report.finite_difference[flat++] = (plus - minus) / (2.0 * step);
      };
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) central_difference(layer.weights(r, c));
      }
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) central_difference(layer.bias[i]);
    }
  }

  report.max_relative_error = max_relative_error(report.analytic, report.finite_difference);
  return report;
}

}  // namespace memcomp
