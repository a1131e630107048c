#include "memcomp/trainer.hpp"

#include "memcomp/info.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace memcomp;

namespace {

MemoryStore seeded_store(int dim, int records, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MemoryStore store(dim);
  for (int i = 0; i < records; ++i) {
    Eigen::VectorXi bits(dim);
    for (int j = 0; j < dim; ++j) bits[j] = static_cast<int>(rng() & 1u);
    store.record(BitVector(std::move(bits)));
  }
  return store;
}

TrainConfig basic_config() {
  TrainConfig config;
  config.alpha = 0.1;
  config.beta = 0.1;
  config.learning_rate = 0.1;
  config.neighborhood_n = 1;
  config.surrogate_bandwidth = 0.4;
  return config;
}

bool codecs_equal(const MlpCodec& a, const MlpCodec& b) {
  for (const auto stacks : {std::pair{&a.encoder(), &b.encoder()}, std::pair{&a.decoder(), &b.decoder()}}) {
    for (std::size_t k = 0; k < stacks.first->size(); ++k) {
      if (((*stacks.first)[k].weights.array() != (*stacks.second)[k].weights.array()).any()) return false;
      if (((*stacks.first)[k].bias.array() != (*stacks.second)[k].bias.array()).any()) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("density surrogate peaks at a recorded point and decays with distance") {
  MemoryStore store(3);
  store.record(BitVector{1, 0, 1});
  const Eigen::Vector3d center(1.0, 0.0, 1.0);
  double previous = density_surrogate(store, center, 0.4);
  for (double t : {0.1, 0.3, 0.6, 0.9}) {
    const Eigen::Vector3d away = center + t * Eigen::Vector3d(-1.0, 1.0, 0.0);
    const double value = density_surrogate(store, away, 0.4);
    CHECK(value < previous);
    previous = value;
  }
  MemoryStore empty(3);
  CHECK_THROWS_AS(density_surrogate(empty, center, 0.4), std::domain_error);
  CHECK_THROWS_AS(density_surrogate(store, center, 0.0), std::domain_error);
}

TEST_CASE("density surrogate approaches the exact frequency at small bandwidth") {
  MemoryStore store(2);
  store.record(BitVector{0, 0});
  store.record(BitVector{0, 0});
  store.record(BitVector{0, 1});
  store.record(BitVector{1, 1});
  for (const auto& [value, count] : store.counts()) {
    const double surrogate = density_surrogate(store, value.as_real(), 0.05);
    CHECK(std::abs(surrogate - store.exact_probability(value)) <= 1e-3);
  }
}

TEST_CASE("density surrogate is flat on a uniform store") {
  const int dim = 4;
  MemoryStore store(dim);
  for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << dim); ++idx) {
    store.record(BitVector::from_index(idx, dim));
  }
  for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << dim); ++idx) {
    const double value = density_surrogate(store, BitVector::from_index(idx, dim).as_real(), 0.6);
    CHECK(std::abs(value - 1.0 / 16.0) <= 1e-6);
  }
}

TEST_CASE("density surrogate log gradient matches finite differences") {
  const MemoryStore store = seeded_store(3, 40, 4);
  Eigen::Vector3d point(0.3, 0.8, 0.45);
  const Eigen::VectorXd grad = density_surrogate_log_gradient(store, point, 0.5);
  for (int j = 0; j < 3; ++j) {
    Eigen::Vector3d plus = point, minus = point;
    plus[j] += 1e-6;
    minus[j] -= 1e-6;
    const double fd = (std::log(density_surrogate(store, plus, 0.5)) -
                       std::log(density_surrogate(store, minus, 0.5))) /
                      2e-6;
    CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("first step bootstraps without a memory term") {
  MlpCodec codec = MlpCodec::random(2, {4}, 2, {4}, 8);
  MemoryStore store(2);
  const StepResult result = train_step(codec, BitVector{0, 1}, store, basic_config());
  CHECK(result.reported.memory_term == 0.0);
  CHECK(result.reported.reconstruction_term > 0.0);
  CHECK(store.size() == 1);
}

TEST_CASE("store grows by one record per step") {
  MlpCodec codec = MlpCodec::random(2, {4}, 2, {4}, 9);
  MemoryStore store(2);
  TrainConfig config = basic_config();
  SampleStream stream(four_state_table(), 5);
  for (int k = 1; k <= 200; ++k) {
    train_step(codec, stream.next(), store, config);
    REQUIRE(store.size() == static_cast<std::size_t>(k));
  }
}

TEST_CASE("repeated identical input drives the reconstruction term down") {
  MlpCodec codec = MlpCodec::random(2, {6}, 2, {6}, 0);
  MemoryStore store(2);
  TrainConfig config;
  config.alpha = 0.0;
  config.beta = 0.0;
  config.learning_rate = 0.5;
  config.surrogate_bandwidth = 0.4;
  const BitVector input{1, 0};
  LossBreakdown last;
  for (int i = 0; i < 500; ++i) last = train_step(codec, input, store, config).reported;
  CHECK(last.reconstruction_term <= 0.05);
}

TEST_CASE("gradient check against central differences on a 4-2-4 codec") {
  const MlpCodec codec = MlpCodec::random(4, {}, 2, {}, 0);
  const MemoryStore store = seeded_store(2, 30, 11);
  const GradientCheckReport report =
      gradient_check(codec, BitVector{1, 0, 1, 1}, store, basic_config());
  CHECK(report.max_relative_error <= 1e-3);
}

TEST_CASE("gradient check against central differences on a 4-3-4 codec") {
  const MlpCodec codec = MlpCodec::random(4, {}, 3, {}, 0);
  const MemoryStore store = seeded_store(3, 50, 12);
  const GradientCheckReport report =
      gradient_check(codec, BitVector{0, 1, 1, 0}, store, basic_config());
  CHECK(report.max_relative_error <= 1e-3);
}

TEST_CASE("gradient check reports the symmetric zero-weight codec") {
  MlpCodec codec = MlpCodec::random(3, {}, 2, {}, 2);
  for (auto& layer : codec.encoder()) {
    layer.weights.setZero();
    layer.bias.setZero();
  }
  const GradientCheckReport report =
      gradient_check(codec, BitVector{1, 1, 0}, seeded_store(2, 20, 13), basic_config());
  CHECK(std::isfinite(report.max_relative_error));
}

TEST_CASE("gradient check refuses near-threshold activations") {
  MlpCodec codec = MlpCodec::random(3, {}, 2, {}, 2);
  for (auto& layer : codec.encoder()) {
    layer.weights.setZero();
    layer.bias.setConstant(2e-3);  // squashes to just above one half
  }
  CHECK_THROWS_AS(gradient_check(codec, BitVector{1, 1, 0}, seeded_store(2, 20, 13), basic_config()),
                  std::domain_error);
}

TEST_CASE("a corrupted gradient is flagged by the error metric") {
  const MlpCodec codec = MlpCodec::random(4, {}, 3, {}, 0);
  const MemoryStore store = seeded_store(3, 50, 12);
  const GradientCheckReport report =
      gradient_check(codec, BitVector{0, 1, 1, 0}, store, basic_config());
  Eigen::VectorXd corrupted = report.analytic;
  corrupted[0] += 1.0;
  CHECK(max_relative_error(corrupted, report.finite_difference) > 1e-1);
}

TEST_CASE("zero epochs leave everything untouched") {
  MlpCodec codec = MlpCodec::random(2, {4}, 2, {4}, 3);
  const MlpCodec before = codec;
  MemoryStore store(2);
  SampleStream stream(four_state_table(), 1);
  TrainConfig config = basic_config();
  config.epochs = 0;
  const TrainReport report = run_training(stream, codec, store, config);
  CHECK(report.epochs.empty());
  CHECK(report.total_samples == 0);
  CHECK(store.empty());
  CHECK(codecs_equal(codec, before));
}

TEST_CASE("capacity pruning holds the store at its limit after every epoch") {
  MlpCodec codec = MlpCodec::random(2, {4}, 2, {4}, 4);
  MemoryStore store(2);
  SampleStream stream(four_state_table(), 2);
  TrainConfig config = basic_config();
  config.epochs = 3;
  config.samples_per_epoch = 1000;
  config.memory_capacity = 100;
  const TrainReport report = run_training(stream, codec, store, config);
  for (const auto& epoch : report.epochs) CHECK(epoch.store_size == 100);
  CHECK(store.size() == 100);
}

TEST_CASE("training is deterministic given the seed") {
  const auto run = [] {
    MlpCodec codec = MlpCodec::random(2, {8}, 2, {8}, 101);
    MemoryStore store(2);
    SampleStream stream(four_state_table(), 100);
    TrainConfig config = basic_config();
    config.alpha = 0.0;
    config.beta = 0.01;
    config.epochs = 4;
    config.samples_per_epoch = 500;
    const TrainReport report = run_training(stream, codec, store, config);
    return std::pair{report, codec};
  };
  const auto [report_a, codec_a] = run();
  const auto [report_b, codec_b] = run();
  REQUIRE(report_a.epochs.size() == report_b.epochs.size());
  for (std::size_t i = 0; i < report_a.epochs.size(); ++i) {
    CHECK(report_a.epochs[i].mean_loss == report_b.epochs[i].mean_loss);
    CHECK(report_a.epochs[i].distinct_memories == report_b.epochs[i].distinct_memories);
  }
  CHECK(report_a.first_quarter_mean_loss == report_b.first_quarter_mean_loss);
  CHECK(report_a.last_quarter_mean_loss == report_b.last_quarter_mean_loss);
  CHECK(report_a.heldout_exact_loss == report_b.heldout_exact_loss);
  CHECK(codecs_equal(codec_a, codec_b));
}

TEST_CASE("a split run resumed from its midpoint matches the straight run") {
  TrainConfig config = basic_config();
  config.alpha = 0.0;
  config.beta = 0.01;
  config.epochs = 4;
  config.samples_per_epoch = 400;

  MlpCodec straight = MlpCodec::random(2, {8}, 2, {8}, 55);
  MemoryStore straight_store(2);
  SampleStream straight_stream(four_state_table(), 54);
  run_training(straight_stream, straight, straight_store, config);

  MlpCodec split = MlpCodec::random(2, {8}, 2, {8}, 55);
  MemoryStore split_store(2);
  SampleStream first_half(four_state_table(), 54);
  TrainConfig half = config;
  half.epochs = 2;
  run_training(first_half, split, split_store, half);
  SampleStream second_half(four_state_table(), 54);
  second_half.skip(2 * 400);
  run_training(second_half, split, split_store, half);

  CHECK(codecs_equal(straight, split));
  CHECK(split_store.size() == straight_store.size());
  CHECK(split_store.counts() == straight_store.counts());
}

TEST_CASE("smoke training run descends and respects the code length floor") {
  MlpCodec codec = MlpCodec::random(2, {8}, 2, {8}, 1);
  MemoryStore store(2);
  SampleStream stream(four_state_table(), 0);
  TrainConfig config;
  config.alpha = 0.0;
  config.beta = 0.01;
  config.learning_rate = 0.15;
  config.epochs = 6;
  config.samples_per_epoch = 1000;
  config.surrogate_bandwidth = 0.4;
  const TrainReport report = run_training(stream, codec, store, config);
  CHECK(report.last_quarter_mean_loss <= report.first_quarter_mean_loss);
  CHECK(report.heldout_exact_loss >= 0.0);
  CHECK(report.heldout_exact_loss >= entropy(four_state_table().dist) - 0.05);
  REQUIRE(report.oracle_loss.has_value());
  CHECK(*report.oracle_loss == doctest::Approx(1.0889).epsilon(1e-3));
}
