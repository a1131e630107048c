#include "memcomp/codec.hpp"

#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace memcomp {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Deterministic uniform in [0,1) from the raw 64-bit stream; keeps the
// initialization independent of the standard library's distribution choices.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  char buffer[40];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buffer, sizeof buffer, "%.17g", m(r, c));
      out << (r == 0 && c == 0 ? "" : " ") << buffer;
    }
  }
  out << "\n";
}

std::vector<double> parse_doubles(const std::string& line, std::size_t line_no, std::size_t expected) {
  std::istringstream stream(line);
  std::vector<double> values;
  double v = 0.0;
  while (stream >> v) values.push_back(v);
  if (!stream.eof() || values.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " numeric values", line_no);
  }
  return values;
}

}  // namespace

double conditional_likelihood(const Eigen::VectorXd& probs, const BitVector& e) {
  if (probs.size() != e.dim()) throw std::domain_error("conditional_likelihood: length mismatch");
  double likelihood = 1.0;
  for (int j = 0; j < e.dim(); ++j) {
    likelihood *= e[j] == 1 ? probs[j] : 1.0 - probs[j];
  }
  return likelihood;
}

BitVector quantize(const Eigen::VectorXd& squashed) {
  Eigen::VectorXi bits(squashed.size());
  for (Eigen::Index j = 0; j < squashed.size(); ++j) {
    if (!std::isfinite(squashed[j])) throw std::domain_error("quantize: non-finite activation");
    bits[j] = squashed[j] >= 0.5 ? 1 : 0;
  }
  return BitVector(std::move(bits));
}

Eigen::VectorXd quantize_backward(const Eigen::VectorXd& squashed,
                                  const Eigen::VectorXd& upstream,
                                  double window) {
  if (squashed.size() != upstream.size()) throw std::domain_error("quantize_backward: length mismatch");
  Eigen::VectorXd downstream = Eigen::VectorXd::Zero(squashed.size());
  for (Eigen::Index j = 0; j < squashed.size(); ++j) {
    if (std::abs(squashed[j] - 0.5) < window) downstream[j] = upstream[j];
  }
  return downstream;
}

std::vector<Eigen::VectorXd> optimal_tabular_decoder(const std::vector<int>& encode_map,
                                                     const ProbDist& dist,
                                                     const std::vector<BitVector>& events,
                                                     int num_memories) {
  if (encode_map.size() != events.size() || dist.size() != static_cast<int>(events.size())) {
    throw std::domain_error("optimal_tabular_decoder: size mismatch");
  }
  const int d_in = events.front().dim();
  std::vector<double> mass(static_cast<std::size_t>(num_memories), 0.0);
  std::vector<Eigen::VectorXd> ones(static_cast<std::size_t>(num_memories),
                                    Eigen::VectorXd::Zero(d_in));
  for (std::size_t i = 0; i < events.size(); ++i) {
    const int m = encode_map[i];
    if (m < 0 || m >= num_memories) throw std::domain_error("optimal_tabular_decoder: memory index out of range");
    mass[static_cast<std::size_t>(m)] += dist[static_cast<int>(i)];
    ones[static_cast<std::size_t>(m)] += dist[static_cast<int>(i)] * events[i].as_real();
  }
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(static_cast<std::size_t>(num_memories));
  for (int m = 0; m < num_memories; ++m) {
    if (mass[static_cast<std::size_t>(m)] > 0.0) {
      rows.push_back(ones[static_cast<std::size_t>(m)] / mass[static_cast<std::size_t>(m)]);
    } else {
      rows.push_back(Eigen::VectorXd::Constant(d_in, 0.5));
    }
  }
  return rows;
}

TabularCodec::TabularCodec(std::vector<BitVector> events, std::vector<int> encode_map,
                           std::vector<Eigen::VectorXd> decode_probs, int memory_dim)
    : events_(std::move(events)),
      encode_map_(std::move(encode_map)),
      decode_probs_(std::move(decode_probs)),
      memory_dim_(memory_dim) {
  if (events_.empty()) throw std::domain_error("TabularCodec: no events");
  if (encode_map_.size() != events_.size()) throw std::domain_error("TabularCodec: encode map size mismatch");
  if (memory_dim_ <= 0 || memory_dim_ > 62) throw std::domain_error("TabularCodec: memory dimension out of range");
  if (decode_probs_.size() > (std::size_t{1} << memory_dim_)) {
    throw std::domain_error("TabularCodec: more memories than the memory dimension can express");
  }
  const int d = events_.front().dim();
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i].dim() != d) throw std::domain_error("TabularCodec: events must share a dimension");
    if (!event_lookup_.emplace(events_[i], static_cast<int>(i)).second) {
      throw std::domain_error("TabularCodec: duplicate event");
    }
    if (encode_map_[i] < 0 || encode_map_[i] >= num_memories()) {
      throw std::domain_error("TabularCodec: encode map entry out of range");
    }
  }
  for (const auto& row : decode_probs_) {
    if (row.size() != d) throw std::domain_error("TabularCodec: decoder row length mismatch");
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      if (!(row[j] >= 0.0 && row[j] <= 1.0)) {
        throw std::domain_error("TabularCodec: decoder probabilities must lie in [0,1]");
      }
    }
  }
}

int TabularCodec::encode_index(int event_index) const {
  if (event_index < 0 || event_index >= num_events()) throw std::domain_error("encode_index: out of range");
  return encode_map_[static_cast<std::size_t>(event_index)];
}

int TabularCodec::event_index(const BitVector& e) const {
  const auto it = event_lookup_.find(e);
  if (it == event_lookup_.end()) throw std::domain_error("event_index: unknown event");
  return it->second;
}

BitVector TabularCodec::memory_vector(int memory_index) const {
  if (memory_index < 0 || memory_index >= num_memories()) {
    throw std::domain_error("memory_vector: out of range");
  }
  return BitVector::from_index(static_cast<std::uint64_t>(memory_index), memory_dim_);
}

BitVector TabularCodec::encode(const BitVector& e) const {
  return memory_vector(encode_index(event_index(e)));
}

Eigen::VectorXd TabularCodec::decode_probs(const BitVector& m) const {
  if (m.dim() != memory_dim_) throw std::domain_error("decode_probs: dimension mismatch");
  const auto index = m.to_index();
  if (index >= static_cast<std::uint64_t>(num_memories())) {
    throw std::domain_error("decode_probs: memory value outside the codec's range");
  }
  return decode_probs_[static_cast<std::size_t>(index)];
}

ForwardTrace dense_forward(const std::vector<DenseLayer>& layers, const Eigen::VectorXd& input) {
  ForwardTrace trace;
  Eigen::VectorXd x = input;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    trace.inputs.push_back(x);
    Eigen::VectorXd z = layers[k].weights * x + layers[k].bias;
    trace.pre_activations.push_back(z);
    if (k + 1 < layers.size()) {
      x = z.array().tanh();
    } else {
      x = z.unaryExpr([](double v) { return sigmoid(v); });
    }
  }
  trace.output = x;
  return trace;
}

std::vector<LayerGrads> dense_backward(const std::vector<DenseLayer>& layers,
                                       const ForwardTrace& trace,
                                       const Eigen::VectorXd& grad_output,
                                       Eigen::VectorXd* grad_input) {
  std::vector<LayerGrads> grads(layers.size());
  Eigen::VectorXd delta;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const Eigen::VectorXd& z = trace.pre_activations[k];
    Eigen::VectorXd grad_at_activation;
    if (k + 1 == layers.size()) {
      const Eigen::VectorXd a = z.unaryExpr([](double v) { return sigmoid(v); });
      grad_at_activation = grad_output.array() * a.array() * (1.0 - a.array());
    } else {
      const Eigen::VectorXd a = z.array().tanh();
      grad_at_activation = delta.array() * (1.0 - a.array().square());
    }
    grads[k].weights = grad_at_activation * trace.inputs[k].transpose();
    grads[k].bias = grad_at_activation;
    delta = layers[k].weights.transpose() * grad_at_activation;
  }
  if (grad_input != nullptr) *grad_input = delta;
  return grads;
}

MlpCodec::MlpCodec(std::vector<DenseLayer> encoder, std::vector<DenseLayer> decoder)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
  if (encoder_.empty() || decoder_.empty()) throw std::domain_error("MlpCodec: empty layer stack");
  if (encoder_.back().weights.rows() != decoder_.front().weights.cols()) {
    throw std::domain_error("MlpCodec: middle layer widths disagree");
  }
  if (decoder_.back().weights.rows() != encoder_.front().weights.cols()) {
    throw std::domain_error("MlpCodec: output width must equal the input width");
  }
}

MlpCodec MlpCodec::random(int d_in, const std::vector<int>& encoder_hidden, int d_mem,
                          const std::vector<int>& decoder_hidden, std::uint64_t seed) {
  if (d_in <= 0 || d_mem <= 0) throw std::domain_error("MlpCodec: dimensions must be positive");
  std::mt19937_64 rng(seed);
  const auto make_stack = [&rng](int in, const std::vector<int>& hidden, int out) {
    std::vector<int> sizes;
    sizes.push_back(in);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
      if (sizes[k] <= 0 || sizes[k + 1] <= 0) throw std::domain_error("MlpCodec: layer sizes must be positive");
      const double scale = std::sqrt(6.0 / (sizes[k] + sizes[k + 1]));
      DenseLayer layer;
      layer.weights.resize(sizes[k + 1], sizes[k]);
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
          layer.weights(r, c) = (2.0 * uniform01(rng) - 1.0) * scale;
        }
      }
      layer.bias = Eigen::VectorXd::Zero(sizes[k + 1]);
      layers.push_back(std::move(layer));
    }
    return layers;
  };
  auto encoder = make_stack(d_in, encoder_hidden, d_mem);
  auto decoder = make_stack(d_mem, decoder_hidden, d_in);
  return MlpCodec(std::move(encoder), std::move(decoder));
}

int MlpCodec::d_in() const { return static_cast<int>(encoder_.front().weights.cols()); }

int MlpCodec::d_mem() const { return static_cast<int>(encoder_.back().weights.rows()); }

Eigen::VectorXd MlpCodec::middle_activations(const BitVector& e) const {
  if (e.dim() != d_in()) throw std::domain_error("middle_activations: dimension mismatch");
  return dense_forward(encoder_, e.as_real()).output;
}

BitVector MlpCodec::encode(const BitVector& e) const { return quantize(middle_activations(e)); }

Eigen::VectorXd MlpCodec::decode_probs(const BitVector& m) const {
  if (m.dim() != d_mem()) throw std::domain_error("decode_probs: dimension mismatch");
  return dense_forward(decoder_, m.as_real()).output;
}

void MlpCodec::save(std::ostream& out) const {
  out << "mlpcodec v1\n";
  const auto write_stack = [&out](const char* name, const std::vector<DenseLayer>& layers) {
    out << name << " " << layers.size() << "\n";
    for (const auto& layer : layers) {
      out << "layer " << layer.weights.rows() << " " << layer.weights.cols() << "\n";
      write_matrix(out, layer.weights);
      write_matrix(out, layer.bias);
    }
  };
  write_stack("encoder", encoder_);
  write_stack("decoder", decoder_);
}

void MlpCodec::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save(out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

MlpCodec MlpCodec::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError("unexpected end of file", line_no + 1);
    ++line_no;
    return line;
  };
  if (next_line() != "mlpcodec v1") throw ParseError("bad header, expected 'mlpcodec v1'", line_no);

  const auto read_stack = [&](const std::string& name) {
    std::istringstream header(next_line());
    std::string tag;
    std::size_t layer_count = 0;
    header >> tag >> layer_count;
    if (tag != name || header.fail() || layer_count == 0) {
      throw ParseError("expected '" + name + " <count>'", line_no);
    }
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k < layer_count; ++k) {
      std::istringstream shape(next_line());
      std::string layer_tag;
      Eigen::Index rows = 0, cols = 0;
      shape >> layer_tag >> rows >> cols;
      if (layer_tag != "layer" || shape.fail() || rows <= 0 || cols <= 0) {
        throw ParseError("expected 'layer <rows> <cols>'", line_no);
      }
      DenseLayer layer;
      const auto weights = parse_doubles(next_line(), line_no, static_cast<std::size_t>(rows * cols));
      layer.weights.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          layer.weights(r, c) = weights[static_cast<std::size_t>(r * cols + c)];
        }
      }
      const auto bias = parse_doubles(next_line(), line_no, static_cast<std::size_t>(rows));
      layer.bias = Eigen::VectorXd::Map(bias.data(), rows);
      layers.push_back(std::move(layer));
    }
    return layers;
  };
  auto encoder = read_stack("encoder");
  auto decoder = read_stack("decoder");
  return MlpCodec(std::move(encoder), std::move(decoder));
}

MlpCodec MlpCodec::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load(in);
}

}  // namespace memcomp
