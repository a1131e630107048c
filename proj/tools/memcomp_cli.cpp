#include "memcomp/datasets.hpp"
#include "memcomp/info.hpp"
#include "memcomp/memory_store.hpp"
#include "memcomp/oracle.hpp"
#include "memcomp/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string nats(double value) {
  if (value > -0.00005 && value < 0.0) value = 0.0;  // avoid "-0.0000"
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.4f", value);
  return buffer;
}

std::string fixed6(double value) {
  if (value > -0.0000005 && value < 0.0) value = 0.0;
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.6f", value);
  return buffer;
}

// Primary outputs go to stdout and, when an output directory is given, to a
// byte-identical file there. Timestamps only ever land in the sidecar log.
void emit(const std::string& content, const std::optional<fs::path>& out_dir,
          const std::string& filename) {
  std::cout << content;
  if (!out_dir) return;
  fs::create_directories(*out_dir);
  std::ofstream file(*out_dir / filename);
  if (!file) throw std::runtime_error("cannot write " + (*out_dir / filename).string());
  file << content;
  if (!file) throw std::runtime_error("failed writing " + (*out_dir / filename).string());
}

void write_sidecar_log(const std::optional<fs::path>& out_dir, const std::string& command) {
  if (!out_dir) return;
  std::ofstream log(*out_dir / "run.log", std::ios::app);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  log << command << " finished at " << now << "\n";
}

std::vector<memcomp::LossWeights> parse_weights(const std::string& spec) {
  std::vector<memcomp::LossWeights> weights;
  if (spec.empty()) return weights;
  std::istringstream stream(spec);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw std::runtime_error("bad --weights entry '" + item + "', expected alpha:beta");
    }
    std::size_t used = 0;
    memcomp::LossWeights w;
    w.alpha = std::stod(item.substr(0, colon), &used);
    if (used != colon) throw std::runtime_error("bad alpha in --weights entry '" + item + "'");
    w.beta = std::stod(item.substr(colon + 1), &used);
    if (used != item.size() - colon - 1) {
      throw std::runtime_error("bad beta in --weights entry '" + item + "'");
    }
    weights.push_back(w);
  }
  return weights;
}

int run_analyze(const fs::path& table_path, const std::optional<fs::path>& out_dir) {
  const memcomp::EventTable table = memcomp::load_table_csv(table_path);
  std::ostringstream out;
  out << "events=" << table.events.size() << "\n";
  out << "H=" << nats(memcomp::entropy(table.dist)) << "\n";
  out << "H_max=" << nats(memcomp::max_entropy(table.events.size())) << "\n";
  out << "R=" << nats(memcomp::redundancy(table.dist)) << "\n";
  const int dim = table.events.front().dim();
  for (int j = 0; j < dim; ++j) {
    double marginal = 0.0;
    for (std::size_t i = 0; i < table.events.size(); ++i) {
      if (table.events[i][j] == 1) marginal += table.dist[static_cast<int>(i)];
    }
    out << "marginal_" << j + 1 << "=" << nats(marginal) << "\n";
  }
  emit(out.str(), out_dir, "analyze.txt");
  write_sidecar_log(out_dir, "analyze");
  return 0;
}

int run_oracle(const fs::path& table_path, const std::string& weights_spec, int num_memories,
               const std::optional<fs::path>& out_dir) {
  const memcomp::EventTable table = memcomp::load_table_csv(table_path);
  const auto weights = parse_weights(weights_spec);
  std::ostringstream out;
  out << "alpha,beta,min_loss,argmin_count,partition,decoders\n";
  for (const auto& w : weights) {
    memcomp::OracleProblem problem{table.events, table.dist,
                                   num_memories > 0 ? num_memories
                                                    : static_cast<int>(table.events.size()),
                                   w};
    const memcomp::OracleSolution solution = memcomp::solve(problem);
    out << nats(w.alpha) << ',' << nats(w.beta) << ',' << nats(solution.best_expected_loss) << ','
        << solution.argmin_count << ",\""
        << memcomp::partition_string(solution.best_codec.encode_map(), table.labels) << "\",\"";
    const auto& rows = solution.best_codec.decoder_rows();
    for (std::size_t m = 0; m < rows.size(); ++m) {
      if (m > 0) out << '|';
      out << 'M' << m << ":(";
      for (Eigen::Index j = 0; j < rows[m].size(); ++j) {
        if (j > 0) out << ',';
        out << nats(rows[m][j]);
      }
      out << ')';
    }
    out << "\"\n";
  }
  emit(out.str(), out_dir, "oracle.csv");
  write_sidecar_log(out_dir, "oracle");
  return 0;
}

struct TrainSettings {
  memcomp::TrainConfig config;
  memcomp::EventTable table;
  int d_mem = 2;
  std::vector<int> encoder_hidden;
  std::vector<int> decoder_hidden;
  std::optional<fs::path> resume_dir;
};

TrainSettings load_train_settings(const fs::path& config_path) {
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open " + config_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("bad config: " + std::string(e.what()));
  }

  TrainSettings settings;
  if (doc.contains("table_builtin")) {
    const std::string name = doc.at("table_builtin").get<std::string>();
    if (name == "four_state") {
      settings.table = memcomp::four_state_table();
    } else if (name == "playing_cards") {
      settings.table = memcomp::playing_cards_table();
    } else {
      throw std::runtime_error("unknown table_builtin '" + name + "'");
    }
  } else if (doc.contains("table")) {
    fs::path table_path = doc.at("table").get<std::string>();
    if (table_path.is_relative()) table_path = config_path.parent_path() / table_path;
    settings.table = memcomp::load_table_csv(table_path);
  } else {
    throw std::runtime_error("config needs 'table' or 'table_builtin'");
  }

  auto& c = settings.config;
  c.alpha = doc.value("alpha", 0.0);
  c.beta = doc.value("beta", 0.0);
  c.learning_rate = doc.value("learning_rate", 0.1);
  c.epochs = doc.value("epochs", 1);
  c.samples_per_epoch = doc.value("samples_per_epoch", 1000);
  c.neighborhood_n = doc.value("neighborhood_n", 1);
  c.surrogate_bandwidth = doc.value("surrogate_bandwidth", 0.35);
  if (doc.contains("memory_capacity") && !doc.at("memory_capacity").is_null()) {
    c.memory_capacity = doc.at("memory_capacity").get<std::size_t>();
  }
  c.seed = doc.value("seed", std::uint64_t{0});
  settings.d_mem = doc.value("d_mem", 2);
  settings.encoder_hidden = doc.value("encoder_hidden", std::vector<int>{8});
  settings.decoder_hidden = doc.value("decoder_hidden", std::vector<int>{8});
  if (doc.contains("resume_dir") && !doc.at("resume_dir").is_null()) {
    fs::path dir = doc.at("resume_dir").get<std::string>();
    if (dir.is_relative()) dir = config_path.parent_path() / dir;
    settings.resume_dir = dir;
  }
  return settings;
}

int read_progress(const fs::path& dir) {
  std::ifstream in(dir / "progress.txt");
  if (!in) throw std::runtime_error("cannot open " + (dir / "progress.txt").string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("epochs_done=", 0) == 0) return std::stoi(line.substr(12));
  }
  throw std::runtime_error("no epochs_done entry in " + (dir / "progress.txt").string());
}

int run_train(const fs::path& config_path, const fs::path& out_dir,
              std::optional<std::uint64_t> seed_override) {
  TrainSettings settings = load_train_settings(config_path);
  if (seed_override) settings.config.seed = *seed_override;
  memcomp::validate_config(settings.config);

  const int d_in = settings.table.events.front().dim();
  int epochs_done = 0;
  std::optional<memcomp::MlpCodec> codec;
  std::optional<memcomp::MemoryStore> store;
  if (settings.resume_dir) {
    codec = memcomp::MlpCodec::load_file(*settings.resume_dir / "codec.txt");
    store = memcomp::MemoryStore::load_file(*settings.resume_dir / "store.txt");
    epochs_done = read_progress(*settings.resume_dir);
    if (epochs_done > settings.config.epochs) {
      throw std::runtime_error("resume point is beyond the configured epoch count");
    }
  } else {
    // Weight init draws from seed+1 so it does not alias the sample stream.
    codec = memcomp::MlpCodec::random(d_in, settings.encoder_hidden, settings.d_mem,
                                      settings.decoder_hidden, settings.config.seed + 1);
    store = memcomp::MemoryStore(settings.d_mem);
  }

  memcomp::SampleStream stream(settings.table, settings.config.seed);
  stream.skip(static_cast<std::uint64_t>(epochs_done) *
              static_cast<std::uint64_t>(settings.config.samples_per_epoch));

  memcomp::TrainConfig run_config = settings.config;
  run_config.epochs = settings.config.epochs - epochs_done;
  const memcomp::TrainReport report = memcomp::run_training(stream, *codec, *store, run_config);

  std::ostringstream csv;
  csv << "epoch,mean_loss,mean_memory_term,mean_reconstruction_term,store_size,"
         "distinct_memories,rejected_steps\n";
  for (std::size_t i = 0; i < report.epochs.size(); ++i) {
    const auto& e = report.epochs[i];
    csv << epochs_done + static_cast<int>(i) + 1 << ',' << nats(e.mean_loss) << ','
        << nats(e.mean_memory_term) << ',' << nats(e.mean_reconstruction_term) << ','
        << e.store_size << ',' << e.distinct_memories << ',' << e.rejected_steps << "\n";
  }
  emit(csv.str(), out_dir, "report.csv");

  std::ostringstream summary;
  summary << "alpha=" << nats(settings.config.alpha) << "\n";
  summary << "beta=" << nats(settings.config.beta) << "\n";
  summary << "seed=" << settings.config.seed << "\n";
  summary << "total_samples=" << report.total_samples << "\n";
  summary << "first_quarter_mean_loss=" << nats(report.first_quarter_mean_loss) << "\n";
  summary << "last_quarter_mean_loss=" << nats(report.last_quarter_mean_loss) << "\n";
  summary << "heldout_exact_loss=" << nats(report.heldout_exact_loss) << "\n";
  if (report.oracle_loss) summary << "oracle_loss=" << nats(*report.oracle_loss) << "\n";
  summary << "final_store_size=" << store->size() << "\n";
  summary << "distinct_memories=" << store->distinct_count() << "\n";
  emit(summary.str(), out_dir, "summary.txt");

  fs::create_directories(out_dir);
  codec->save_file(out_dir / "codec.txt");
  store->save_file(out_dir / "store.txt");
  {
    std::ofstream progress(out_dir / "progress.txt");
    progress << "epochs_done=" << settings.config.epochs << "\n";
    progress << "samples_done="
             << static_cast<std::uint64_t>(settings.config.epochs) *
                    static_cast<std::uint64_t>(settings.config.samples_per_epoch)
             << "\n";
  }
  write_sidecar_log(out_dir, "train");
  return 0;
}

int run_memory(const std::string& mode, const fs::path& store_path, int top, int neighborhood_n,
               const std::optional<fs::path>& out_dir) {
  const memcomp::MemoryStore store = memcomp::MemoryStore::load_file(store_path);
  std::ostringstream out;
  std::string filename;
  if (mode == "stats") {
    filename = "stats.txt";
    out << "N=" << store.size() << "\n";
    out << "distinct=" << store.distinct_count() << "\n";
    std::vector<std::pair<memcomp::BitVector, std::size_t>> ranked(store.counts().begin(),
                                                                   store.counts().end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    const int limit = std::min<int>(top, static_cast<int>(ranked.size()));
    for (int i = 0; i < limit; ++i) {
      const auto& [value, count] = ranked[static_cast<std::size_t>(i)];
      out << "top" << i + 1 << "=" << value.to_string() << " p=" << nats(store.exact_probability(value))
          << " n=" << count << "\n";
    }
  } else if (mode == "density") {
    filename = "density.csv";
    if (store.dim() > 12) {
      throw std::runtime_error("density refused: store dimension above 12");
    }
    if (store.size() < static_cast<std::size_t>(neighborhood_n)) {
      throw std::runtime_error("density refused: store smaller than the neighborhood size");
    }
    out << "bits,probability\n";
    const std::uint64_t lattice = std::uint64_t{1} << store.dim();
    for (std::uint64_t idx = 0; idx < lattice; ++idx) {
      const auto point = memcomp::BitVector::from_index(idx, store.dim());
      out << point.to_string() << ','
          << fixed6(store.smoothed_probability(point, {neighborhood_n})) << "\n";
    }
  } else if (mode == "export") {
    filename = "export.txt";
    std::ostringstream raw;
    store.save(raw);
    out << raw.str();
  } else {
    throw std::runtime_error("unknown memory mode '" + mode + "', expected stats|density|export");
  }
  emit(out.str(), out_dir, filename);
  write_sidecar_log(out_dir, "memory " + mode);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compression-loss experiments over discrete memory codes"};
  app.require_subcommand(1);
  app.footer("The oracle scan honours the MEMCOMP_THREADS environment variable.");

  std::string table_path, weights_spec, config_path, store_path, memory_mode, out_path;
  int num_memories = 0, top = 5, neighborhood_n = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* analyze = app.add_subcommand("analyze", "Entropy, redundancy and marginals of a table");
  analyze->add_option("--table", table_path, "EventTable CSV")->required();
  analyze->add_option("--out", out_path, "Output directory");

  auto* oracle = app.add_subcommand("oracle", "Exact minima of the weighted loss");
  oracle->add_option("--table", table_path, "EventTable CSV")->required();
  oracle->add_option("--weights", weights_spec, "alpha:beta[,alpha:beta...]")->required();
  oracle->add_option("--memories", num_memories, "Memory count (default: one per event)");
  oracle->add_option("--out", out_path, "Output directory");

  auto* train = app.add_subcommand("train", "Stream gradient training from a config file");
  train->add_option("--config", config_path, "JSON config")->required();
  train->add_option("--out", out_path, "Output directory")->required();
  train->add_option("--seed", seed, "Override the config seed")->each([&seed_set](const std::string&) {
    seed_set = true;
  });

  auto* memory = app.add_subcommand("memory", "Inspect a memory store file");
  memory->add_option("mode", memory_mode, "stats|density|export")->required();
  memory->add_option("--store", store_path, "Store file")->required();
  memory->add_option("--top", top, "Rows for stats (default 5)");
  memory->add_option("--n", neighborhood_n, "Neighborhood size for density (default 1)");
  memory->add_option("--out", out_path, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::optional<fs::path> out_dir =
        out_path.empty() ? std::nullopt : std::optional<fs::path>(out_path);
    if (analyze->parsed()) return run_analyze(table_path, out_dir);
    if (oracle->parsed()) return run_oracle(table_path, weights_spec, num_memories, out_dir);
    if (train->parsed()) {
      return run_train(config_path, fs::path(out_path),
                       seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt);
    }
    if (memory->parsed()) return run_memory(memory_mode, store_path, top, neighborhood_n, out_dir);
  } catch (const memcomp::ParseError& e) {
    std::cerr << "error: line " << e.line() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
