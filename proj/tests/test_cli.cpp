#include "memcomp/datasets.hpp"
#include "memcomp/memory_store.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "memcomp_cli_capture.txt";
  const std::string command =
      std::string(MEMCOMP_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}

fs::path write_four_state_table() {
  const fs::path path = fs::temp_directory_path() / "memcomp_cli_table.csv";
  memcomp::save_table_csv(memcomp::four_state_table(), path);
  return path;
}

std::string value_of(const std::string& output, const std::string& key) {
  std::istringstream lines(output);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  return "";
}

}  // namespace

TEST_CASE("analyze reports the table measures") {
  const auto table = write_four_state_table();
  const CommandResult result = run_cli("analyze --table " + table.string());
  CHECK(result.exit_code == 0);
  CHECK(value_of(result.output, "H") == "1.0889");
  CHECK(value_of(result.output, "H_max") == "1.3863");
  CHECK(value_of(result.output, "R") == "0.2974");
  CHECK(value_of(result.output, "marginal_1") == "0.3000");
  CHECK(value_of(result.output, "marginal_2") == "0.3000");
}

TEST_CASE("analyze fails cleanly on a missing table") {
  const CommandResult result = run_cli("analyze --table /nonexistent/table.csv");
  CHECK(result.exit_code != 0);
  CHECK(result.output.rfind("error:", 0) == 0);
  CHECK(result.output.find('\n') == result.output.size() - 1);  // single line
}

TEST_CASE("analyze reports the offending row of a bad table") {
  const fs::path path = fs::temp_directory_path() / "memcomp_cli_bad.csv";
  {
    std::ofstream out(path);
    out << "bits,probability\n00,0.5\nbad-row\n";
  }
  const CommandResult result = run_cli("analyze --table " + path.string());
  CHECK(result.exit_code != 0);
  CHECK(result.output.find("line 3") != std::string::npos);
}

TEST_CASE("oracle emits one row per weight setting, bytes stable across runs") {
  const auto table = write_four_state_table();
  const fs::path out_a = fs::temp_directory_path() / "memcomp_cli_oracle_a";
  const fs::path out_b = fs::temp_directory_path() / "memcomp_cli_oracle_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  const std::string args = "oracle --table " + table.string() + " --weights 0:0.01,0.5:0";
  CHECK(run_cli(args + " --out " + out_a.string()).exit_code == 0);
  CHECK(run_cli(args + " --out " + out_b.string()).exit_code == 0);

  std::ifstream a(out_a / "oracle.csv"), b(out_b / "oracle.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().find("1.0889") != std::string::npos);
  CHECK(sa.str().find("{E1|E2|E3|E4}") != std::string::npos);
  CHECK(sa.str().find("1.2217") != std::string::npos);
}

TEST_CASE("oracle with an empty weight list prints only the header") {
  const auto table = write_four_state_table();
  const CommandResult result = run_cli("oracle --table " + table.string() + " --weights \"\"");
  CHECK(result.exit_code == 0);
  CHECK(result.output == "alpha,beta,min_loss,argmin_count,partition,decoders\n");
}

TEST_CASE("memory stats and export on a small store") {
  const fs::path store_path = fs::temp_directory_path() / "memcomp_cli_store.txt";
  {
    memcomp::MemoryStore store(2);
    for (int i = 0; i < 6; ++i) store.record(memcomp::BitVector{0, 0});
    for (int i = 0; i < 4; ++i) store.record(memcomp::BitVector{0, 1});
    store.save_file(store_path);
  }
  const CommandResult stats = run_cli("memory stats --store " + store_path.string());
  CHECK(stats.exit_code == 0);
  CHECK(value_of(stats.output, "N") == "10");
  CHECK(value_of(stats.output, "distinct") == "2");
  CHECK(stats.output.find("top1=00 p=0.6000 n=6") != std::string::npos);

  const CommandResult density = run_cli("memory density --store " + store_path.string());
  CHECK(density.exit_code == 0);
  // One row per lattice point plus the header.
  CHECK(std::count(density.output.begin(), density.output.end(), '\n') == 5);

  const CommandResult exported = run_cli("memory export --store " + store_path.string());
  CHECK(exported.exit_code == 0);
  CHECK(exported.output.rfind("memstore v1 dim=2\n", 0) == 0);
}

TEST_CASE("a resumed training run matches an unbroken one") {
  const fs::path base = fs::temp_directory_path() / "memcomp_cli_resume";
  fs::remove_all(base);
  fs::create_directories(base);
  const auto write_config = [&](const std::string& name, int epochs, const std::string& extra) {
    const fs::path path = base / name;
    std::ofstream out(path);
    out << "{\"table_builtin\":\"four_state\",\"alpha\":0.0,\"beta\":0.01,"
           "\"learning_rate\":0.5,\"epochs\":" << epochs
        << ",\"samples_per_epoch\":300,\"neighborhood_n\":1,\"surrogate_bandwidth\":1.5,"
           "\"seed\":11,\"d_mem\":2,\"encoder_hidden\":[],\"decoder_hidden\":[]" << extra << "}";
    return path;
  };

  const auto straight_cfg = write_config("straight.json", 4, "");
  CHECK(run_cli("train --config " + straight_cfg.string() + " --out " + (base / "straight").string())
            .exit_code == 0);

  const auto half_cfg = write_config("half.json", 2, "");
  CHECK(run_cli("train --config " + half_cfg.string() + " --out " + (base / "half").string())
            .exit_code == 0);
  const auto resumed_cfg =
      write_config("resumed.json", 4, ",\"resume_dir\":\"" + (base / "half").string() + "\"");
  CHECK(run_cli("train --config " + resumed_cfg.string() + " --out " + (base / "resumed").string())
            .exit_code == 0);

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  CHECK(slurp(base / "straight" / "codec.txt") == slurp(base / "resumed" / "codec.txt"));
  CHECK(slurp(base / "straight" / "store.txt") == slurp(base / "resumed" / "store.txt"));
  fs::remove_all(base);
}

TEST_CASE("training with zero epochs writes empty report files") {
  const fs::path base = fs::temp_directory_path() / "memcomp_cli_zero";
  fs::remove_all(base);
  fs::create_directories(base);
  const fs::path cfg = base / "cfg.json";
  {
    std::ofstream out(cfg);
    out << "{\"table_builtin\":\"four_state\",\"epochs\":0,\"samples_per_epoch\":100,"
           "\"seed\":3,\"d_mem\":2,\"encoder_hidden\":[],\"decoder_hidden\":[]}";
  }
  const CommandResult result = run_cli("train --config " + cfg.string() + " --out " +
                                       (base / "out").string());
  CHECK(result.exit_code == 0);
  std::ifstream report(base / "out" / "report.csv");
  std::string header, rest;
  std::getline(report, header);
  CHECK(header.rfind("epoch,", 0) == 0);
  CHECK_FALSE(static_cast<bool>(std::getline(report, rest)));
  fs::remove_all(base);
}

TEST_CASE("unknown subcommands fail") {
  CHECK(run_cli("frobnicate").exit_code != 0);
}
