#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "canopy/cli.hpp"
#include "canopy/csv.hpp"
#include "canopy/data/split.hpp"
#include "canopy/train.hpp"
#include "doctest.h"
#include "support/synth.hpp"

namespace fs = std::filesystem;
using canopy::DatasetManifest;
using canopy::Split;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("canopy_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// Builds a small mock-tile dataset once and reuses it across cases.
const fs::path& shared_dataset() {
  static const fs::path dir = [] {
    const fs::path root = fresh_dir("shared");
    const auto inventory = canopy::testing::synthetic_inventory(3);
    const fs::path csv = root / "inventory.csv";
    std::ofstream(csv) << inventory.csv;
    const fs::path out = root / "ds";
    const int rc = canopy::cli::run({"dataset", "build", "--inventory", csv.string(),
                                     "--mock-tiles", "--tile-size", "16", "--out", out.string(),
                                     "--seed", "5"});
    REQUIRE(rc == 0);
    return out;
  }();
  return dir;
}

}  // namespace

TEST_CASE("cli: dataset build writes manifest, images and reports") {
  const fs::path& out = shared_dataset();
  REQUIRE(fs::exists(out / "manifest.txt"));
  REQUIRE(fs::exists(out / "config_resolved.toml"));
  REQUIRE(fs::exists(out / "rejections.csv"));

  const auto manifest = DatasetManifest::parse(slurp(out / "manifest.txt"));
  CHECK(manifest.entries.size() == 165);  // top-6 species of the 183 kept records

  // per-species splits respect the 70/20/10 largest-remainder bound
  for (const auto& species : manifest.species_sorted()) {
    const double n = static_cast<double>(manifest.count(species, Split::train) +
                                         manifest.count(species, Split::validate) +
                                         manifest.count(species, Split::test));
    CHECK(std::fabs(manifest.count(species, Split::train) - 0.7 * n) <= 1.0);
    CHECK(std::fabs(manifest.count(species, Split::validate) - 0.2 * n) <= 1.0);
    CHECK(std::fabs(manifest.count(species, Split::test) - 0.1 * n) <= 1.0);
  }
  for (const auto& e : manifest.entries) {
    CHECK(e.status == "ok");
    CHECK(fs::exists(out / e.path));
  }

  // planted bad rows all rejected
  const auto rejects = canopy::parse_csv(slurp(out / "rejections.csv"));
  CHECK(rejects.size() >= 17 + 1);  // header + 17 planted bad rows
}

TEST_CASE("cli: train twice with one seed yields byte-identical artifacts") {
  const fs::path& data = shared_dataset();
  const fs::path run_a = fresh_dir("train_a");
  const fs::path run_b = fresh_dir("train_b");
  const std::vector<std::string> common{"train",        "--data",     data.string(),
                                        "--blocks",     "1",          "--filters",
                                        "4",            "--fc-width", "8",
                                        "--epochs",     "3",          "--batch-size",
                                        "16",           "--seed",     "7"};
  auto args_with_out = [&](const fs::path& out) {
    auto args = common;
    args.push_back("--out");
    args.push_back(out.string());
    return args;
  };
  REQUIRE(canopy::cli::run(args_with_out(run_a)) == 0);
  REQUIRE(canopy::cli::run(args_with_out(run_b)) == 0);
  CHECK(slurp(run_a / "history.csv") == slurp(run_b / "history.csv"));
  CHECK(slurp(run_a / "checkpoint.bin") == slurp(run_b / "checkpoint.bin"));

  // eval consumes the checkpoint and emits the results-table schema
  const fs::path eval_out = fresh_dir("eval");
  REQUIRE(canopy::cli::run({"eval", "--checkpoint", (run_a / "checkpoint.bin").string(), "--data",
                            data.string(), "--out", eval_out.string()}) == 0);
  const auto report = slurp(eval_out / "eval_report.csv");
  CHECK(report.rfind(std::string(canopy::kResultsCsvHeader) + "\n", 0) == 0);
  CHECK(fs::exists(eval_out / "eval_report.json"));
  CHECK(fs::exists(eval_out / "confusion.csv"));
}

TEST_CASE("cli: sweep grid of 2x2 emits a 4-row csv with the exact schema") {
  const fs::path& data = shared_dataset();
  const fs::path out = fresh_dir("sweep");
  REQUIRE(canopy::cli::run({"sweep", "--data", data.string(), "--grid", "blocks=1,2",
                            "optimizer=sgd,adamax", "--filters", "4", "--fc-width", "8",
                            "--epochs", "2", "--batch-size", "16", "--out", out.string()}) == 0);
  const auto rows = canopy::parse_csv(slurp(out / "results.csv"));
  REQUIRE(rows.size() >= 5);
  CHECK(canopy::csv_join(rows[0]) == canopy::kResultsCsvHeader);
  std::size_t data_rows = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() == 6) ++data_rows;
  }
  CHECK(data_rows == 4);
}

TEST_CASE("cli: report merges sweep tables sorted by accuracy") {
  const fs::path& data = shared_dataset();
  const fs::path out = fresh_dir("report_in");
  REQUIRE(canopy::cli::run({"sweep", "--data", data.string(), "--grid", "blocks=1", "--filters",
                            "4", "--fc-width", "8", "--epochs", "1", "--batch-size", "16",
                            "--out", out.string()}) == 0);
  const fs::path merged = fresh_dir("report_out");
  REQUIRE(canopy::cli::run({"report", "--inputs", (out / "results.csv").string(),
                            (out / "results.csv").string(), "--out", merged.string()}) == 0);
  const auto rows = canopy::parse_csv(slurp(merged / "summary.csv"));
  CHECK(canopy::csv_join(rows[0]) == canopy::kResultsCsvHeader);
}

TEST_CASE("cli: exit codes for usage errors and the missing api key") {
  CHECK(canopy::cli::run({"frobnicate"}) == 2);
  CHECK(canopy::cli::run({"train", "--bogus-flag"}) == 2);
  CHECK(canopy::cli::run({}) == 2);

  const fs::path root = fresh_dir("live_nokey");
  const auto inventory = canopy::testing::synthetic_inventory(4);
  const fs::path csv = root / "inventory.csv";
  std::ofstream(csv) << inventory.csv;
  unsetenv("MAPS_API_KEY");
  CHECK(canopy::cli::run({"dataset", "build", "--inventory", csv.string(), "--out",
                          (root / "out").string()}) == 3);
}

TEST_CASE("cli: config file values apply under flags-over-file precedence") {
  const fs::path& data = shared_dataset();
  const fs::path dir = fresh_dir("config");
  const fs::path cfg = dir / "cfg.toml";
  std::ofstream(cfg) << "[train]\nblocks=1\nfilters=4\nfc-width=8\nepochs=2\nbatch-size=16\n"
                        "optimizer=adamax\nseed=9\n";
  const fs::path out = dir / "run";
  REQUIRE(canopy::cli::run({"train", "--data", data.string(), "--config", cfg.string(), "--seed",
                            "11", "--out", out.string()}) == 0);
  const auto resolved = slurp(out / "config_resolved.toml");
  CHECK(resolved.find("train.optimizer=\"adamax\"") != std::string::npos);  // from file
  CHECK(resolved.find("train.seed=11") != std::string::npos);               // flag wins
  CHECK(resolved.find("train.epochs=2") != std::string::npos);
}
