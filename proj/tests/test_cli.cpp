#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(FSIM_BINARY_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kSmallRun =
    "--seed 7 --designs gauss --dims 10 --p-dims 2 --reps 50 --r-count 5 --threads 2";

}  // namespace

TEST_CASE("table1 runs twice with byte-identical outputs") {
  const fs::path dir1 = fresh_dir("fsim_cli_a");
  const fs::path dir2 = fresh_dir("fsim_cli_b");
  REQUIRE(run("table1 " + kSmallRun + " --out-dir " + dir1.string()) == 0);
  REQUIRE(run("table1 " + kSmallRun + " --out-dir " + dir2.string()) == 0);
  CHECK(slurp(dir1 / "table1.csv") == slurp(dir2 / "table1.csv"));
  CHECK(slurp(dir1 / "cells.csv") == slurp(dir2 / "cells.csv"));
  CHECK(!slurp(dir1 / "table1.csv").empty());

  SUBCASE("verify accepts the stored run") {
    CHECK(run("verify --out-dir " + dir1.string()) == 0);
    CHECK(run("verify --out-dir " + dir1.string() + " --cell 0") == 0);
  }
}

TEST_CASE("thread count does not change the outputs") {
  const fs::path dir1 = fresh_dir("fsim_cli_t1");
  const fs::path dir16 = fresh_dir("fsim_cli_t16");
  REQUIRE(run("table1 --seed 3 --designs exp --dims 12 --p-dims 3 --reps 40 --r-count 8 "
              "--threads 1 --out-dir " +
              dir1.string()) == 0);
  REQUIRE(run("table1 --seed 3 --designs exp --dims 12 --p-dims 3 --reps 40 --r-count 8 "
              "--threads 16 --out-dir " +
              dir16.string()) == 0);
  CHECK(slurp(dir1 / "cells.csv") == slurp(dir16 / "cells.csv"));
}

TEST_CASE("benchmark writes four columns of multiples of 1/reps") {
  const fs::path dir = fresh_dir("fsim_cli_bench");
  REQUIRE(run("benchmark --seed 5 --reps 100 --r-count 20 --out-dir " + dir.string()) == 0);
  std::ifstream in(dir / "benchmark.csv");
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "p0.05,p0.10,p0.15,p0.20");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream fields(line);
    std::string field;
    int columns = 0;
    while (std::getline(fields, field, ',')) {
      ++columns;
      const double value = std::stod(field);
      CHECK(std::fabs(value * 100.0 - std::round(value * 100.0)) <= 1e-9);
    }
    CHECK(columns == 4);
  }
  CHECK(rows == 20);
}

TEST_CASE("json format is accepted") {
  const fs::path dir = fresh_dir("fsim_cli_json");
  REQUIRE(run("table1 " + kSmallRun + " --format json --out-dir " + dir.string()) == 0);
  CHECK(fs::exists(dir / "table1.json"));
  CHECK(fs::exists(dir / "cells.json"));
}

TEST_CASE("config file values are used and flags override them") {
  const fs::path dir = fresh_dir("fsim_cli_cfg");
  const fs::path cfg_path = dir / "config.json";
  {
    std::ofstream out(cfg_path);
    out << R"({"seed": 11, "reps": 30, "r_count": 4, "dims": [8], "p_dims": [2], )"
        << R"("designs": ["unif"]})";
  }
  REQUIRE(run("table1 --config " + cfg_path.string() + " --out-dir " + dir.string()) == 0);
  const std::string from_file = slurp(dir / "table1.csv");
  CHECK(from_file.find("unif,8,2,") != std::string::npos);

  REQUIRE(run("table1 --config " + cfg_path.string() + " --designs gauss --out-dir " +
              dir.string()) == 0);
  CHECK(slurp(dir / "table1.csv").find("gauss,8,2,") != std::string::npos);
}

TEST_CASE("configuration errors exit with code 2") {
  CHECK(run("table1 --no-such-flag") == 2);
  CHECK(run("nonsense") == 2);
  CHECK(run("table1 --designs gauss --dims 10 --p-dims 60 --reps 10 --r-count 2") == 2);
  CHECK(run("table1 --designs martian --dims 10 --p-dims 2") == 2);
  CHECK(run("") == 2);
}

TEST_CASE("boxplots subcommand writes per-rotation rates") {
  const fs::path dir = fresh_dir("fsim_cli_box");
  REQUIRE(run("boxplots --seed 4 --designs rademacher --dims 10,20 --p-dims 5 --reps 30 "
              "--r-count 6 --out-dir " +
              dir.string()) == 0);
  std::ifstream in(dir / "boxplot.csv");
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "design,d,r,pbar");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 12);  // 2 cells x 6 rotations
}

TEST_CASE("power subcommand writes the snr grid") {
  const fs::path dir = fresh_dir("fsim_cli_pow");
  REQUIRE(run("power --seed 6 --designs gauss --dims 20 --p-dims 5 --reps 30 --r-count 5 "
              "--out-dir " +
              dir.string()) == 0);
  std::ifstream in(dir / "power.csv");
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "design,d,p,snr,rejection,noncentral_f,normal_approx");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);  // the default snr grid has four points
}

TEST_CASE("oracle subcommand emits the enumeration studies") {
  const fs::path dir = fresh_dir("fsim_cli_oracle");
  REQUIRE(run("oracle --seed 8 --d-grid 6,8 --p 2 --t-grid 0.25,1 --frames 3 --gap-reps 50 "
              "--out-dir " +
              dir.string()) == 0);
  CHECK(fs::exists(dir / "oracle_tail.csv"));
  CHECK(fs::exists(dir / "oracle_risk.csv"));
  CHECK(fs::exists(dir / "oracle_gap.csv"));
  CHECK(fs::exists(dir / "oracle_conditional.csv"));
  std::ifstream in(dir / "oracle_tail.csv");
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "recipe,d,frame,t,probability");
}

TEST_CASE("theorem1 subcommand writes the diagnostics table") {
  const fs::path dir = fresh_dir("fsim_cli_thm");
  REQUIRE(run("theorem1 --seed 9 --designs gauss --dims 20 --p-dims 5 --reps 40 --r-count 5 "
              "--snr 0,0.05 --out-dir " +
              dir.string()) == 0);
  std::ifstream in(dir / "theorem1.csv");
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "design,d,p,snr,ks,rejection,normal_approx,gap");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);
}
