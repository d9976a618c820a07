#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "cellfclust/io.hpp"

namespace fs = std::filesystem;
using namespace cellfclust;

namespace {

const fs::path kRoot = CELLFCLUST_TEST_TMP;

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "cellfclust");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

fs::path fresh(const std::string& name) {
  const fs::path p = kRoot / name;
  fs::remove_all(p);
  return p;
}

fs::path design_one_csv() {
  const fs::path dir = kRoot / "design1";
  if (!fs::exists(dir / "data.csv")) REQUIRE(run({"datagen", "--preset", "paper_design_1", "--out", dir.string()}) == 0);
  return dir / "data.csv";
}

}  // namespace

TEST_CASE("datagen writes the design and is reproducible") {
  const fs::path a = fresh("gen_a"), b = fresh("gen_b");
  REQUIRE(run({"datagen", "--preset", "paper_design_1", "--seed", "5", "--out", a.string()}) == 0);
  REQUIRE(run({"datagen", "--preset", "paper_design_1", "--seed", "5", "--out", b.string()}) == 0);
  const auto rows = read_rows(a / "data.csv");
  CHECK(rows.size() == 201);
  CHECK(rows[0].size() == 5);
  for (const char* f : {"data.csv", "labels.csv", "outlier_mask.csv", "clean.csv", "spec.json"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  // spec.json regenerates the same data.
  const fs::path c = fresh("gen_c");
  REQUIRE(run({"datagen", "--spec", (a / "spec.json").string(), "--out", c.string()}) == 0);
  CHECK(slurp(a / "data.csv") == slurp(c / "data.csv"));
}

TEST_CASE("datagen with zero contamination writes an all-zero mask") {
  const fs::path dir = fresh("gen_clean");
  const nlohmann::json spec = {{"n", 30},
                               {"J", 2},
                               {"K", 1},
                               {"proportions", {1.0}},
                               {"means", {{0.0, 0.0}}},
                               {"covariances", {{{"rho", 0.3}}}},
                               {"contamination_rate", {0.0, 0.0}}};
  fs::create_directories(dir);
  std::ofstream(dir / "spec_in.json") << spec.dump();
  REQUIRE(run({"datagen", "--spec", (dir / "spec_in.json").string(), "--out", dir.string()}) == 0);
  const auto rows = read_rows(dir / "outlier_mask.csv");
  REQUIRE(rows.size() == 31);
  for (std::size_t r = 1; r < rows.size(); ++r)
    for (const auto& f : rows[r]) CHECK(f == "0");
}

TEST_CASE("fit bundle is deterministic and complete") {
  const fs::path input = design_one_csv();
  const fs::path a = fresh("fit_a"), b = fresh("fit_b");
  const std::vector<std::string> common{"--input", input.string(), "--k", "2", "--alpha", "0.05", "--c", "80",
                                        "--m", "1.5", "--starts", "10", "--seed", "3"};
  auto args_a = common;
  args_a.insert(args_a.begin(), "fit");
  args_a.insert(args_a.end(), {"--out", a.string()});
  auto args_b = common;
  args_b.insert(args_b.begin(), "fit");
  args_b.insert(args_b.end(), {"--out", b.string()});
  REQUIRE(run(args_a) == 0);
  REQUIRE(run(args_b) == 0);
  for (const char* f : {"result.json", "membership.csv", "indicator.csv", "completed.csv", "outlier_summary.csv",
                        "cell_status.csv", "weak_assignments.csv", "manifest.json"})
    REQUIRE(fs::exists(a / f));
  CHECK(slurp(a / "result.json") == slurp(b / "result.json"));
  CHECK(slurp(a / "completed.csv") == slurp(b / "completed.csv"));

  // Flagged proportions add up to 5 % per variable.
  const auto rows = read_rows(a / "outlier_summary.csv");
  std::map<std::string, double> totals;
  for (std::size_t r = 1; r < rows.size(); ++r) totals[rows[r][0]] += std::stod(rows[r][2]);
  CHECK(totals.size() == 5);
  for (const auto& [name, total] : totals) CHECK(total == doctest::Approx(0.05));

  // Re-running from the manifest reproduces the result.
  const fs::path c = fresh("fit_c");
  REQUIRE(run({"fit", "--manifest", (a / "manifest.json").string(), "--out", c.string()}) == 0);
  CHECK(slurp(a / "result.json") == slurp(c / "result.json"));

  const auto result = nlohmann::json::parse(slurp(a / "result.json"));
  CHECK(result["K"] == 2);
  CHECK(result["start_objectives"].size() == 10);
  CHECK(result["config"]["c"] == 80.0);
}

TEST_CASE("alpha 0 on complete data keeps every cell") {
  const fs::path dir = fresh("fit_alpha0");
  REQUIRE(run({"fit", "--input", design_one_csv().string(), "--k", "2", "--alpha", "0", "--starts", "2", "--out",
               dir.string()}) == 0);
  const auto rows = read_rows(dir / "indicator.csv");
  REQUIRE(rows.size() == 201);
  for (std::size_t r = 1; r < rows.size(); ++r)
    for (const auto& f : rows[r]) CHECK(f == "1");
}

TEST_CASE("a 1x1 tuning grid matches the fit objective") {
  const fs::path fit_dir = fresh("tune_fit"), tune_dir = fresh("tune_one");
  const std::string input = design_one_csv().string();
  REQUIRE(run({"fit", "--input", input, "--k", "2", "--alpha", "0.05", "--starts", "3", "--out", fit_dir.string()}) == 0);
  REQUIRE(run({"tune", "--input", input, "--k-list", "2", "--alpha-list", "0.05", "--starts", "3", "--out",
               tune_dir.string()}) == 0);
  const auto rows = read_rows(tune_dir / "curves.csv");
  REQUIRE(rows.size() == 2);
  const auto result = nlohmann::json::parse(slurp(fit_dir / "result.json"));
  CHECK(std::stod(rows[1][2]) == result["objective"].get<double>());
}

TEST_CASE("knee table points at the planted contamination level") {
  const fs::path dir = fresh("tune_knee");
  REQUIRE(run({"tune", "--input", design_one_csv().string(), "--mode", "knee", "--k-list", "2", "--alpha-list",
               "0.01,0.05,0.10,0.20", "--c", "80", "--out", dir.string()}) == 0);
  const auto rows = read_rows(dir / "knee.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0][0] == "alpha");
  std::size_t best = 1;
  for (std::size_t r = 2; r < rows.size(); ++r)
    if (std::abs(std::stod(rows[r][1])) < std::abs(std::stod(rows[best][1]))) best = r;
  CHECK(std::stod(rows[best][0]) == doctest::Approx(0.05));
}

TEST_CASE("tuning statistics and delta modes") {
  const std::string input = design_one_csv().string();
  const fs::path s = fresh("tune_stats"), d = fresh("tune_delta");
  REQUIRE(run({"tune", "--input", input, "--mode", "ha_wa", "--k-list", "1,2", "--alpha-list", "0.05", "--starts",
               "3", "--out", s.string()}) == 0);
  CHECK(read_rows(s / "stats.csv").size() == 3);
  REQUIRE(run({"tune", "--input", input, "--mode", "delta", "--k-list", "2", "--alpha-list", "0.05", "--starts", "3",
               "--out", d.string()}) == 0);
  CHECK(read_rows(d / "delta.csv").size() == 1 + 5 * 200);
}

TEST_CASE("exit codes") {
  const std::string input = design_one_csv().string();
  const std::string out = fresh("exit").string();
  CHECK(run({"fit", "--input", (kRoot / "missing.csv").string(), "--out", out}) == cli::kDataError);
  CHECK(run({"fit", "--out", out}) == cli::kUsage);
  CHECK(run({"fit", "--input", input}) == cli::kUsage);
  CHECK(run({"fit", "--input", input, "--k", "0", "--out", out}) == cli::kUsage);
  CHECK(run({"fit", "--input", input, "--no-such-flag", "--out", out}) == cli::kUsage);
  CHECK(run({"tune", "--input", input, "--mode", "bogus", "--k-list", "2", "--alpha-list", "0.05", "--out", out}) ==
        cli::kUsage);
  CHECK(run({"datagen", "--preset", "nope", "--out", out}) == cli::kDataError);

  fs::create_directories(kRoot);
  std::ofstream(kRoot / "text.csv") << "a,b\n1,two\n";
  CHECK(run({"fit", "--input", (kRoot / "text.csv").string(), "--out", out}) == cli::kDataError);

  // Two identical rows cannot support two clusters with alpha = 0.
  std::ofstream(kRoot / "tiny.csv") << "a,b\n1,1\n1,1\n1,1\n1,1\n1,1\n1,1\n1,1\n";
  CHECK(run({"fit", "--input", (kRoot / "tiny.csv").string(), "--k", "2", "--alpha", "0", "--starts", "2", "--out",
             out}) == cli::kFitFailure);
}
