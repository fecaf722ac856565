#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifndef RISKCP_CLI_PATH
#error "RISKCP_CLI_PATH must be defined"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "riskcp_cli_tests";

int run(const std::string& args, const std::string& log_name = "log.txt") {
  const auto log = kWork / log_name;
  const std::string cmd =
      std::string(RISKCP_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  return rows == 0 ? 0 : rows - 1;  // minus header
}

json load_json(const fs::path& path) { return json::parse(slurp(path)); }

// Byte-compare every payload file; the run report is compared with its
// timings stripped.
void check_dirs_identical(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(a)) {
    names.push_back(entry.path().filename().string());
  }
  REQUIRE(!names.empty());
  for (const auto& name : names) {
    REQUIRE(fs::exists(b / name));
    if (name == "run_report.json") {
      auto ra = load_json(a / name);
      auto rb = load_json(b / name);
      ra.erase("timings_ms");
      rb.erase("timings_ms");
      // Output paths differ by directory; compare file names only.
      auto basenames = [](json& r) {
        for (auto& p : r["outputs"]) p = fs::path(p.get<std::string>()).filename().string();
        r.erase("config");
      };
      basenames(ra);
      basenames(rb);
      CHECK(ra == rb);
    } else {
      CHECK_MESSAGE(slurp(a / name) == slurp(b / name), "file differs: ", name);
    }
  }
}

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

Workspace workspace;  // one clean tree per test-binary run

std::string base_data;  // 650-row synthetic CSV shared by several cases

std::string shared_data() {
  if (base_data.empty()) {
    REQUIRE(run("synth --per-class 400,100,150 --dim 4 --sep 2.5 --seed 3 --output-dir " +
                (kWork / "base").string()) == 0);
    base_data = (kWork / "base" / "synthetic.csv").string();
  }
  return base_data;
}

}  // namespace

TEST_CASE("synth writes the requested rows and is byte-deterministic") {
  const auto out1 = kWork / "synth1";
  const auto out2 = kWork / "synth2";
  const std::string flags = "synth --per-class 500,50,100 --dim 8 --sep 3 --seed 7";
  CHECK(run(flags + " --output-dir " + out1.string()) == 0);
  CHECK(run(flags + " --output-dir " + out2.string()) == 0);
  CHECK(data_rows(out1 / "synthetic.csv") == 650);
  check_dirs_identical(out1, out2);
}

TEST_CASE("synth rejects a zero dimension with a usage error") {
  CHECK(run("synth --per-class 10,10 --dim 0 --output-dir " + (kWork / "bad").string()) == 2);
}

TEST_CASE("unknown flags and missing files exit with code 2") {
  CHECK(run("synth --no-such-flag --output-dir " + (kWork / "x").string()) == 2);
  CHECK(run("evaluate --input /nonexistent.csv --output-dir " + (kWork / "y").string()) == 2);
  CHECK(run("rank --input /nonexistent.csv --output-dir " + (kWork / "z").string()) == 2);
}

TEST_CASE("evaluate emits all reports and they parse") {
  const auto out = kWork / "eval1";
  REQUIRE(run("evaluate --input " + shared_data() + " --alpha 0.05 --smoothed --seed 5 " +
              "--stratified --output-dir " + out.string()) == 0);
  for (const char* name :
       {"records.csv", "sweep.csv", "confusion.json", "ranking.csv", "comparison.csv"}) {
    CHECK(fs::exists(out / name));
  }
  const auto confusion = load_json(out / "confusion.json");
  CHECK(confusion["total"].get<int>() > 0);
  CHECK(confusion["correct_singleton"].get<int>() + confusion["incorrect_singleton"].get<int>() +
            confusion["inconclusive"].get<int>() + confusion["empty"].get<int>() ==
        confusion["total"].get<int>());

  std::ifstream sweep(out / "sweep.csv");
  std::string header;
  std::getline(sweep, header);
  CHECK(header.rfind("sig,mean_err,avg_c,n_correct", 0) == 0);

  std::ifstream comparison(out / "comparison.csv");
  std::getline(comparison, header);
  CHECK(header == "alpha,mondrian,raps,naive,top_k");

  // Re-run into another directory: byte-identical payloads.
  const auto out2 = kWork / "eval2";
  REQUIRE(run("evaluate --input " + shared_data() + " --alpha 0.05 --smoothed --seed 5 " +
              "--stratified --output-dir " + out2.string()) == 0);
  check_dirs_identical(out, out2);
}

TEST_CASE("evaluate with the raps method keeps the comparison schema") {
  const auto out = kWork / "eval_raps";
  REQUIRE(run("evaluate --input " + shared_data() + " --method raps --alpha 0.1 --seed 5 " +
              "--alphas 0.05,0.5,0.9 --output-dir " + out.string()) == 0);
  std::ifstream comparison(out / "comparison.csv");
  std::string header;
  std::getline(comparison, header);
  CHECK(header == "alpha,mondrian,raps,naive,top_k");
  std::size_t rows = 0;
  for (std::string line; std::getline(comparison, line);) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 3);
  CHECK(load_json(out / "confusion.json")["method"] == "raps");
}

TEST_CASE("evaluate coverage at alpha 0.05 with smoothing stays above 0.93") {
  const auto data = kWork / "big";
  REQUIRE(run("synth --per-class 2000,1000,1000 --dim 4 --sep 2 --seed 9 --output-dir " +
              data.string()) == 0);
  const auto out = kWork / "eval_cov";
  REQUIRE(run("evaluate --input " + (data / "synthetic.csv").string() +
              " --alpha 0.05 --smoothed --seed 12 --alphas 0.05 --output-dir " +
              out.string()) == 0);
  std::ifstream sweep(out / "sweep.csv");
  std::string header, row;
  std::getline(sweep, header);
  std::getline(sweep, row);
  const auto first_comma = row.find(',');
  const auto second_comma = row.find(',', first_comma + 1);
  const double mean_err =
      std::stod(row.substr(first_comma + 1, second_comma - first_comma - 1));
  CHECK(1.0 - mean_err >= 0.93);
}

TEST_CASE("fit then predict on a held-out file") {
  const auto dir = kWork / "fitpredict";
  fs::create_directories(dir);
  REQUIRE(run("synth --per-class 200,200 --dim 3 --sep 3 --seed 21 --output-dir " +
              (dir / "train").string()) == 0);
  REQUIRE(run("synth --per-class 150,150 --dim 3 --sep 3 --seed 22 --output-dir " +
              (dir / "cal").string()) == 0);
  REQUIRE(run("synth --per-class 100,100 --dim 3 --sep 3 --seed 23 --output-dir " +
              (dir / "test").string()) == 0);
  REQUIRE(run("fit --input " + (dir / "train" / "synthetic.csv").string() +
              " --model logistic --seed 2 --output-dir " + (dir / "model").string()) == 0);
  REQUIRE(run("predict --input " + (dir / "test" / "synthetic.csv").string() +
              " --calibration " + (dir / "cal" / "synthetic.csv").string() + " --model " +
              (dir / "model" / "model.json").string() + " --alpha 0.1 --output-dir " +
              (dir / "pred").string()) == 0);
  CHECK(data_rows(dir / "pred" / "records.csv") == 200);

  // knn path exercises the other built-in model.
  REQUIRE(run("fit --input " + (dir / "train" / "synthetic.csv").string() +
              " --model knn --knn-k 9 --output-dir " + (dir / "knn").string()) == 0);
  REQUIRE(run("predict --input " + (dir / "test" / "synthetic.csv").string() +
              " --calibration " + (dir / "cal" / "synthetic.csv").string() + " --model " +
              (dir / "knn" / "model.json").string() + " --alpha 0.1 --output-dir " +
              (dir / "knnpred").string()) == 0);
  CHECK(data_rows(dir / "knnpred" / "records.csv") == 200);
}

TEST_CASE("rank consumes a records file") {
  const auto out = kWork / "eval1";  // produced above; rebuild if ordering changed
  if (!fs::exists(out / "records.csv")) {
    REQUIRE(run("evaluate --input " + shared_data() + " --alpha 0.05 --seed 5 --output-dir " +
                out.string()) == 0);
  }
  const auto rdir = kWork / "rankout";
  REQUIRE(run("rank --input " + (out / "records.csv").string() + " --targets TI,T-EV " +
              "--output-dir " + rdir.string()) == 0);
  CHECK(fs::exists(rdir / "ranking.csv"));
}

TEST_CASE("gan training, sampling, evolving") {
  const auto dir = kWork / "gan";
  fs::create_directories(dir);
  REQUIRE(run("synth --per-class 150,150 --dim 2 --sep 2 --seed 31 --output-dir " +
              (dir / "data").string()) == 0);
  const std::string data = (dir / "data" / "synthetic.csv").string();

  // Degenerate run keeps working and warns.
  REQUIRE(run("gan-train --input " + data + " --class TI --m 1 --epochs 0 --batch-size 16 " +
              "--seed 1 --output-dir " + (dir / "degenerate").string()) == 0);
  const auto degenerate_report = load_json(dir / "degenerate" / "run_report.json");
  CHECK(!degenerate_report["warnings"].empty());

  // Short real training run.
  REQUIRE(run("gan-train --input " + data + " --class TI --m 2 --epochs 5 --hidden 8 " +
              "--noise-dim 4 --batch-size 16 --seed 2 --output-dir " +
              (dir / "train").string()) == 0);
  CHECK(fs::exists(dir / "train" / "ensemble.json"));
  CHECK(fs::exists(dir / "train" / "marginals.csv"));

  // Sampling with keep fraction: 200 drawn, 20% kept.
  const std::string ens = (dir / "train" / "ensemble.json").string();
  REQUIRE(run("gan-sample --ensemble " + ens + " --n 200 --keep 0.2 --label TI --seed 3 " +
              "--output-dir " + (dir / "sample1").string()) == 0);
  CHECK(data_rows(dir / "sample1" / "samples.csv") == 40);

  // Reload + same seed reproduces samples byte for byte.
  REQUIRE(run("gan-sample --ensemble " + ens + " --n 200 --keep 0.2 --label TI --seed 3 " +
              "--output-dir " + (dir / "sample2").string()) == 0);
  check_dirs_identical(dir / "sample1", dir / "sample2");

  // Survey-scale draw: 10000 sampled, 20% kept.
  REQUIRE(run("gan-sample --ensemble " + ens + " --n 10000 --keep 0.2 --label TI --seed 6 " +
              "--output-dir " + (dir / "pool").string()) == 0);
  CHECK(data_rows(dir / "pool" / "samples.csv") == 2000);

  // Free-class samples plus evolve.
  REQUIRE(run("gan-train --input " + data + " --class TF --m 1 --epochs 5 --hidden 8 " +
              "--noise-dim 4 --batch-size 16 --seed 4 --output-dir " +
              (dir / "train_tf").string()) == 0);
  REQUIRE(run("gan-sample --ensemble " + (dir / "train_tf" / "ensemble.json").string() +
              " --n 30 --label TF --seed 5 --output-dir " + (dir / "sample_tf").string()) == 0);
  REQUIRE(run("evolve --input " + data + " --generated-infected " +
              (dir / "sample1" / "samples.csv").string() + " --generated-free " +
              (dir / "sample_tf" / "samples.csv").string() + " --output-dir " +
              (dir / "evolved").string()) == 0);
  CHECK(data_rows(dir / "evolved" / "evolved.csv") == 300 + 40 + 30);
  std::ifstream evolved(dir / "evolved" / "evolved.csv");
  std::string line;
  bool has_tev = false;
  while (std::getline(evolved, line)) {
    if (line.find("T-EV") != std::string::npos) has_tev = true;
  }
  CHECK(has_tev);
}

TEST_CASE("explain distinguishes missing ids from non-rejections") {
  const auto dir = kWork / "explain";
  fs::create_directories(dir);
  // Overlapping classes so rejections exist at a high significance level.
  REQUIRE(run("synth --per-class 250,250 --dim 3 --sep 1 --seed 41 --output-dir " +
              (dir / "train").string()) == 0);
  REQUIRE(run("synth --per-class 200,200 --dim 3 --sep 1 --seed 42 --output-dir " +
              (dir / "cal").string()) == 0);
  REQUIRE(run("synth --per-class 120,120 --dim 3 --sep 1 --seed 43 --output-dir " +
              (dir / "test").string()) == 0);
  const std::string test_csv = (dir / "test" / "synthetic.csv").string();
  const std::string cal_csv = (dir / "cal" / "synthetic.csv").string();
  REQUIRE(run("fit --input " + (dir / "train" / "synthetic.csv").string() +
              " --seed 1 --output-dir " + (dir / "model").string()) == 0);
  const std::string model = (dir / "model" / "model.json").string();

  REQUIRE(run("predict --input " + test_csv + " --calibration " + cal_csv + " --model " +
              model + " --alpha 0.6 --output-dir " + (dir / "pred").string()) == 0);

  // Find one rejected and one accepted id in the records file.
  std::string rejected_id, accepted_id;
  {
    std::ifstream records(dir / "pred" / "records.csv");
    std::string line;
    std::getline(records, line);  // header
    while (std::getline(records, line) && (rejected_id.empty() || accepted_id.empty())) {
      const auto id = line.substr(0, line.find(','));
      if (line.find(",true,") != std::string::npos) {
        if (rejected_id.empty()) rejected_id = id;
      } else if (accepted_id.empty()) {
        accepted_id = id;
      }
    }
  }
  REQUIRE(!rejected_id.empty());
  REQUIRE(!accepted_id.empty());

  REQUIRE(run("explain --input " + test_csv + " --calibration " + cal_csv + " --model " +
              model + " --id " + rejected_id + " --alpha 0.6 --seed 2 --top-j 2 " +
              "--output-dir " + (dir / "exp").string()) == 0);
  const auto explanation = load_json(dir / "exp" / "explanation.json");
  CHECK(explanation["id"] == rejected_id);
  CHECK(explanation["attributions"].size() <= 2 * 2);
  CHECK(explanation["p_values"].size() == 2);

  CHECK(run("explain --input " + test_csv + " --calibration " + cal_csv + " --model " +
            model + " --id " + accepted_id + " --alpha 0.6 --output-dir " +
            (dir / "exp2").string(), "notreject.txt") == 2);
  CHECK(slurp(kWork / "notreject.txt").find("not a rejection") != std::string::npos);

  CHECK(run("explain --input " + test_csv + " --calibration " + cal_csv + " --model " +
            model + " --id nosuchid --alpha 0.6 --output-dir " + (dir / "exp3").string(),
            "noid.txt") == 2);
  CHECK(slurp(kWork / "noid.txt").find("id not found") != std::string::npos);
}

TEST_CASE("coverage-check subcommand reports and passes") {
  const auto out = kWork / "covcheck";
  REQUIRE(run("coverage-check --trials 10 --n-cal 400 --n-test 500 --alpha 0.2 --seed 1 "
              "--output-dir " +
              out.string()) == 0);
  const auto doc = load_json(out / "coverage.json");
  CHECK(doc["pass"].get<bool>());
  CHECK(doc["coverage"].get<double>() >= doc["bound"].get<double>());
}

TEST_CASE("malformed inputs map to exit code 2 and leave inputs untouched") {
  const std::string data = shared_data();
  const std::string before = slurp(data);

  struct Case {
    const char* name;
    std::string args;
  };
  const std::vector<Case> cases = {
      {"alpha above one", "evaluate --input " + data + " --alpha 1.5"},
      {"alpha zero", "evaluate --input " + data + " --alpha 0"},
      {"bad ratios", "evaluate --input " + data + " --ratios 2:1"},
      {"bad alphas list", "evaluate --input " + data + " --alphas 0.1,banana"},
      {"unknown method", "evaluate --input " + data + " --method quantum"},
      {"unknown target label", "evaluate --input " + data + " --targets NOPE"},
      {"unknown model", "fit --input " + data + " --model forest"},
      {"bad keep fraction", "gan-sample --ensemble /nonexistent.json --n 10 --keep 0"},
      {"unknown gan class", "gan-train --input " + data + " --class XX --epochs 0"},
      {"label column missing", "fit --input " + data + " --label-column wat"},
  };
  for (const auto& c : cases) {
    CHECK_MESSAGE(run(c.args + " --output-dir " + (kWork / "malformed").string()) == 2,
                  c.name);
  }
  CHECK(slurp(data) == before);  // inputs never mutated
}

TEST_CASE("evaluate with a bootstrap-averaged scorer") {
  const auto out = kWork / "eval_ens";
  REQUIRE(run("evaluate --input " + shared_data() +
              " --ensemble 3 --epochs 60 --alpha 0.1 --alphas 0.1 --seed 5 --output-dir " +
              out.string()) == 0);
  CHECK(fs::exists(out / "records.csv"));
  CHECK(fs::exists(out / "sweep.json"));
  CHECK(fs::exists(out / "confusion.csv"));
}

TEST_CASE("config file provides defaults that flags override") {
  const auto cfg = kWork / "synth.ini";
  {
    std::ofstream out(cfg);
    out << "[synth]\nper-class=\"30,30\"\ndim=3\nsep=1\nseed=5\n";
  }
  const auto out1 = kWork / "cfg1";
  REQUIRE(run("synth --config " + cfg.string() + " --output-dir " + out1.string()) == 0);
  CHECK(data_rows(out1 / "synthetic.csv") == 60);
  const auto out2 = kWork / "cfg2";
  REQUIRE(run("synth --config " + cfg.string() + " --per-class 10,10 --output-dir " +
              out2.string()) == 0);
  CHECK(data_rows(out2 / "synthetic.csv") == 20);
}
