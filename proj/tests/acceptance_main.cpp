// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "riskcp/conformal.hpp"
#include "riskcp/dataset.hpp"
#include "riskcp/explain.hpp"
#include "riskcp/gan.hpp"
#include "riskcp/logistic.hpp"
#include "riskcp/metrics.hpp"
#include "riskcp/reports.hpp"
#include "riskcp/rng.hpp"
#include "riskcp/setpredictors.hpp"
#include "support.hpp"

#ifndef RISKCP_CLI_PATH
#error "RISKCP_CLI_PATH must be defined"
#endif

namespace fs = std::filesystem;
using namespace rcp;
using rcp::testing::StubModel;

namespace {

struct Failure {
  std::string detail;
};

using CriterionFn = std::function<void(std::ostringstream& note)>;

void expect(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

// --------------------------------------------------------------------------
// 1. Marginal coverage guarantee, 30 trials, runtime < 60 s.
// --------------------------------------------------------------------------
void criterion_coverage(std::ostringstream& note) {
  const auto begin = std::chrono::steady_clock::now();
  for (double alpha : {0.05, 0.1, 0.2}) {
    const auto check = coverage_guarantee_check(30, 500, 1000, alpha, 42);
    expect(check.pass, "alpha " + fmt(alpha) + ": coverage " + fmt(check.coverage) +
                           " below bound " + fmt(check.bound));
    note << "a=" << alpha << ":" << fmt(check.coverage) << " ";
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  expect(secs < 60.0, "runtime " + fmt(secs) + " s exceeds 60 s");
  note << "in " << fmt(secs) << " s";
}

// --------------------------------------------------------------------------
// 2. Class-conditional coverage under 10:1:2 imbalance at alpha = 0.1.
// --------------------------------------------------------------------------
void criterion_class_conditional(std::ostringstream& note) {
  const double alpha = 0.1;
  const auto check = coverage_guarantee_check(30, 500, 1000, alpha, 42, {10, 1, 2});
  for (std::size_t k = 0; k < check.per_class_coverage.size(); ++k) {
    expect(check.per_class_coverage[k] >= 1.0 - alpha - 0.03,
           "class " + std::to_string(k) + " coverage " + fmt(check.per_class_coverage[k]) +
               " below " + fmt(1.0 - alpha - 0.03));
    note << "c" << k << ":" << fmt(check.per_class_coverage[k]) << " ";
  }
}

// --------------------------------------------------------------------------
// 3. Alpha-sweep calibration shape with smoothed p-values.
// --------------------------------------------------------------------------
void criterion_sweep(std::ostringstream& note) {
  const auto train = synth_benchmark({400, 400, 400}, 4, 2.0, 301);
  const auto cal = synth_benchmark({1200, 1200, 1200}, 4, 2.0, 302);
  const auto test = synth_benchmark({1200, 1200, 1200}, 4, 2.0, 303);
  TrainConfig cfg;
  cfg.epochs = 120;
  cfg.learning_rate = 0.2;
  cfg.seed = 3;
  const auto model = fit_logistic(train, cfg);
  const auto table = calibrate(*model, cal);
  const std::vector<double> alphas = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const auto rows = alpha_sweep(*model, table, test, alphas, /*smoothed=*/true);
  double worst = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double gap = std::fabs(rows[i].mean_err - rows[i].sig);
    worst = std::max(worst, gap);
    expect(gap <= 0.03, "alpha " + fmt(rows[i].sig) + ": |mean_err - alpha| = " + fmt(gap));
    if (i > 0) {
      expect(rows[i].avg_c <= rows[i - 1].avg_c + 1e-12,
             "avg_c increased between alpha " + fmt(rows[i - 1].sig) + " and " +
                 fmt(rows[i].sig));
    }
  }
  note << "max |mean_err - alpha| = " << fmt(worst);
}

// --------------------------------------------------------------------------
// 4. Mondrian p-values equal a brute-force recount, exactly.
// --------------------------------------------------------------------------
void criterion_pvalue_oracle(std::ostringstream& note) {
  RngStream rng(4040, 0);
  std::size_t cases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.next_index(20);
    std::vector<double> scores(n);
    const bool grid = rng.next_double() < 0.5;
    for (double& s : scores) {
      s = grid ? static_cast<double>(rng.next_index(6)) / 5.0 : rng.next_double();
    }
    CalibrationTable table;
    auto sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    table.scores_by_class = {sorted};
    table.nonconformity = inverse_prob_nonconformity();

    const double probe = grid && trial % 2 == 0
                             ? static_cast<double>(rng.next_index(6)) / 5.0
                             : rng.next_double();
    std::size_t at_least = 0;
    for (double s : scores) {
      if (s >= probe) ++at_least;
    }
    const double brute_plain = static_cast<double>(at_least) / static_cast<double>(n);
    const double brute_smoothed =
        (static_cast<double>(at_least) + 1.0) / (static_cast<double>(n) + 1.0);
    expect(p_value(table, probe, 0, false) == brute_plain, "unsmoothed mismatch");
    expect(p_value(table, probe, 0, true) == brute_smoothed, "smoothed mismatch");
    ++cases;
  }
  note << cases << " micro-cases exact";
}

// --------------------------------------------------------------------------
// 5. Reported-table p-vector rows at alpha = 0.05, to 3 decimals.
// --------------------------------------------------------------------------
void criterion_reference_rows(std::ostringstream& note) {
  struct Row {
    std::vector<double> p;
    std::size_t point;
    std::vector<std::size_t> set;
    double confidence;
    double credibility;
  };
  const std::vector<Row> rows = {
      {{0.319, 0.0, 0.003}, 0, {0}, 0.997, 0.319},
      {{0.243, 0.002, 0.006}, 0, {0}, 0.994, 0.243},
      {{0.114, 0.053, 0.119}, 2, {0, 1, 2}, 0.886, 0.119},
      {{0.645, 0.001, 0.004}, 0, {0}, 0.996, 0.645},
  };
  auto to3 = [](double v) { return std::round(v * 1000.0) / 1000.0; };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto rec = record_from_pvalues("row" + std::to_string(i), rows[i].p, 0.05);
    expect(rec.point_prediction == rows[i].point, "row " + std::to_string(i) + ": y_pred");
    expect(rec.prediction_set == rows[i].set, "row " + std::to_string(i) + ": set");
    expect(to3(rec.confidence) == rows[i].confidence,
           "row " + std::to_string(i) + ": confidence " + fmt(rec.confidence));
    expect(to3(rec.credibility) == rows[i].credibility,
           "row " + std::to_string(i) + ": credibility " + fmt(rec.credibility));
  }
  note << rows.size() << " rows exact to 3 decimals";
}

// Planted three-class fixture shared by criterion 6.
struct PlantedFixture {
  std::unique_ptr<StubModel> model;
  Dataset cal;
};

PlantedFixture planted_fixture() {
  PlantedFixture f;
  LabelSet labels({"TF", "TI", "T-EV"});
  f.model = std::make_unique<StubModel>(labels, [](const Instance& inst) {
    const double s = 1.0 / (1.0 + std::exp(-2.0 * inst.features[0]));
    return std::vector<double>{s, (1.0 - s) * 0.5, (1.0 - s) * 0.5};
  });
  f.cal.label_set = labels;
  f.cal.feature_names = {"x1", "x2", "x3"};
  RngStream rng(31, 0);
  for (int i = 0; i < 300; ++i) {
    Instance inst{"c" + std::to_string(i),
                  {rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()}};
    const auto probs = f.model->predict_proba(inst);
    const double u = rng.next_double();
    std::size_t label = 0;
    if (u > probs[0]) label = u > probs[0] + probs[1] ? 2 : 1;
    f.cal.instances.push_back(std::move(inst));
    f.cal.labels.push_back(label);
  }
  return f;
}

// --------------------------------------------------------------------------
// 6. Reject path: NULL set at alpha = 0.5 plus a well-formed explanation.
// --------------------------------------------------------------------------
void criterion_reject(std::ostringstream& note) {
  const auto rec = record_from_pvalues("reject", {0.45, 0.32, 0.23}, 0.5);
  expect(rec.prediction_set.empty(), "set not empty");
  expect(rec.rejected, "rejected flag not set");

  auto f = planted_fixture();
  const auto table = calibrate(*f.model, f.cal);
  const Instance probe{"probe", {0.4, 0.0, 0.0}};
  const double alpha = 0.5;
  const auto probe_rec = predict(*f.model, table, probe, alpha);
  expect(probe_rec.rejected, "end-to-end fixture instance not rejected");

  PerturbConfig cfg;
  cfg.seed = 6;
  const auto explanation = explain_reject(*f.model, table, probe, alpha, cfg,
                                          {1.0, 1.0, 1.0}, f.cal.feature_names);
  expect(explanation.id == "probe", "explanation id");
  expect(explanation.p_values == probe_rec.p_values, "explanation p-values");
  expect(!explanation.attributions.empty(), "no attributions");
  expect(explanation.attributions.size() <= cfg.top_j * 3, "too many attributions");
  expect(explanation.surrogate_r2.size() == 3, "missing surrogate diagnostics");
  for (const auto& attr : explanation.attributions) {
    expect(attr.lo <= attr.weight && attr.weight <= attr.hi,
           "interval does not contain the weight");
    expect(attr.direction == "toward" || attr.direction == "away", "bad direction tag");
  }
  note << "reject + explanation with " << explanation.attributions.size() << " attributions";
}

// --------------------------------------------------------------------------
// 7. Set-confusion partition over 10,000 random batches.
// --------------------------------------------------------------------------
void criterion_confusion_partition(std::ostringstream& note) {
  RngStream rng(7, 0);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = rng.next_index(20);
    std::vector<PredictionRecord> records(n);
    std::vector<std::size_t> truths(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        if (rng.next_double() < 0.4) records[i].prediction_set.push_back(k);
      }
      truths[i] = rng.next_index(3);
    }
    const auto c = set_confusion(records, truths);
    expect(c.total() == n, "partition violated at trial " + std::to_string(trial));
  }
  note << "10000 batches partitioned";
}

// --------------------------------------------------------------------------
// 8. Comparison predictors: coverage and the lambda = 0 oracle.
// --------------------------------------------------------------------------
void criterion_set_predictors(std::ostringstream& note) {
  const auto train = synth_benchmark({600, 600, 600}, 4, 2.0, 801);
  const auto cal = synth_benchmark({1400, 1400, 1400}, 4, 2.0, 802);
  const auto test = synth_benchmark({1400, 1400, 1400}, 4, 2.0, 803);
  TrainConfig cfg;
  cfg.epochs = 120;
  cfg.learning_rate = 0.2;
  cfg.seed = 8;
  const auto model = fit_logistic(train, cfg);
  for (double alpha : {0.05, 0.5}) {
    const auto naive = naive_predictor(*model, cal, alpha);
    const auto topk = topk_predictor(*model, cal, alpha);
    const auto raps = raps_predictor(*model, cal, alpha);
    for (const SetPredictor* pred : {naive.get(), topk.get(), raps.get()}) {
      std::size_t covered = 0;
      for (std::size_t i = 0; i < test.size(); ++i) {
        const auto set = pred->predict_set(test.instances[i]);
        if (std::binary_search(set.begin(), set.end(), test.labels[i])) ++covered;
      }
      const double coverage =
          static_cast<double>(covered) / static_cast<double>(test.size());
      expect(coverage >= 1.0 - alpha - 0.03, pred->method() + " at alpha " + fmt(alpha) +
                                                 ": coverage " + fmt(coverage));
    }
  }

  // lambda = 0 raps equals a brute-force adaptive-set oracle, exactly.
  RngStream rng(808, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k_classes = 2 + rng.next_index(3);
    const std::size_t n = 5 + rng.next_index(25);
    std::vector<std::vector<double>> probs;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < n + 4; ++i) {
      std::vector<double> p(k_classes);
      double sum = 0.0;
      for (double& v : p) {
        v = 0.05 + rng.next_double();
        sum += v;
      }
      for (double& v : p) v /= sum;
      probs.push_back(p);
      labels.push_back(rng.next_index(k_classes));
    }
    Dataset ds;
    ds.label_set = rcp::testing::abc_labels(k_classes);
    ds.feature_names = {"i"};
    for (std::size_t i = 0; i < probs.size(); ++i) {
      ds.instances.push_back({"r" + std::to_string(i), {static_cast<double>(i)}});
      ds.labels.push_back(labels[i]);
    }
    auto table = probs;
    StubModel stub(ds.label_set, [table](const Instance& x) {
      return table[static_cast<std::size_t>(x.features[0])];
    });
    Dataset cal_part = ds;
    cal_part.instances.resize(n);
    cal_part.labels.resize(n);
    const double alpha = 0.05 + 0.4 * rng.next_double();
    const auto pred = raps_predictor(stub, cal_part, alpha, 0.0, 1);

    std::vector<double> scores;
    for (std::size_t i = 0; i < n; ++i) {
      const auto order = probability_order(probs[i]);
      double mass = 0.0;
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        mass += probs[i][order[pos]];
        if (order[pos] == labels[i]) break;
      }
      scores.push_back(mass);
    }
    std::sort(scores.begin(), scores.end());
    const double rank = std::ceil((static_cast<double>(n) + 1.0) * (1.0 - alpha));
    const double tau = rank > static_cast<double>(n)
                           ? std::numeric_limits<double>::infinity()
                           : scores[static_cast<std::size_t>(rank) - 1];
    for (std::size_t i = n; i < probs.size(); ++i) {
      const auto order = probability_order(probs[i]);
      std::size_t take = 1;
      for (std::size_t size = k_classes; size >= 1; --size) {
        double mass = 0.0;
        for (std::size_t pos = 0; pos < size; ++pos) mass += probs[i][order[pos]];
        if (mass <= tau) {
          take = size;
          break;
        }
      }
      std::vector<std::size_t> want(order.begin(),
                                    order.begin() + static_cast<std::ptrdiff_t>(take));
      std::sort(want.begin(), want.end());
      expect(pred->predict_set(ds.instances[i]) == want,
             "raps oracle mismatch at trial " + std::to_string(trial));
    }
  }

  // Report schema of the comparison table.
  const auto dir = fs::temp_directory_path() / "riskcp_acceptance";
  fs::create_directories(dir);
  write_comparison_csv({{0.05, 10, 37, 35, 0}}, (dir / "comparison.csv").string());
  std::ifstream in(dir / "comparison.csv");
  std::string header;
  std::getline(in, header);
  expect(header == "alpha,mondrian,raps,naive,top_k", "comparison schema: " + header);
  note << "coverage + 200 oracle fixtures + schema";
}

// --------------------------------------------------------------------------
// 9. GAN numerics: gradients and interval coverage. Runtime < 120 s.
// --------------------------------------------------------------------------
void criterion_gan(std::ostringstream& note) {
  const auto begin = std::chrono::steady_clock::now();

  RngStream cfg_rng(909, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t in = 1 + cfg_rng.next_index(5);
    const std::size_t hidden = 2 + cfg_rng.next_index(8);
    const std::size_t out = 1 + cfg_rng.next_index(3);
    const bool sigmoid_head = cfg_rng.next_index(2) == 0;
    RngStream rng(1000 + trial, 0);
    Mlp net = Mlp::create({in, hidden, out},
                          {Activation::Tanh,
                           sigmoid_head ? Activation::Sigmoid : Activation::Identity},
                          rng);
    Vec x(in), target(out);
    for (double& v : x) v = rng.next_gaussian();
    for (double& v : target) v = rng.next_gaussian();

    auto loss_at = [&](const Vec& params) {
      Mlp probe = net;
      probe.set_params(params);
      Mlp::Cache cache;
      const Vec o = probe.forward(x, cache);
      if (sigmoid_head) {
        double l = 0.0;
        for (double pre : cache.pre.back()) l += softplus(-pre);
        return l;
      }
      double l = 0.0;
      for (std::size_t i = 0; i < o.size(); ++i) {
        l += 0.5 * (o[i] - target[i]) * (o[i] - target[i]);
      }
      return l;
    };

    Mlp::Cache cache;
    const Vec o = net.forward(x, cache);
    auto grads = net.zero_grads();
    if (sigmoid_head) {
      Vec grad_pre(o.size());
      for (std::size_t i = 0; i < o.size(); ++i) {
        grad_pre[i] = sigmoid(cache.pre.back()[i]) - 1.0;
      }
      net.backward(cache, grad_pre, true, &grads);
    } else {
      Vec grad_out(o.size());
      for (std::size_t i = 0; i < o.size(); ++i) grad_out[i] = o[i] - target[i];
      net.backward(cache, grad_out, false, &grads);
    }
    Vec analytic;
    for (std::size_t l = 0; l < grads.w.size(); ++l) {
      analytic.insert(analytic.end(), grads.w[l].a.begin(), grads.w[l].a.end());
      analytic.insert(analytic.end(), grads.b[l].begin(), grads.b[l].end());
    }
    const Vec params = net.flatten_params();
    const double h = 1e-5;
    for (std::size_t w = 0; w < params.size(); ++w) {
      Vec plus = params, minus = params;
      plus[w] += h;
      minus[w] -= h;
      const double numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
      const double scale = std::max(1e-8, std::fabs(analytic[w]) + std::fabs(numeric));
      expect(std::fabs(analytic[w] - numeric) / scale < 1e-4,
             "gradient mismatch in config " + std::to_string(trial));
    }
  }

  // Interval coverage on a 2-d Gaussian task across 20 seeds.
  const double alpha = 0.1;
  std::size_t inside = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Dataset real;
    real.label_set = LabelSet({"TI", "TF"});
    real.feature_names = {"f1", "f2"};
    RngStream rng(5000 + seed, 0);
    for (int i = 0; i < 240; ++i) {
      real.instances.push_back(
          {"r" + std::to_string(i + 1), {rng.next_gaussian(), rng.next_gaussian()}});
      real.labels.push_back(0);
    }
    GanTrainConfig cfg;
    cfg.members = 2;
    cfg.noise_dim = 4;
    cfg.hidden = 8;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.alpha = alpha;
    cfg.seed = seed;
    const auto ens = gan_fit(real, cfg);
    for (int i = 0; i < 150; ++i) {
      const Instance fresh{"q", {rng.next_gaussian(), rng.next_gaussian()}};
      total += 1;
      if (!conformalized_discriminate(ens, fresh).synthetic) ++inside;
    }
  }
  const double rate = static_cast<double>(inside) / static_cast<double>(total);
  expect(rate >= 1.0 - alpha - 0.05,
         "interval coverage " + fmt(rate) + " below " + fmt(1.0 - alpha - 0.05));

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  expect(secs < 120.0, "runtime " + fmt(secs) + " s exceeds 120 s");
  note << "gradients exact to 1e-4, interval coverage " << fmt(rate) << ", " << fmt(secs)
       << " s";
}

// --------------------------------------------------------------------------
// 10. CLI determinism: byte-identical payloads for every subcommand.
// --------------------------------------------------------------------------
std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RISKCP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

// Hash of every payload file (run report normalized: timings and absolute
// paths stripped), keyed by file name.
std::uint64_t payload_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& file : files) {
    std::string content = slurp(file);
    if (file.filename() == "run_report.json") {
      auto doc = nlohmann::json::parse(content);
      doc.erase("timings_ms");
      doc.erase("config");
      for (auto& p : doc["outputs"]) p = fs::path(p.get<std::string>()).filename().string();
      content = doc.dump();
    }
    h ^= fnv1a(file.filename().string() + ":" + content);
  }
  return h;
}

void criterion_cli_determinism(std::ostringstream& note) {
  const auto base = fs::temp_directory_path() / "riskcp_acceptance" / "determinism";
  fs::remove_all(base);
  fs::create_directories(base);

  // Fixture inputs shared by the command list.
  expect(run_cli("synth --per-class 120,120 --dim 3 --sep 1 --seed 51 --output-dir " +
                 (base / "data").string()) == 0,
         "fixture synth failed");
  const std::string data = (base / "data" / "synthetic.csv").string();
  expect(run_cli("fit --input " + data + " --seed 1 --output-dir " +
                 (base / "model").string()) == 0,
         "fixture fit failed");
  const std::string model = (base / "model" / "model.json").string();
  expect(run_cli("predict --input " + data + " --calibration " + data + " --model " + model +
                 " --alpha 0.6 --output-dir " + (base / "records").string()) == 0,
         "fixture predict failed");
  const std::string records = (base / "records" / "records.csv").string();
  expect(run_cli("gan-train --input " + data + " --class TI --m 1 --epochs 3 --hidden 8 " +
                 "--noise-dim 3 --batch-size 16 --seed 2 --output-dir " +
                 (base / "gan").string()) == 0,
         "fixture gan-train failed");
  const std::string ensemble = (base / "gan" / "ensemble.json").string();
  expect(run_cli("gan-sample --ensemble " + ensemble + " --n 40 --label TI --seed 3 " +
                 "--output-dir " + (base / "genti").string()) == 0,
         "fixture gan-sample failed");
  const std::string gen_ti = (base / "genti" / "samples.csv").string();

  // A rejected id for the explain command.
  std::string rejected_id;
  {
    std::ifstream in(records);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.find(",true,") != std::string::npos) {
        rejected_id = line.substr(0, line.find(','));
        break;
      }
    }
  }
  expect(!rejected_id.empty(), "no rejected instance in the fixture records");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "synth --per-class 80,40 --dim 3 --sep 2 --seed 9"},
      {"fit", "fit --input " + data + " --seed 4"},
      {"predict", "predict --input " + data + " --calibration " + data + " --model " + model +
                      " --alpha 0.1 --smoothed"},
      {"evaluate", "evaluate --input " + data + " --alpha 0.1 --alphas 0.1,0.5 --seed 6"},
      {"rank", "rank --input " + records + " --targets TI"},
      {"explain", "explain --input " + data + " --calibration " + data + " --model " + model +
                      " --id " + rejected_id + " --alpha 0.6 --seed 7 --perturbations 60"},
      {"gan-train", "gan-train --input " + data +
                        " --class TI --m 1 --epochs 2 --hidden 6 --noise-dim 2 "
                        "--batch-size 16 --seed 8"},
      {"gan-sample", "gan-sample --ensemble " + ensemble + " --n 30 --keep 0.5 --label TI "
                         "--seed 9"},
      {"evolve", "evolve --input " + data + " --generated-infected " + gen_ti},
      {"coverage-check", "coverage-check --trials 3 --n-cal 200 --n-test 200 --alpha 0.2 "
                             "--seed 10"},
  };

  for (const auto& [name, args] : commands) {
    const auto dir_a = base / (name + "_a");
    const auto dir_b = base / (name + "_b");
    expect(run_cli(args + " --output-dir " + dir_a.string()) == 0, name + " run A failed");
    expect(run_cli(args + " --output-dir " + dir_b.string()) == 0, name + " run B failed");
    expect(payload_hash(dir_a) == payload_hash(dir_b), name + ": payload hashes differ");
  }
  note << commands.size() << " subcommands byte-identical";
}

// --------------------------------------------------------------------------
// 11. Ranking order and permutation property.
// --------------------------------------------------------------------------
void criterion_ranking(std::ostringstream& note) {
  auto make = [](std::string id, double conf, double cred) {
    PredictionRecord r;
    r.id = std::move(id);
    r.point_prediction = 2;
    r.prediction_set = {2};
    r.confidence = conf;
    r.credibility = cred;
    return r;
  };
  const auto ranked =
      ranking({make("c13", 0.81, 0.3), make("c14", 0.61, 0.2), make("c12", 0.88, 0.4)}, {2});
  expect(ranked.size() == 3, "wrong ranked count");
  expect(ranked[0].id == "c12" && ranked[1].id == "c13" && ranked[2].id == "c14",
         "confidence order broken");

  RngStream rng(11, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<PredictionRecord> records;
    const std::size_t n = rng.next_index(25);
    for (std::size_t i = 0; i < n; ++i) {
      PredictionRecord r;
      r.id = "r" + std::to_string(i);
      r.point_prediction = rng.next_index(3);
      r.confidence = rng.next_double();
      r.credibility = rng.next_double();
      r.rejected = rng.next_double() < 0.3;
      if (!r.rejected) r.prediction_set = {r.point_prediction};
      records.push_back(std::move(r));
    }
    const auto out = ranking(records, {1, 2});
    std::multiset<std::string> expected, got;
    for (const auto& r : records) {
      if (!r.rejected && r.point_prediction >= 1) expected.insert(r.id);
    }
    for (const auto& r : out) got.insert(r.id);
    expect(expected == got, "ranking lost or duplicated records");
    for (std::size_t i = 1; i < out.size(); ++i) {
      expect(out[i - 1].confidence >= out[i].confidence, "confidence not descending");
    }
  }
  note << "order + permutation over 1000 batches";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, CriterionFn>> criteria = {
      {"coverage guarantee (smoothed, 30 trials, alpha 0.05/0.1/0.2)", criterion_coverage},
      {"class-conditional coverage under 10:1:2 imbalance", criterion_class_conditional},
      {"alpha-sweep calibration and monotone efficiency", criterion_sweep},
      {"p-value brute-force oracle, 1000 micro-cases", criterion_pvalue_oracle},
      {"reported-table p-vector rows at alpha 0.05", criterion_reference_rows},
      {"reject path and calibrated explanation", criterion_reject},
      {"set-confusion partition, 10000 cases", criterion_confusion_partition},
      {"comparison predictors: coverage, raps oracle, schema", criterion_set_predictors},
      {"GAN gradients and discriminator interval coverage", criterion_gan},
      {"CLI determinism across all subcommands", criterion_cli_determinism},
      {"confidence ranking", criterion_ranking},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), number) == selected.end()) {
      continue;
    }
    std::ostringstream note;
    try {
      criteria[i].second(note);
      std::cout << "[PASS] criterion " << number << ": " << criteria[i].first << " -- "
                << note.str() << '\n';
    } catch (const Failure& f) {
      ++failures;
      std::cout << "[FAIL] criterion " << number << ": " << criteria[i].first << " -- "
                << f.detail << '\n';
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "[FAIL] criterion " << number << ": " << criteria[i].first
                << " -- exception: " << e.what() << '\n';
    }
  }
  return failures;
}
