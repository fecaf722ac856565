// riskcp: risk-aware set-valued classification over tabular features.
// Subcommands cover the full pipeline: data synthesis, GAN training and
// sampling, evolved-dataset assembly, model fitting, conformal prediction,
// evaluation, ranking, reject explanations, and the coverage harness.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskcp/conformal.hpp"
#include "riskcp/dataset.hpp"
#include "riskcp/error.hpp"
#include "riskcp/explain.hpp"
#include "riskcp/gan.hpp"
#include "riskcp/knn.hpp"
#include "riskcp/logistic.hpp"
#include "riskcp/metrics.hpp"
#include "riskcp/model_eval.hpp"
#include "riskcp/reports.hpp"
#include "riskcp/setpredictors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kSchemaVersion = "1";

class StageTimer {
 public:
  void start(const std::string& stage) {
    stage_ = stage;
    begin_ = std::chrono::steady_clock::now();
  }
  void stop() {
    const auto end = std::chrono::steady_clock::now();
    timings_[stage_] =
        std::chrono::duration_cast<std::chrono::milliseconds>(end - begin_).count();
  }
  json to_json() const { return timings_; }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point begin_;
  std::map<std::string, long long> timings_;
};

struct RunContext {
  std::string subcommand;
  fs::path output_dir;
  json config = json::object();
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  StageTimer timer;

  fs::path out_path(const std::string& name) {
    outputs.push_back((output_dir / name).string());
    return output_dir / name;
  }

  void warn(const std::string& message) {
    warnings.push_back(message);
    std::cerr << "warning: " << message << '\n';
  }

  // The run report carries the resolved config and every emitted file.
  // Timings live under their own key so reruns stay comparable after
  // stripping them.
  void write_report() {
    json report{{"schema_version", kSchemaVersion},
                {"tool", "riskcp"},
                {"version", kVersion},
                {"subcommand", subcommand},
                {"config", config},
                {"outputs", outputs},
                {"warnings", warnings},
                {"timings_ms", timer.to_json()}};
    std::ofstream out(output_dir / "run_report.json");
    if (!out) throw rcp::ValidationError("cannot write run report");
    out << report.dump(2) << '\n';
  }
};

RunContext make_context(const std::string& subcommand, const std::string& output_dir) {
  RunContext ctx;
  ctx.subcommand = subcommand;
  ctx.output_dir = output_dir;
  std::error_code ec;
  fs::create_directories(ctx.output_dir, ec);
  if (ec) throw rcp::ValidationError("cannot create output dir: " + output_dir);
  return ctx;
}

std::vector<std::size_t> parse_counts(const std::string& csv) {
  std::vector<std::size_t> counts;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const long v = std::strtol(tok.c_str(), nullptr, 10);
    if (v <= 0) throw rcp::ValidationError("counts must be positive integers: " + csv);
    counts.push_back(static_cast<std::size_t>(v));
  }
  if (counts.empty()) throw rcp::ValidationError("empty count list");
  return counts;
}

std::vector<double> parse_alphas(const std::string& csv) {
  std::vector<double> alphas;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const double a = std::strtod(tok.c_str(), nullptr);
    if (!(a > 0.0 && a < 1.0)) throw rcp::ValidationError("alphas must be in (0,1): " + csv);
    alphas.push_back(a);
  }
  if (alphas.empty()) throw rcp::ValidationError("empty alpha list");
  return alphas;
}

rcp::SplitSpec parse_ratios(const std::string& spec) {
  rcp::SplitSpec out;
  double vals[3];
  std::stringstream ss(spec);
  std::string tok;
  int i = 0;
  while (std::getline(ss, tok, ':') && i < 3) vals[i++] = std::strtod(tok.c_str(), nullptr);
  if (i != 3) throw rcp::ValidationError("ratios must look like 2:1:1, got " + spec);
  out.train = vals[0];
  out.calibration = vals[1];
  out.test = vals[2];
  return out;
}

std::vector<std::size_t> resolve_targets(const rcp::LabelSet& labels,
                                         const std::string& targets_csv) {
  std::vector<std::size_t> targets;
  if (targets_csv.empty()) {
    // Default: everything but the first label (the benign/free class).
    for (std::size_t k = 1; k < labels.size(); ++k) targets.push_back(k);
    return targets;
  }
  std::stringstream ss(targets_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto idx = labels.index_of(tok);
    if (!idx) throw rcp::ValidationError("unknown target label '" + tok + "'");
    targets.push_back(*idx);
  }
  return targets;
}

// Instance-level CSV used for generated samples, which have a single label
// and therefore cannot ride the two-label dataset loader.
void write_instances_csv(const std::vector<rcp::Instance>& instances,
                         const std::vector<std::string>& feature_names,
                         const std::string& label, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw rcp::ValidationError("cannot write file: " + path.string());
  for (const auto& name : feature_names) out << name << ',';
  out << "label\n";
  for (const auto& inst : instances) {
    for (double v : inst.features) out << rcp::format_number(v) << ',';
    out << label << '\n';
  }
}

std::pair<std::vector<rcp::Instance>, std::vector<std::string>> read_instances_csv(
    const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw rcp::ValidationError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw rcp::ValidationError("empty file: " + path);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty() && tok.back() == '\r') tok.pop_back();
      header.push_back(tok);
    }
  }
  std::size_t label_col = header.size();
  std::vector<std::string> feature_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == label_column) {
      label_col = j;
    } else {
      feature_names.push_back(header[j]);
    }
  }
  std::vector<rcp::Instance> instances;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rcp::Instance inst;
    inst.id = "r" + std::to_string(++row);
    std::stringstream ss(line);
    std::string tok;
    std::size_t col = 0;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty() && tok.back() == '\r') tok.pop_back();
      if (col != label_col) {
        const char* begin = tok.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0') {
          throw rcp::ValidationError("non-numeric cell '" + tok + "' in " + path);
        }
        inst.features.push_back(v);
      }
      ++col;
    }
    instances.push_back(std::move(inst));
  }
  return {std::move(instances), std::move(feature_names)};
}

struct FitFlags {
  std::string model_type = "logistic";
  rcp::TrainConfig train;
  std::size_t knn_k = 5;
  std::size_t ensemble = 1;
};

std::unique_ptr<rcp::ScoreModel> fit_model(const rcp::Dataset& train, const FitFlags& flags) {
  if (flags.model_type == "logistic") {
    if (flags.ensemble > 1) {
      return rcp::fit_logistic_ensemble(train, flags.train, flags.ensemble);
    }
    return rcp::fit_logistic(train, flags.train);
  }
  if (flags.model_type == "knn") return rcp::fit_knn(train, flags.knn_k);
  throw rcp::ValidationError("unknown model type '" + flags.model_type + "'");
}

// Prediction sets for one method at one significance level.
std::vector<std::vector<std::size_t>> sets_for_method(
    const std::string& method, const rcp::ScoreModel& model,
    const rcp::CalibrationTable& table, const rcp::Dataset& cal, const rcp::Dataset& test,
    double alpha, bool smoothed, double raps_lambda, std::size_t raps_kreg,
    std::size_t threads) {
  std::vector<std::vector<std::size_t>> sets;
  sets.reserve(test.size());
  if (method == "mondrian") {
    for (auto& rec : rcp::predict_batch(model, table, test, alpha, smoothed, threads)) {
      sets.push_back(std::move(rec.prediction_set));
    }
    return sets;
  }
  std::unique_ptr<rcp::SetPredictor> pred;
  if (method == "naive") {
    pred = rcp::naive_predictor(model, cal, alpha);
  } else if (method == "topk") {
    pred = rcp::topk_predictor(model, cal, alpha);
  } else if (method == "raps") {
    pred = rcp::raps_predictor(model, cal, alpha, raps_lambda, raps_kreg);
  } else {
    throw rcp::ValidationError("unknown method '" + method + "'");
  }
  for (const auto& inst : test.instances) sets.push_back(pred->predict_set(inst));
  return sets;
}

std::vector<rcp::PredictionRecord> records_from_sets(
    const std::vector<std::vector<std::size_t>>& sets, const rcp::Dataset& test,
    double alpha) {
  std::vector<rcp::PredictionRecord> records(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    records[i].id = test.instances[i].id;
    records[i].prediction_set = sets[i];
    records[i].rejected = sets[i].empty();
    records[i].alpha = alpha;
  }
  return records;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& per_class, std::size_t dim, double sep, std::uint64_t seed,
              const std::string& output_dir) {
  auto ctx = make_context("synth", output_dir);
  ctx.config = {{"per_class", per_class}, {"dim", dim}, {"sep", sep}, {"seed", seed}};
  ctx.timer.start("synth");
  const auto ds = rcp::synth_benchmark(parse_counts(per_class), dim, sep, seed);
  rcp::save_csv(ds, ctx.out_path("synthetic.csv").string());
  ctx.timer.stop();
  ctx.write_report();
  std::cout << "wrote " << ds.size() << " rows, " << ds.label_set.size() << " classes, dim "
            << ds.dim() << '\n';
  return 0;
}

int cmd_fit(const std::string& input, const std::string& label_column, const FitFlags& flags,
            const std::string& output_dir) {
  auto ctx = make_context("fit", output_dir);
  ctx.config = {{"input", input},
                {"label_column", label_column},
                {"model", flags.model_type},
                {"epochs", flags.train.epochs},
                {"learning_rate", flags.train.learning_rate},
                {"l2", flags.train.l2},
                {"batch_size", flags.train.batch_size},
                {"knn_k", flags.knn_k},
                {"ensemble", flags.ensemble},
                {"seed", flags.train.seed}};
  ctx.timer.start("load");
  const auto ds = rcp::load_csv(input, label_column);
  ctx.timer.stop();
  ctx.timer.start("fit");
  const auto model = fit_model(ds, flags);
  ctx.timer.stop();
  rcp::save_model(*model, ctx.out_path("model.json").string());
  ctx.write_report();
  std::cout << "fit " << flags.model_type << " on " << ds.size() << " rows; training accuracy "
            << rcp::format_number(rcp::accuracy(*model, ds)) << '\n';
  return 0;
}

int cmd_predict(const std::string& input, const std::string& calibration,
                const std::string& model_path, const std::string& label_column, double alpha,
                bool smoothed, std::size_t threads, const std::string& output_dir) {
  auto ctx = make_context("predict", output_dir);
  ctx.config = {{"input", input},       {"calibration", calibration}, {"model", model_path},
                {"label_column", label_column}, {"alpha", alpha},     {"smoothed", smoothed},
                {"threads", threads}};
  ctx.timer.start("load");
  const auto model = rcp::load_model(model_path);
  const auto cal = rcp::reindex_labels(rcp::load_csv(calibration, label_column),
                                       model->label_set());
  const auto test = rcp::reindex_labels(rcp::load_csv(input, label_column),
                                        model->label_set());
  ctx.timer.stop();
  ctx.timer.start("calibrate");
  const auto table = rcp::calibrate(*model, cal);
  ctx.timer.stop();
  ctx.timer.start("predict");
  const auto records = rcp::predict_batch(*model, table, test, alpha, smoothed, threads);
  ctx.timer.stop();
  rcp::write_records_csv(records, model->label_set(), ctx.out_path("records.csv").string());
  ctx.write_report();
  std::size_t rejects = 0;
  for (const auto& r : records) rejects += r.rejected ? 1 : 0;
  std::cout << records.size() << " predictions, " << rejects << " rejects at alpha "
            << rcp::format_number(alpha) << '\n';
  return 0;
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw rcp::ValidationError("--alpha must be in (0,1), got " + rcp::format_number(alpha));
  }
}

// Annotates failures with the pipeline stage they came from.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const rcp::ValidationError& e) {
    throw rcp::ValidationError("stage " + name + ": " + e.what());
  }
}

int cmd_evaluate(const std::string& input, const std::string& label_column,
                 const std::string& ratios, bool stratified, const FitFlags& flags,
                 const std::string& method, double alpha, const std::string& alphas_csv,
                 bool smoothed, double raps_lambda, std::size_t raps_kreg,
                 const std::string& targets_csv, std::uint64_t seed, std::size_t threads,
                 const std::string& output_dir) {
  require_alpha(alpha);
  auto ctx = make_context("evaluate", output_dir);
  ctx.config = {{"input", input},   {"label_column", label_column},
                {"ratios", ratios}, {"stratified", stratified},
                {"model", flags.model_type}, {"method", method},
                {"alpha", alpha},   {"alphas", alphas_csv},
                {"smoothed", smoothed}, {"raps_lambda", raps_lambda},
                {"raps_kreg", raps_kreg}, {"targets", targets_csv},
                {"seed", seed},     {"threads", threads},
                {"ensemble", flags.ensemble}};

  ctx.timer.start("load");
  const auto ds = stage("load", [&] { return rcp::load_csv(input, label_column); });
  ctx.timer.stop();

  ctx.timer.start("split");
  rcp::SplitSpec spec = parse_ratios(ratios);
  spec.seed = seed;
  spec.stratified = stratified;
  const auto [train, cal, test] = stage("split", [&] { return rcp::split(ds, spec); });
  ctx.timer.stop();
  if (cal.size() == 0 || test.size() == 0) {
    throw rcp::ValidationError("stage split: calibration or test split is empty");
  }

  ctx.timer.start("fit");
  const auto model = stage("fit", [&] { return fit_model(train, flags); });
  ctx.timer.stop();

  ctx.timer.start("calibrate");
  const auto table = stage("calibrate", [&] { return rcp::calibrate(*model, cal); });
  ctx.timer.stop();

  const auto alphas = parse_alphas(alphas_csv);
  const auto targets = resolve_targets(ds.label_set, targets_csv);

  ctx.timer.start("predict");
  const auto records = rcp::predict_batch(*model, table, test, alpha, smoothed, threads);
  rcp::write_records_csv(records, ds.label_set, ctx.out_path("records.csv").string());
  rcp::write_ranking_csv(rcp::ranking(records, targets), ds.label_set,
                         ctx.out_path("ranking.csv").string());
  ctx.timer.stop();

  ctx.timer.start("sweep");
  std::vector<rcp::SweepRow> sweep;
  if (method == "mondrian") {
    sweep = rcp::alpha_sweep(*model, table, test, alphas, smoothed, threads);
  } else {
    for (double a : alphas) {
      const auto sets = sets_for_method(method, *model, table, cal, test, a, smoothed,
                                        raps_lambda, raps_kreg, threads);
      const auto recs = records_from_sets(sets, test, a);
      rcp::SweepRow row;
      row.sig = a;
      row.mean_err = 1.0 - rcp::effective_coverage(recs, test.labels);
      row.avg_c = rcp::avg_set_size(recs);
      row.n_correct = 0;
      row.per_class_err.assign(ds.label_set.size(), 0.0);
      row.per_class_avg_size.assign(ds.label_set.size(), 0.0);
      std::vector<std::size_t> class_n(ds.label_set.size(), 0);
      for (std::size_t i = 0; i < recs.size(); ++i) {
        const std::size_t y = test.labels[i];
        ++class_n[y];
        if (recs[i].set_contains(y)) {
          ++row.n_correct;
        } else {
          row.per_class_err[y] += 1.0;
        }
        row.per_class_avg_size[y] += static_cast<double>(recs[i].prediction_set.size());
      }
      for (std::size_t k = 0; k < class_n.size(); ++k) {
        if (class_n[k] > 0) {
          row.per_class_err[k] /= static_cast<double>(class_n[k]);
          row.per_class_avg_size[k] /= static_cast<double>(class_n[k]);
        }
      }
      sweep.push_back(std::move(row));
    }
  }
  rcp::write_sweep_csv(sweep, ds.label_set, ctx.out_path("sweep.csv").string());
  {
    json rows_doc = json::array();
    for (const auto& row : sweep) {
      rows_doc.push_back({{"sig", row.sig},
                          {"mean_err", row.mean_err},
                          {"avg_c", row.avg_c},
                          {"n_correct", row.n_correct},
                          {"per_class_err", row.per_class_err},
                          {"per_class_avg_size", row.per_class_avg_size}});
    }
    json doc{{"schema_version", kSchemaVersion},
             {"labels", ds.label_set.names()},
             {"rows", rows_doc}};
    std::ofstream out(ctx.out_path("sweep.json"));
    out << doc.dump(2) << '\n';
  }
  ctx.timer.stop();

  ctx.timer.start("confusion");
  const auto sets = sets_for_method(method, *model, table, cal, test, alpha, smoothed,
                                    raps_lambda, raps_kreg, threads);
  const auto confusion = rcp::set_confusion(records_from_sets(sets, test, alpha), test.labels);
  {
    json doc = rcp::confusion_to_json(confusion);
    doc["method"] = method;
    doc["alpha"] = alpha;
    doc["schema_version"] = kSchemaVersion;
    std::ofstream out(ctx.out_path("confusion.json"));
    out << doc.dump(2) << '\n';
    std::ofstream csv(ctx.out_path("confusion.csv"));
    csv << "correct_singleton,incorrect_singleton,inconclusive,empty,total\n"
        << confusion.correct_singleton << ',' << confusion.incorrect_singleton << ','
        << confusion.inconclusive << ',' << confusion.empty << ',' << confusion.total()
        << '\n';
  }
  ctx.timer.stop();

  ctx.timer.start("comparison");
  std::vector<rcp::ComparisonRow> comparison;
  for (double a : alphas) {
    rcp::ComparisonRow row;
    row.alpha = a;
    auto count = [&](const std::string& m) {
      const auto s = sets_for_method(m, *model, table, cal, test, a, smoothed, raps_lambda,
                                     raps_kreg, threads);
      std::size_t detected = 0;
      for (const auto& set : s) {
        if (set.empty()) continue;
        bool subset = true;
        for (std::size_t k : set) {
          if (std::find(targets.begin(), targets.end(), k) == targets.end()) {
            subset = false;
            break;
          }
        }
        if (subset) ++detected;
      }
      return detected;
    };
    row.mondrian = count("mondrian");
    row.raps = count("raps");
    row.naive = count("naive");
    row.top_k = count("topk");
    comparison.push_back(row);
  }
  rcp::write_comparison_csv(comparison, ctx.out_path("comparison.csv").string());
  ctx.timer.stop();

  ctx.write_report();
  std::cout << "evaluate: model accuracy " << rcp::format_number(rcp::accuracy(*model, test))
            << ", coverage at alpha " << rcp::format_number(alpha) << " is "
            << rcp::format_number(rcp::effective_coverage(records, test.labels)) << '\n';
  return 0;
}

int cmd_rank(const std::string& input, const std::string& targets_csv,
             const std::string& output_dir) {
  auto ctx = make_context("rank", output_dir);
  ctx.config = {{"input", input}, {"targets", targets_csv}};
  ctx.timer.start("rank");
  const auto file = rcp::read_records_csv(input);
  const auto targets = resolve_targets(file.labels, targets_csv);
  const auto ranked = rcp::ranking(file.records, targets);
  rcp::write_ranking_csv(ranked, file.labels, ctx.out_path("ranking.csv").string());
  ctx.timer.stop();
  ctx.write_report();
  std::cout << ranked.size() << " of " << file.records.size() << " records ranked\n";
  return 0;
}

int cmd_explain(const std::string& input, const std::string& calibration,
                const std::string& model_path, const std::string& label_column,
                const std::string& id, double alpha, bool smoothed,
                const rcp::PerturbConfig& pcfg, const std::string& output_dir) {
  require_alpha(alpha);
  auto ctx = make_context("explain", output_dir);
  ctx.config = {{"input", input},   {"calibration", calibration},
                {"model", model_path}, {"label_column", label_column},
                {"id", id},         {"alpha", alpha},
                {"smoothed", smoothed}, {"perturbations", pcfg.perturbations},
                {"sigma_scale", pcfg.sigma_scale}, {"top_j", pcfg.top_j},
                {"seed", pcfg.seed}};

  ctx.timer.start("load");
  const auto model = rcp::load_model(model_path);
  const auto cal = rcp::reindex_labels(rcp::load_csv(calibration, label_column),
                                       model->label_set());
  const auto test = rcp::reindex_labels(rcp::load_csv(input, label_column),
                                        model->label_set());
  ctx.timer.stop();

  const rcp::Instance* target = nullptr;
  for (const auto& inst : test.instances) {
    if (inst.id == id) {
      target = &inst;
      break;
    }
  }
  if (!target) throw rcp::ValidationError("id not found: '" + id + "' in " + input);

  ctx.timer.start("explain");
  const auto table = rcp::calibrate(*model, cal);
  const auto stats = rcp::Standardizer::fit(cal);
  const auto explanation = rcp::explain_reject(*model, table, *target, alpha, pcfg,
                                               stats.stds, test.feature_names, smoothed);
  ctx.timer.stop();

  {
    json doc = rcp::explanation_to_json(explanation);
    doc["schema_version"] = kSchemaVersion;
    std::ofstream out(ctx.out_path("explanation.json"));
    out << doc.dump(2) << '\n';
  }
  ctx.write_report();

  std::cout << "instance " << id << " rejected at alpha " << rcp::format_number(alpha)
            << "; p-values:";
  for (std::size_t k = 0; k < explanation.p_values.size(); ++k) {
    std::cout << ' ' << model->label_set().name(k) << '='
              << rcp::format_number(explanation.p_values[k]);
  }
  std::cout << "\ntop attributions:\n";
  for (const auto& a : explanation.attributions) {
    std::cout << "  " << a.label << " <- " << a.feature << " weight "
              << rcp::format_number(a.weight) << " [" << rcp::format_number(a.lo) << ", "
              << rcp::format_number(a.hi) << "] pushes " << a.direction << '\n';
  }
  return 0;
}

int cmd_gan_train(const std::string& input, const std::string& label_column,
                  const std::string& class_name, const rcp::GanTrainConfig& cfg,
                  const std::string& output_dir) {
  auto ctx = make_context("gan-train", output_dir);
  ctx.config = {{"input", input},       {"label_column", label_column},
                {"class", class_name},  {"m", cfg.members},
                {"epochs", cfg.epochs}, {"noise_dim", cfg.noise_dim},
                {"hidden", cfg.hidden}, {"learning_rate", cfg.learning_rate},
                {"batch_size", cfg.batch_size}, {"gan_alpha", cfg.alpha},
                {"seed", cfg.seed}};

  ctx.timer.start("load");
  const auto ds = rcp::load_csv(input, label_column);
  const auto idx = ds.label_set.index_of(class_name);
  if (!idx) throw rcp::ValidationError("class '" + class_name + "' not in dataset labels");
  const auto real = rcp::filter_class(ds, *idx);
  ctx.timer.stop();

  if (cfg.epochs == 0) {
    ctx.warn("epochs=0: ensemble returned with randomly initialized networks");
  }

  ctx.timer.start("train");
  const auto ens = rcp::gan_fit(real, cfg);
  ctx.timer.stop();

  {
    std::ofstream out(ctx.out_path("ensemble.json"));
    out << ens.to_json().dump() << '\n';
  }

  // Marginal diagnostics against a quick sample; descriptive only.
  ctx.timer.start("diagnostics");
  const std::size_t n_diag = std::min<std::size_t>(2000, 4 * real.size());
  const auto sample = rcp::gan_sample(ens, n_diag, cfg.seed ^ 0x5A5A5A5AULL);
  rcp::Dataset synth;
  synth.label_set = ds.label_set;
  synth.feature_names = ds.feature_names;
  for (const auto& inst : sample) {
    synth.instances.push_back(inst);
    synth.labels.push_back(*idx);
  }
  const auto diffs = rcp::compare_marginals(real, synth);
  {
    std::ofstream out(ctx.out_path("marginals.csv"));
    out << "feature,mean_diff,stddev_ratio,ks\n";
    for (const auto& d : diffs) {
      out << d.feature << ',' << rcp::format_number(d.mean_diff) << ','
          << rcp::format_number(d.stddev_ratio) << ',' << rcp::format_number(d.ks) << '\n';
    }
  }
  ctx.timer.stop();
  ctx.write_report();
  std::cout << "trained " << cfg.members << " pairs on " << real.size() << " '" << class_name
            << "' rows; interval [" << rcp::format_number(ens.interval_lo) << ", "
            << rcp::format_number(ens.interval_hi) << "]\n";
  return 0;
}

int cmd_gan_sample(const std::string& ensemble_path, std::size_t n, double keep,
                   const std::string& label, std::uint64_t seed,
                   const std::string& output_dir) {
  auto ctx = make_context("gan-sample", output_dir);
  ctx.config = {{"ensemble", ensemble_path}, {"n", n},       {"keep", keep},
                {"label", label},            {"seed", seed}};
  if (!(keep > 0.0 && keep <= 1.0)) throw rcp::ValidationError("--keep must be in (0,1]");

  ctx.timer.start("load");
  std::ifstream in(ensemble_path);
  if (!in) throw rcp::ValidationError("cannot open ensemble file: " + ensemble_path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw rcp::ValidationError(std::string("bad ensemble JSON: ") + e.what());
  }
  const auto ens = rcp::GanEnsemble::from_json(doc);
  ctx.timer.stop();

  ctx.timer.start("sample");
  auto samples = rcp::gan_sample(ens, n, seed);
  if (keep < 1.0) {
    // Uniform random subset, chosen by seed; order of survivors preserved.
    const auto target = static_cast<std::size_t>(
        std::floor(keep * static_cast<double>(samples.size())));
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    rcp::RngStream rng(seed, 1);
    rng.shuffle(order);
    order.resize(std::max<std::size_t>(target, 1));
    std::sort(order.begin(), order.end());
    std::vector<rcp::Instance> kept;
    kept.reserve(order.size());
    for (std::size_t i : order) kept.push_back(std::move(samples[i]));
    samples = std::move(kept);
  }
  write_instances_csv(samples, ens.feature_names, label, ctx.out_path("samples.csv"));
  ctx.timer.stop();
  ctx.write_report();
  std::cout << "wrote " << samples.size() << " samples\n";
  return 0;
}

int cmd_evolve(const std::string& input, const std::string& label_column,
               const std::string& generated_infected, const std::string& generated_free,
               const std::string& evolved_label, const std::string& output_dir) {
  auto ctx = make_context("evolve", output_dir);
  ctx.config = {{"input", input},
                {"label_column", label_column},
                {"generated_infected", generated_infected},
                {"generated_free", generated_free},
                {"evolved_label", evolved_label}};
  ctx.timer.start("evolve");
  const auto source = rcp::load_csv(input, label_column);
  std::vector<rcp::Instance> infected, free_rows;
  if (!generated_infected.empty()) {
    infected = read_instances_csv(generated_infected, label_column).first;
  }
  if (!generated_free.empty()) {
    free_rows = read_instances_csv(generated_free, label_column).first;
  }
  const auto evolved = rcp::assemble_evolved(source, infected, free_rows, evolved_label);
  rcp::save_csv(evolved, ctx.out_path("evolved.csv").string(), label_column);
  ctx.timer.stop();
  ctx.write_report();
  const auto counts = evolved.class_counts();
  std::cout << "evolved dataset: ";
  for (std::size_t k = 0; k < counts.size(); ++k) {
    std::cout << evolved.label_set.name(k) << '=' << counts[k]
              << (k + 1 < counts.size() ? ", " : "\n");
  }
  return 0;
}

int cmd_coverage_check(std::size_t trials, std::size_t n_cal, std::size_t n_test, double alpha,
                       const std::string& weights_csv, std::uint64_t seed,
                       const std::string& output_dir) {
  auto ctx = make_context("coverage-check", output_dir);
  ctx.config = {{"trials", trials}, {"n_cal", n_cal},   {"n_test", n_test},
                {"alpha", alpha},   {"weights", weights_csv}, {"seed", seed}};
  ctx.timer.start("check");
  const auto check = rcp::coverage_guarantee_check(trials, n_cal, n_test, alpha, seed,
                                                   parse_counts(weights_csv));
  ctx.timer.stop();
  {
    json doc{{"schema_version", kSchemaVersion},
             {"coverage", check.coverage},
             {"bound", check.bound},
             {"pass", check.pass},
             {"per_class_coverage", check.per_class_coverage}};
    std::ofstream out(ctx.out_path("coverage.json"));
    out << doc.dump(2) << '\n';
  }
  ctx.write_report();
  std::cout << "coverage " << rcp::format_number(check.coverage) << " vs bound "
            << rcp::format_number(check.bound) << " -> " << (check.pass ? "pass" : "FAIL")
            << '\n';
  return check.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risk-aware set-valued classification toolkit"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config");
  app.require_subcommand(1);

  // Shared flag values.
  std::string input, output_dir = "out", label_column = "label";
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double alpha = 0.05;
  std::string alphas_csv = "0.05,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  bool smoothed = false;

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    if (needs_input) {
      cmd->add_option("--input", input, "input CSV path")->required();
    }
    cmd->add_option("--output-dir", output_dir, "directory for reports");
    cmd->add_option("--seed", seed, "random seed");
  };

  // synth
  std::string per_class = "500,50,100";
  std::size_t dim = 8;
  double sep = 3.0;
  auto* synth = app.add_subcommand("synth", "generate a labeled Gaussian-mixture benchmark");
  add_common(synth, false);
  synth->add_option("--per-class", per_class, "comma list of per-class counts");
  synth->add_option("--dim", dim, "feature dimension")->check(CLI::PositiveNumber);
  synth->add_option("--sep", sep, "class separation")->check(CLI::NonNegativeNumber);

  // fit
  FitFlags fit_flags;
  auto* fit = app.add_subcommand("fit", "fit a probabilistic classifier");
  add_common(fit, true);
  fit->add_option("--label-column", label_column, "label column name");
  fit->add_option("--model", fit_flags.model_type, "logistic|knn");
  fit->add_option("--epochs", fit_flags.train.epochs, "training epochs");
  fit->add_option("--learning-rate", fit_flags.train.learning_rate, "learning rate");
  fit->add_option("--l2", fit_flags.train.l2, "l2 penalty");
  fit->add_option("--batch-size", fit_flags.train.batch_size, "0 = full batch");
  fit->add_option("--knn-k", fit_flags.knn_k, "neighbors for knn");
  fit->add_option("--ensemble", fit_flags.ensemble,
                  "bootstrap-averaged members (logistic only; 1 = plain fit)");

  // predict
  std::string calibration, model_path;
  auto* predict = app.add_subcommand("predict", "conformal set predictions for a test CSV");
  add_common(predict, true);
  predict->add_option("--calibration", calibration, "calibration CSV path")->required();
  predict->add_option("--model", model_path, "model JSON path")->required();
  predict->add_option("--label-column", label_column, "label column name");
  predict->add_option("--alpha", alpha, "significance level");
  predict->add_flag("--smoothed", smoothed, "use (count+1)/(n+1) p-values");
  predict->add_option("--threads", threads, "batch prediction threads");

  // evaluate
  std::string ratios = "2:1:1", method = "mondrian", targets_csv;
  bool stratified = false;
  double raps_lambda = 0.01;
  std::size_t raps_kreg = 1;
  auto* evaluate = app.add_subcommand(
      "evaluate", "end-to-end pipeline: split, fit, calibrate, predict, report");
  add_common(evaluate, true);
  evaluate->add_option("--label-column", label_column, "label column name");
  evaluate->add_option("--ratios", ratios, "train:cal:test ratios");
  evaluate->add_flag("--stratified", stratified, "stratify the split by class");
  evaluate->add_option("--model", fit_flags.model_type, "logistic|knn");
  evaluate->add_option("--epochs", fit_flags.train.epochs, "training epochs");
  evaluate->add_option("--learning-rate", fit_flags.train.learning_rate, "learning rate");
  evaluate->add_option("--l2", fit_flags.train.l2, "l2 penalty");
  evaluate->add_option("--batch-size", fit_flags.train.batch_size, "0 = full batch");
  evaluate->add_option("--knn-k", fit_flags.knn_k, "neighbors for knn");
  evaluate->add_option("--ensemble", fit_flags.ensemble, "bootstrap-averaged members");
  evaluate->add_option("--method", method, "mondrian|naive|topk|raps");
  evaluate->add_option("--alpha", alpha, "significance level for records/confusion");
  evaluate->add_option("--alphas", alphas_csv, "comma list for the sweep table");
  evaluate->add_flag("--smoothed", smoothed, "use (count+1)/(n+1) p-values");
  evaluate->add_option("--raps-lambda", raps_lambda, "raps regularizer weight");
  evaluate->add_option("--raps-kreg", raps_kreg, "raps rank threshold");
  evaluate->add_option("--targets", targets_csv,
                       "comma list of labels counted as detections (default: all but first)");
  evaluate->add_option("--threads", threads, "batch prediction threads");

  // rank
  auto* rank = app.add_subcommand("rank", "rank a prediction records CSV by confidence");
  add_common(rank, true);
  rank->add_option("--targets", targets_csv, "labels eligible for ranking");

  // explain
  std::string instance_id;
  rcp::PerturbConfig pcfg;
  auto* explain = app.add_subcommand("explain", "calibrated explanation for a rejected id");
  add_common(explain, true);
  explain->add_option("--calibration", calibration, "calibration CSV path")->required();
  explain->add_option("--model", model_path, "model JSON path")->required();
  explain->add_option("--label-column", label_column, "label column name");
  explain->add_option("--id", instance_id, "instance id to explain")->required();
  explain->add_option("--alpha", alpha, "significance level");
  explain->add_flag("--smoothed", smoothed, "use (count+1)/(n+1) p-values");
  explain->add_option("--perturbations", pcfg.perturbations, "number of perturbations");
  explain->add_option("--sigma-scale", pcfg.sigma_scale, "noise scale vs feature stddev");
  explain->add_option("--kernel-width", pcfg.kernel_width, "0 = 0.75*sqrt(d)");
  explain->add_option("--top-j", pcfg.top_j, "attributions kept per class");

  // gan-train
  rcp::GanTrainConfig gcfg;
  std::string class_name = "TI";
  auto* gan_train = app.add_subcommand("gan-train", "train the conformalized GAN ensemble");
  add_common(gan_train, true);
  gan_train->add_option("--label-column", label_column, "label column name");
  gan_train->add_option("--class", class_name, "class to model");
  gan_train->add_option("--m", gcfg.members, "ensemble members");
  gan_train->add_option("--epochs", gcfg.epochs, "training epochs");
  gan_train->add_option("--noise-dim", gcfg.noise_dim, "generator noise dimension");
  gan_train->add_option("--hidden", gcfg.hidden, "hidden width");
  gan_train->add_option("--learning-rate", gcfg.learning_rate, "learning rate");
  gan_train->add_option("--batch-size", gcfg.batch_size, "batch size");
  gan_train->add_option("--gan-alpha", gcfg.alpha, "interval significance level");

  // gan-sample
  std::string ensemble_path, sample_label = "TI";
  std::size_t sample_n = 1000;
  double keep = 1.0;
  auto* gan_sample = app.add_subcommand("gan-sample", "sample from a trained ensemble");
  add_common(gan_sample, false);
  gan_sample->add_option("--ensemble", ensemble_path, "ensemble JSON path")->required();
  gan_sample->add_option("--n", sample_n, "samples to draw")->check(CLI::PositiveNumber);
  gan_sample->add_option("--keep", keep, "random fraction of samples to keep");
  gan_sample->add_option("--label", sample_label, "label written to the samples CSV");

  // evolve
  std::string generated_infected, generated_free, evolved_label = "T-EV";
  auto* evolve = app.add_subcommand("evolve", "assemble the evolved three-class dataset");
  add_common(evolve, true);
  evolve->add_option("--label-column", label_column, "label column name");
  evolve->add_option("--generated-infected", generated_infected,
                     "CSV of generated infected-class rows");
  evolve->add_option("--generated-free", generated_free, "CSV of generated free-class rows");
  evolve->add_option("--evolved-label", evolved_label, "name of the evolved class");

  // coverage-check
  std::size_t trials = 30, n_cal = 500, n_test = 1000;
  std::string weights_csv = "1,1,1";
  auto* coverage = app.add_subcommand("coverage-check", "empirical coverage-guarantee harness");
  add_common(coverage, false);
  coverage->add_option("--trials", trials, "number of trials")->check(CLI::PositiveNumber);
  coverage->add_option("--n-cal", n_cal, "calibration size")->check(CLI::PositiveNumber);
  coverage->add_option("--n-test", n_test, "test size")->check(CLI::PositiveNumber);
  coverage->add_option("--alpha", alpha, "significance level");
  coverage->add_option("--weights", weights_csv, "per-class frequency weights");

  // Let app-level flags like --config appear after the subcommand name.
  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(per_class, dim, sep, seed, output_dir);
    if (fit->parsed()) {
      fit_flags.train.seed = seed;
      return cmd_fit(input, label_column, fit_flags, output_dir);
    }
    if (predict->parsed()) {
      return cmd_predict(input, calibration, model_path, label_column, alpha, smoothed,
                         threads, output_dir);
    }
    if (evaluate->parsed()) {
      fit_flags.train.seed = seed;
      return cmd_evaluate(input, label_column, ratios, stratified, fit_flags, method, alpha,
                          alphas_csv, smoothed, raps_lambda, raps_kreg, targets_csv, seed,
                          threads, output_dir);
    }
    if (rank->parsed()) return cmd_rank(input, targets_csv, output_dir);
    if (explain->parsed()) {
      pcfg.seed = seed;
      return cmd_explain(input, calibration, model_path, label_column, instance_id, alpha,
                         smoothed, pcfg, output_dir);
    }
    if (gan_train->parsed()) {
      gcfg.seed = seed;
      return cmd_gan_train(input, label_column, class_name, gcfg, output_dir);
    }
    if (gan_sample->parsed()) {
      return cmd_gan_sample(ensemble_path, sample_n, keep, sample_label, seed, output_dir);
    }
    if (evolve->parsed()) {
      return cmd_evolve(input, label_column, generated_infected, generated_free, evolved_label,
                        output_dir);
    }
    if (coverage->parsed()) {
      return cmd_coverage_check(trials, n_cal, n_test, alpha, weights_csv, seed, output_dir);
    }
  } catch (const rcp::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
