#include "riskcp/score_model.hpp"

#include <cmath>
#include <fstream>

#include "riskcp/error.hpp"
#include "riskcp/knn.hpp"
#include "riskcp/logistic.hpp"

namespace rcp {

std::uint64_t model_fingerprint(const ScoreModel& model) {
  const std::string payload = model.to_json().dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Standardizer Standardizer::fit(const Dataset& ds) {
  const std::size_t d = ds.dim();
  const std::size_t n = ds.size();
  Standardizer s;
  s.means.assign(d, 0.0);
  s.stds.assign(d, 1.0);
  if (n == 0) return s;
  for (const auto& inst : ds.instances) {
    for (std::size_t j = 0; j < d; ++j) s.means[j] += inst.features[j];
  }
  for (std::size_t j = 0; j < d; ++j) s.means[j] /= static_cast<double>(n);
  Vec var(d, 0.0);
  for (const auto& inst : ds.instances) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = inst.features[j] - s.means[j];
      var[j] += dev * dev;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    s.stds[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Vec Standardizer::apply(const Vec& x) const {
  Vec z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - means[j]) / stds[j];
  return z;
}

Vec Standardizer::invert(const Vec& z) const {
  Vec x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * stds[j] + means[j];
  return x;
}

namespace {

// Averages member probabilities; used for the bagged ensemble variant.
class EnsembleModel : public ScoreModel {
 public:
  EnsembleModel(std::vector<std::unique_ptr<ScoreModel>> members)
      : members_(std::move(members)) {
    if (members_.empty()) throw ValidationError("ensemble needs at least one member");
  }

  std::size_t num_classes() const override { return members_.front()->num_classes(); }

  std::vector<double> predict_proba(const Instance& x) const override {
    std::vector<double> acc(num_classes(), 0.0);
    for (const auto& m : members_) {
      const auto p = m->predict_proba(x);
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += p[k];
    }
    for (double& v : acc) v /= static_cast<double>(members_.size());
    return acc;
  }

  nlohmann::json to_json() const override {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : members_) members.push_back(m->to_json());
    return nlohmann::json{{"metadata", {{"type", "ensemble"}}}, {"members", members}};
  }

  const LabelSet& label_set() const override { return members_.front()->label_set(); }

 private:
  std::vector<std::unique_ptr<ScoreModel>> members_;
};

}  // namespace

std::unique_ptr<ScoreModel> make_ensemble(std::vector<std::unique_ptr<ScoreModel>> members) {
  return std::make_unique<EnsembleModel>(std::move(members));
}

std::unique_ptr<ScoreModel> model_from_json(const nlohmann::json& doc) {
  const std::string type = doc.at("metadata").at("type").get<std::string>();
  if (type == "logistic") return LogisticModel::from_json(doc);
  if (type == "knn") return KnnModel::from_json(doc);
  if (type == "ensemble") {
    std::vector<std::unique_ptr<ScoreModel>> members;
    for (const auto& m : doc.at("members")) members.push_back(model_from_json(m));
    return std::make_unique<EnsembleModel>(std::move(members));
  }
  throw ValidationError("unknown model type '" + type + "'");
}

std::unique_ptr<ScoreModel> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model file " + path + " is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

void save_model(const ScoreModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write model file: " + path);
  out << model.to_json().dump(2) << '\n';
}

}  // namespace rcp
