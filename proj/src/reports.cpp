#include "riskcp/reports.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "riskcp/error.hpp"

namespace rcp {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_double(const std::string& s, const std::string& what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ValidationError("bad " + what + " value '" + s + "'");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  return out;
}

}  // namespace

void write_records_csv(const std::vector<PredictionRecord>& records, const LabelSet& labels,
                       const std::string& path) {
  auto out = open_out(path);
  out << "id";
  for (const auto& name : labels.names()) out << ",p_" << name;
  out << ",set,y_pred,confidence,credibility,rejected,alpha\n";
  for (const auto& r : records) {
    out << r.id;
    for (double p : r.p_values) out << ',' << format_number(p);
    out << ',';
    for (std::size_t i = 0; i < r.prediction_set.size(); ++i) {
      if (i) out << '|';
      out << labels.name(r.prediction_set[i]);
    }
    out << ',' << labels.name(r.point_prediction) << ',' << format_number(r.confidence) << ','
        << format_number(r.credibility) << ',' << (r.rejected ? "true" : "false") << ','
        << format_number(r.alpha) << '\n';
  }
}

RecordsFile read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open records file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty records file: " + path);
  const auto header = split_cells(line);
  if (header.size() < 8 || header[0] != "id") {
    throw ValidationError("not a prediction records file: " + path);
  }
  std::vector<std::string> label_names;
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].rfind("p_", 0) == 0) {
      label_names.push_back(header[j].substr(2));
    } else {
      break;
    }
  }
  if (label_names.size() < 2) throw ValidationError("records file lacks p_<label> columns");

  RecordsFile file;
  file.labels = LabelSet(label_names);
  const std::size_t k_classes = label_names.size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_cells(line);
    if (cells.size() != k_classes + 7) {
      throw ValidationError("malformed records row in " + path);
    }
    PredictionRecord r;
    r.id = cells[0];
    for (std::size_t k = 0; k < k_classes; ++k) {
      r.p_values.push_back(parse_double(cells[1 + k], "p-value"));
    }
    const std::string& set_cell = cells[1 + k_classes];
    if (!set_cell.empty()) {
      std::stringstream ss(set_cell);
      std::string tok;
      while (std::getline(ss, tok, '|')) {
        auto idx = file.labels.index_of(tok);
        if (!idx) throw ValidationError("unknown label '" + tok + "' in set column");
        r.prediction_set.push_back(*idx);
      }
    }
    auto point = file.labels.index_of(cells[2 + k_classes]);
    if (!point) throw ValidationError("unknown y_pred label in " + path);
    r.point_prediction = *point;
    r.confidence = parse_double(cells[3 + k_classes], "confidence");
    r.credibility = parse_double(cells[4 + k_classes], "credibility");
    r.rejected = cells[5 + k_classes] == "true";
    r.alpha = parse_double(cells[6 + k_classes], "alpha");
    file.records.push_back(std::move(r));
  }
  return file;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const LabelSet& labels,
                     const std::string& path) {
  auto out = open_out(path);
  out << "sig,mean_err,avg_c,n_correct";
  for (const auto& name : labels.names()) out << ",mean_err_" << name;
  for (const auto& name : labels.names()) out << ",avg_c_" << name;
  out << '\n';
  for (const auto& row : rows) {
    out << format_number(row.sig) << ',' << format_number(row.mean_err) << ','
        << format_number(row.avg_c) << ',' << row.n_correct;
    for (double v : row.per_class_err) out << ',' << format_number(v);
    for (double v : row.per_class_avg_size) out << ',' << format_number(v);
    out << '\n';
  }
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "alpha,mondrian,raps,naive,top_k\n";
  for (const auto& row : rows) {
    out << format_number(row.alpha) << ',' << row.mondrian << ',' << row.raps << ','
        << row.naive << ',' << row.top_k << '\n';
  }
}

void write_ranking_csv(const std::vector<RankedRecord>& rows, const LabelSet& labels,
                       const std::string& path) {
  auto out = open_out(path);
  out << "id,y_pred,confidence,credibility\n";
  for (const auto& row : rows) {
    out << row.id << ',' << labels.name(row.point_prediction) << ','
        << format_number(row.confidence) << ',' << format_number(row.credibility) << '\n';
  }
}

nlohmann::json confusion_to_json(const SetConfusion& c) {
  return nlohmann::json{{"correct_singleton", c.correct_singleton},
                        {"incorrect_singleton", c.incorrect_singleton},
                        {"inconclusive", c.inconclusive},
                        {"empty", c.empty},
                        {"total", c.total()}};
}

}  // namespace rcp
