#pragma once

#include "riskcp/metrics.hpp"

namespace rcp {

/// Prediction report CSV: id, p_<label>..., set (pipe-joined, empty for a
/// NULL set), y_pred, confidence, credibility, rejected, alpha.
void write_records_csv(const std::vector<PredictionRecord>& records, const LabelSet& labels,
                       const std::string& path);

/// Reads a prediction report back (used by the ranking subcommand).
struct RecordsFile {
  LabelSet labels;
  std::vector<PredictionRecord> records;
};
RecordsFile read_records_csv(const std::string& path);

/// Sweep CSV: sig, mean_err, avg_c, n_correct plus per-class err/size columns.
void write_sweep_csv(const std::vector<SweepRow>& rows, const LabelSet& labels,
                     const std::string& path);

/// Comparison CSV mirroring the predictor-comparison table:
/// alpha, mondrian, raps, naive, top_k (detection counts).
struct ComparisonRow {
  double alpha = 0.0;
  std::size_t mondrian = 0;
  std::size_t raps = 0;
  std::size_t naive = 0;
  std::size_t top_k = 0;
};
void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path);

void write_ranking_csv(const std::vector<RankedRecord>& rows, const LabelSet& labels,
                       const std::string& path);

nlohmann::json confusion_to_json(const SetConfusion& c);

/// Shortest exact decimal form of a double.
std::string format_number(double v);

}  // namespace rcp
