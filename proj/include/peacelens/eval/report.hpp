#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "peacelens/eval/gold.hpp"
#include "peacelens/eval/stats.hpp"

namespace peacelens::eval {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;  // positive = high-peace
};

struct EvalReport {
  std::string dataset_id;
  std::string model_id;
  std::size_t n = 0;
  double accuracy = 0.0;
  Confusion confusion;
  std::vector<CountryVerdict> countries;
  /// Countries whose aggregated label equals their true label.
  std::size_t countries_correct = 0;
  TransferDiagnostic diagnostic;

  nlohmann::json to_json() const;
};

/// Per-article labels come from the >= 0.5 rule. True country labels are
/// taken from the article truths (each country must be label-pure).
EvalReport build_eval_report(std::string dataset_id, std::string model_id,
                             std::span<const std::string> countries,
                             std::span<const double> probabilities, std::span<const int> truths);

/// Model rows, dataset columns, accuracy in percent with two decimals.
std::string render_accuracy_table(const std::vector<EvalReport>& reports);
std::string render_country_table(const EvalReport& report);

/// Columns Dimension, N, Mean, SD, Min, Max, Median.
std::string render_gold_table(const std::vector<DimensionStats>& stats);
nlohmann::json to_json(const std::vector<DimensionStats>& stats);
nlohmann::json to_json(const ReliabilityReport& report);

struct CorrelationReport {
  std::vector<CorrelationEntry> entries;

  nlohmann::json to_json() const;
  /// model_id,mode,dimension,r,n with an empty r when undefined.
  std::string to_csv() const;
  std::string to_text() const;
};

}  // namespace peacelens::eval
