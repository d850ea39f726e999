#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace peacelens::eval {

/// Fraction of positions where the labels agree.
double accuracy(std::span<const int> predictions, std::span<const int> truths);

struct CountryVerdict {
  std::string country;
  double mean_probability = 0.0;
  int label = 0;  // 1 = high-peace, decided with the same >= 0.5 rule as the network
  std::size_t articles = 0;
};

/// Mean probability per country, sorted by country code.
std::vector<CountryVerdict> country_level_classify(
    const std::map<std::string, std::vector<double>>& probabilities_by_country);

std::map<std::string, std::vector<double>> group_by_country(std::span<const std::string> countries,
                                                            std::span<const double> probabilities);

/// Pearson r, or no value when either side is constant.
struct Correlation {
  std::optional<double> r;
  std::size_t n = 0;
  bool defined() const { return r.has_value(); }
};

Correlation pearson_r(std::span<const double> x, std::span<const double> y);

/// Mean of the two central values on even counts.
double median(std::vector<double> values);

/// Sample (n - 1) standard deviation; needs n >= 2.
double sample_sd(std::span<const double> values);

struct TransferDiagnostic {
  std::size_t n = 0;
  std::size_t high = 0;
  double high_fraction = 0.0;
  bool alarm = false;
};

/// Alarm when at least 95% or at most 5% of the predictions are high-peace.
TransferDiagnostic transfer_diagnostic(std::span<const int> predicted_labels);

}  // namespace peacelens::eval
