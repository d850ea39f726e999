#include "peacelens/eval/stats.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "peacelens/nn/network.hpp"

namespace peacelens::eval {

double accuracy(std::span<const int> predictions, std::span<const int> truths) {
  if (predictions.size() != truths.size())
    throw std::invalid_argument("prediction and truth lengths differ");
  if (predictions.empty()) throw std::invalid_argument("accuracy of an empty set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hit += predictions[i] == truths[i];
  return static_cast<double>(hit) / static_cast<double>(predictions.size());
}

std::vector<CountryVerdict> country_level_classify(
    const std::map<std::string, std::vector<double>>& probabilities_by_country) {
  std::vector<CountryVerdict> out;
  for (const auto& [country, probs] : probabilities_by_country) {
    if (probs.empty()) throw std::invalid_argument("country " + country + " has no articles");
    // Sort first so the mean does not depend on article order.
    std::vector<double> sorted = probs;
    std::sort(sorted.begin(), sorted.end());
    long double sum = 0.0L;
    for (double p : sorted) sum += p;
    const double mean = static_cast<double>(sum / static_cast<long double>(sorted.size()));
    out.push_back({country, mean, nn::decide(mean), probs.size()});
  }
  return out;
}

std::map<std::string, std::vector<double>> group_by_country(std::span<const std::string> countries,
                                                            std::span<const double> probabilities) {
  if (countries.size() != probabilities.size())
    throw std::invalid_argument("country and probability lengths differ");
  std::map<std::string, std::vector<double>> out;
  for (std::size_t i = 0; i < countries.size(); ++i) out[countries[i]].push_back(probabilities[i]);
  return out;
}

Correlation pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson_r: lengths differ");
  if (x.size() < 2) throw std::invalid_argument("pearson_r needs at least two points");
  Correlation c;
  c.n = x.size();
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
  };
  if (constant(x) || constant(y)) return c;
  const Eigen::Map<const Eigen::ArrayXd> xa(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::ArrayXd> ya(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::ArrayXd dx = xa - xa.mean();
  const Eigen::ArrayXd dy = ya - ya.mean();
  const double r = (dx * dy).sum() / std::sqrt(dx.square().sum() * dy.square().sum());
  c.r = std::clamp(r, -1.0, 1.0);
  return c;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("sample SD needs at least two values");
  const Eigen::Map<const Eigen::ArrayXd> a(values.data(), static_cast<Eigen::Index>(values.size()));
  return std::sqrt((a - a.mean()).square().sum() / static_cast<double>(values.size() - 1));
}

TransferDiagnostic transfer_diagnostic(std::span<const int> predicted_labels) {
  if (predicted_labels.empty()) throw std::invalid_argument("transfer diagnostic needs predictions");
  TransferDiagnostic d;
  d.n = predicted_labels.size();
  for (int l : predicted_labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
    d.high += static_cast<std::size_t>(l);
  }
  d.high_fraction = static_cast<double>(d.high) / static_cast<double>(d.n);
  // Integer comparisons keep the 95% / 5% cut-offs exact.
  d.alarm = d.high * 100 >= d.n * 95 || d.high * 100 <= d.n * 5;
  return d;
}

}  // namespace peacelens::eval
