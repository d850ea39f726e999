#include "peacelens/eval/report.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <set>
#include <sstream>

#include "peacelens/nn/network.hpp"

namespace peacelens::eval {

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string fixed(const std::optional<double>& v, int digits) {
  return v ? fixed(*v, digits) : "n/a";
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

bool numeric_cell(const std::string& c) {
  if (c == "n/a" || c == "-" || c == "undefined") return true;
  std::size_t i = 0;
  if (i < c.size() && c[i] == '-') ++i;
  if (i == c.size() || !std::isdigit(static_cast<unsigned char>(c[i]))) return false;
  return c.find_first_not_of("0123456789.-% !", i) == std::string::npos;
}

// Numeric columns are right-aligned, text columns left-aligned.
std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  std::vector<bool> right;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    width.resize(std::max(width.size(), row.size()), 0);
    right.resize(width.size(), true);
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
      if (r > 0 && !numeric_cell(row[c])) right[c] = false;
    }
  }
  if (rows.size() < 2) std::fill(right.begin(), right.end(), false);
  std::ostringstream os;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::ostringstream cell;
      if (right[c]) cell << std::right;
      else cell << std::left;
      cell << std::setw(static_cast<int>(width[c])) << row[c];
      line += (c ? "  " : "") + cell.str();
    }
    line.erase(line.find_last_not_of(' ') + 1);
    os << line << "\n";
  }
  return os.str();
}

}  // namespace

EvalReport build_eval_report(std::string dataset_id, std::string model_id,
                             std::span<const std::string> countries,
                             std::span<const double> probabilities, std::span<const int> truths) {
  if (countries.size() != probabilities.size() || probabilities.size() != truths.size())
    throw std::invalid_argument("countries, probabilities and truths differ in length");
  EvalReport rep;
  rep.dataset_id = std::move(dataset_id);
  rep.model_id = std::move(model_id);
  rep.n = probabilities.size();

  std::vector<int> predicted(rep.n);
  std::map<std::string, int> country_truth;
  for (std::size_t i = 0; i < rep.n; ++i) {
    predicted[i] = nn::decide(probabilities[i]);
    const int t = truths[i];
    if (t != 0 && t != 1) throw std::invalid_argument("truth labels must be 0 or 1");
    auto [it, fresh] = country_truth.emplace(countries[i], t);
    if (!fresh && it->second != t)
      throw std::invalid_argument("country " + countries[i] + " carries both labels");
    if (predicted[i] == 1) (t == 1 ? rep.confusion.tp : rep.confusion.fp)++;
    else (t == 0 ? rep.confusion.tn : rep.confusion.fn)++;
  }
  rep.accuracy = rep.n ? accuracy(predicted, truths) : 0.0;
  rep.countries = country_level_classify(group_by_country(countries, probabilities));
  for (const auto& v : rep.countries) rep.countries_correct += v.label == country_truth[v.country];
  rep.diagnostic = transfer_diagnostic(predicted);
  return rep;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["dataset_id"] = dataset_id;
  j["model_id"] = model_id;
  j["n"] = n;
  j["accuracy"] = accuracy;
  j["confusion"] = {{"tp", confusion.tp}, {"fp", confusion.fp}, {"tn", confusion.tn},
                    {"fn", confusion.fn}};
  auto& cs = j["countries"] = nlohmann::json::array();
  for (const auto& c : countries)
    cs.push_back({{"country", c.country},
                  {"mean_probability", c.mean_probability},
                  {"label", c.label == 1 ? "high" : "low"},
                  {"articles", c.articles}});
  j["countries_correct"] = countries_correct;
  j["transfer_diagnostic"] = {{"n", diagnostic.n},
                              {"high", diagnostic.high},
                              {"high_fraction", diagnostic.high_fraction},
                              {"alarm", diagnostic.alarm}};
  return j;
}

std::string render_accuracy_table(const std::vector<EvalReport>& reports) {
  std::vector<std::string> models, datasets;
  std::map<std::pair<std::string, std::string>, const EvalReport*> cell;
  for (const auto& r : reports) {
    if (std::find(models.begin(), models.end(), r.model_id) == models.end())
      models.push_back(r.model_id);
    if (std::find(datasets.begin(), datasets.end(), r.dataset_id) == datasets.end())
      datasets.push_back(r.dataset_id);
    cell[{r.model_id, r.dataset_id}] = &r;
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"Model"};
  head.insert(head.end(), datasets.begin(), datasets.end());
  rows.push_back(head);
  for (const auto& m : models) {
    std::vector<std::string> row{m};
    for (const auto& d : datasets) {
      auto it = cell.find({m, d});
      std::string text = it == cell.end() ? "-" : fixed(it->second->accuracy * 100.0, 2) + "%";
      if (it != cell.end() && it->second->diagnostic.alarm) text += " !";
      row.push_back(text);
    }
    rows.push_back(row);
  }
  std::string out = render(rows);
  for (const auto& r : reports)
    if (r.diagnostic.alarm)
      out += "! " + r.model_id + " on " + r.dataset_id + ": " +
             fixed(r.diagnostic.high_fraction * 100.0, 1) +
             "% of predictions are high-peace; accuracy may reflect class balance\n";
  return out;
}

std::string render_country_table(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows{{"Country", "Articles", "Mean p", "Label"}};
  for (const auto& c : report.countries)
    rows.push_back({c.country, std::to_string(c.articles), fixed(c.mean_probability, 4),
                    c.label == 1 ? "high" : "low"});
  return render(rows) + std::to_string(report.countries_correct) + "/" +
         std::to_string(report.countries.size()) + " countries correct\n";
}

std::string render_gold_table(const std::vector<DimensionStats>& stats) {
  std::vector<std::vector<std::string>> rows{{"Dimension", "N", "Mean", "SD", "Min", "Max", "Median"}};
  for (const auto& s : stats)
    rows.push_back({std::string(label(s.dimension)), std::to_string(s.n), fixed(s.mean, 2),
                    fixed(s.sd, 2), fixed(s.min, 2), fixed(s.max, 2), fixed(s.median, 2)});
  return render(rows);
}

nlohmann::json to_json(const std::vector<DimensionStats>& stats) {
  auto arr = nlohmann::json::array();
  for (const auto& s : stats)
    arr.push_back({{"dimension", key(s.dimension)},
                   {"n", s.n},
                   {"mean", opt(s.mean)},
                   {"sd", opt(s.sd)},
                   {"min", opt(s.min)},
                   {"max", opt(s.max)},
                   {"median", opt(s.median)}});
  return arr;
}

nlohmann::json to_json(const ReliabilityReport& report) {
  nlohmann::json j;
  j["dimension"] = key(report.dimension);
  j["raters"] = report.raters;
  auto& pairs = j["pairs"] = nlohmann::json::array();
  for (const auto& p : report.pairs)
    pairs.push_back({{"rater_a", p.rater_a},
                     {"rater_b", p.rater_b},
                     {"overlap", p.overlap},
                     {"r", opt(p.r.r)},
                     {"agreement_within_one", opt(p.agreement)},
                     {"insufficient_overlap", p.insufficient}});
  j["pooled_agreement_within_one"] = opt(report.pooled_agreement);
  j["pooled_observations"] = report.pooled_observations;
  return j;
}

nlohmann::json CorrelationReport::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& e : entries)
    arr.push_back({{"model_id", e.model_id},
                   {"mode", e.mode},
                   {"dimension", key(e.dimension)},
                   {"r", e.r.r ? nlohmann::json(*e.r.r) : nlohmann::json("undefined")},
                   {"n", e.r.n}});
  return arr;
}

std::string CorrelationReport::to_csv() const {
  std::ostringstream os;
  os << "model_id,mode,dimension,r,n\n";
  for (const auto& e : entries) {
    os << e.model_id << "," << e.mode << "," << key(e.dimension) << ",";
    if (e.r.r) os << std::setprecision(17) << *e.r.r;
    os << "," << e.r.n << "\n";
  }
  return os.str();
}

std::string CorrelationReport::to_text() const {
  std::vector<std::vector<std::string>> rows{{"Model", "Mode", "Dimension", "r", "n"}};
  for (const auto& e : entries)
    rows.push_back({e.model_id, e.mode, std::string(label(e.dimension)),
                    e.r.r ? fixed(*e.r.r, 3) : "undefined", std::to_string(e.r.n)});
  return render(rows);
}

}  // namespace peacelens::eval
