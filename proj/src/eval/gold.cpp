#include "peacelens/eval/gold.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace peacelens::eval {

void GoldStandard::add(std::string video_id, std::string rater_id, PeaceDimension dimension,
                       double score) {
  if (!(score >= kMinScore && score <= kMaxScore))
    throw GoldFormatError("score " + std::to_string(score) + " for video " + video_id +
                          " is outside [1, 5]");
  if (video_id.empty() || rater_id.empty()) throw GoldFormatError("empty video or rater id");
  auto cell = std::make_tuple(video_id, rater_id, dimension);
  if (cells_.count(cell))
    throw GoldFormatError("duplicate rating for video " + video_id + ", rater " + rater_id +
                          ", " + std::string(key(dimension)));
  cells_.emplace(std::move(cell), ratings_.size());
  ratings_.push_back({std::move(video_id), std::move(rater_id), dimension, score});
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw GoldFormatError("unterminated quote on line " + std::to_string(line_no));
  fields.push_back(std::move(cur));
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

void parse_directive(GoldStandard& g, const std::string& line) {
  std::istringstream in(line.substr(1));
  std::string word;
  in >> word;
  if (word != "orientation" && word != "codebook") return;
  std::string rest;
  std::getline(in, rest);
  const auto colon = rest.find(':');
  if (colon == std::string::npos) return;
  std::string dim_text = rest.substr(0, colon);
  dim_text.erase(std::remove_if(dim_text.begin(), dim_text.end(), ::isspace), dim_text.end());
  const auto dim = parse_dimension(dim_text);
  if (!dim) throw GoldFormatError("unknown dimension in directive: " + line);
  std::string value = rest.substr(colon + 1);
  value.erase(0, value.find_first_not_of(" \t"));
  if (word == "codebook") {
    g.codebook[index(*dim)] = value;
    return;
  }
  if (value.rfind("5=", 0) != 0) throw GoldFormatError("orientation must read '5=<pole>': " + line);
  std::string pole = value.substr(2);
  pole.erase(pole.find_last_not_of(" \t") + 1);
  std::transform(pole.begin(), pole.end(), pole.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto p = poles(*dim);
  if (pole == p.first) g.orientation[index(*dim)] = Orientation::FirstPoleHigh;
  else if (pole == p.second) g.orientation[index(*dim)] = Orientation::SecondPoleHigh;
  else throw GoldFormatError("unknown pole '" + pole + "' for " + std::string(key(*dim)));
}

}  // namespace

GoldStandard GoldStandard::from_csv_text(std::string_view text) {
  GoldStandard g;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> col;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      parse_directive(g, line);
      continue;
    }
    auto fields = split_csv_line(line, line_no);
    if (col.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) col[fields[i]] = i;
      for (auto name : {"video_id", "rater_id", "dimension", "score"})
        if (!col.count(name)) throw GoldFormatError(std::string("gold CSV header lacks ") + name);
      continue;
    }
    auto field = [&](const char* name) -> const std::string& {
      const auto i = col.at(name);
      if (i >= fields.size())
        throw GoldFormatError("line " + std::to_string(line_no) + " has too few columns");
      return fields[i];
    };
    const std::string& score_text = field("score");
    if (score_text.empty() || score_text == "NA" || score_text == "na") continue;
    double score = 0.0;
    auto [p, ec] = std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
    if (ec != std::errc{} || p != score_text.data() + score_text.size())
      throw GoldFormatError("line " + std::to_string(line_no) + ": bad score '" + score_text + "'");
    const auto dim = parse_dimension(field("dimension"));
    if (!dim)
      throw GoldFormatError("line " + std::to_string(line_no) + ": unknown dimension '" +
                            field("dimension") + "'");
    try {
      g.add(field("video_id"), field("rater_id"), *dim, score);
    } catch (const GoldFormatError& e) {
      throw GoldFormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return g;
}

GoldStandard GoldStandard::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GoldFormatError("cannot read gold standard " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_csv_text(ss.str());
}

std::map<std::string, double> GoldStandard::video_means(PeaceDimension d) const {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : ratings_) {
    if (r.dimension != d) continue;
    acc[r.video_id].first += r.score;
    acc[r.video_id].second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [v, s] : acc) out[v] = s.first / s.second;
  return out;
}

std::map<std::string, std::map<std::string, double>> GoldStandard::by_rater(PeaceDimension d) const {
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& r : ratings_)
    if (r.dimension == d) out[r.rater_id][r.video_id] = r.score;
  return out;
}

std::vector<DimensionStats> aggregate_gold(const GoldStandard& gold) {
  std::vector<DimensionStats> out;
  for (auto d : kDimensions) {
    DimensionStats s;
    s.dimension = d;
    std::vector<double> means;
    for (const auto& [v, m] : gold.video_means(d)) means.push_back(m);
    s.n = means.size();
    if (!means.empty()) {
      const Eigen::Map<const Eigen::ArrayXd> a(means.data(), static_cast<Eigen::Index>(means.size()));
      s.mean = a.mean();
      s.min = a.minCoeff();
      s.max = a.maxCoeff();
      s.median = median(means);
      if (means.size() >= 2) s.sd = sample_sd(means);
    }
    out.push_back(s);
  }
  return out;
}

std::optional<double> ReliabilityReport::r(std::size_t i, std::size_t j) const {
  if (i >= raters.size() || j >= raters.size()) throw std::out_of_range("rater index");
  if (i == j) return 1.0;
  for (const auto& p : pairs)
    if ((p.rater_a == raters[i] && p.rater_b == raters[j]) ||
        (p.rater_a == raters[j] && p.rater_b == raters[i]))
      return p.r.r;
  return std::nullopt;
}

ReliabilityReport inter_rater_reliability(const GoldStandard& gold, PeaceDimension dimension) {
  ReliabilityReport rep;
  rep.dimension = dimension;
  const auto table = gold.by_rater(dimension);
  for (const auto& [rater, _] : table) rep.raters.push_back(rater);
  std::size_t within = 0;
  for (auto a = table.begin(); a != table.end(); ++a) {
    for (auto b = std::next(a); b != table.end(); ++b) {
      PairReliability p;
      p.rater_a = a->first;
      p.rater_b = b->first;
      std::vector<double> xa, xb;
      std::size_t pair_within = 0;
      for (const auto& [video, score] : a->second) {
        auto it = b->second.find(video);
        if (it == b->second.end()) continue;
        xa.push_back(score);
        xb.push_back(it->second);
        pair_within += std::abs(score - it->second) <= 1.0;
      }
      p.overlap = xa.size();
      if (p.overlap >= 1)
        p.agreement = static_cast<double>(pair_within) / static_cast<double>(p.overlap);
      if (p.overlap >= 2) p.r = pearson_r(xa, xb);
      else p.insufficient = true;
      p.r.n = p.overlap;
      within += pair_within;
      rep.pooled_observations += p.overlap;
      rep.pairs.push_back(std::move(p));
    }
  }
  if (rep.pooled_observations > 0)
    rep.pooled_agreement =
        static_cast<double>(within) / static_cast<double>(rep.pooled_observations);
  return rep;
}

CorrelationEntry model_vs_human(const std::map<std::string, double>& model_scores,
                                const GoldStandard& gold, PeaceDimension dimension,
                                std::string model_id, std::string mode,
                                Orientation model_orientation) {
  if (gold.orientation[index(dimension)] != model_orientation)
    throw OrientationMismatch("model and gold standard use opposite poles for " +
                              std::string(key(dimension)));
  const auto human = gold.video_means(dimension);
  std::vector<double> xm, xh;
  for (const auto& [video, s] : model_scores) {
    auto it = human.find(video);
    if (it == human.end()) continue;
    xm.push_back(s);
    xh.push_back(it->second);
  }
  if (xm.size() < 2)
    throw InsufficientOverlap("only " + std::to_string(xm.size()) +
                              " videos have both model and human scores for " +
                              std::string(key(dimension)));
  return {dimension, std::move(model_id), std::move(mode), pearson_r(xm, xh)};
}

}  // namespace peacelens::eval
