#include "peacelens/emotion/emotion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "peacelens/util/http.hpp"

namespace peacelens::emotion {

using nlohmann::json;

std::optional<std::size_t> category_index(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryCount; ++i)
    if (kCategories[i] == name) return i;
  return std::nullopt;
}

EmotionProfile EmotionProfile::from_map(const std::map<std::string, double>& scores,
                                        std::string chunk_id) {
  EmotionProfile p;
  p.chunk_id = std::move(chunk_id);
  std::array<bool, kCategoryCount> seen{};
  for (const auto& [name, value] : scores) {
    const auto idx = category_index(name);
    if (!idx) throw SchemaError("unknown emotion category '" + name + "'");
    p.scores[*idx] = value;
    seen[*idx] = true;
  }
  for (std::size_t i = 0; i < kCategoryCount; ++i)
    if (!seen[i])
      throw SchemaError("emotion profile is missing category '" + std::string(kCategories[i]) +
                        "'");
  p.validate();
  return p;
}

EmotionProfile EmotionProfile::from_json_text(std::string_view text, std::string chunk_id) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("emotion profile is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("emotion profile must be a JSON object");
  std::map<std::string, double> m;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw SchemaError("score for '" + k + "' is not a number");
    m[k] = v.get<double>();
  }
  return from_map(m, std::move(chunk_id));
}

void EmotionProfile::validate() const {
  for (std::size_t i = 0; i < kCategoryCount; ++i)
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0))
      throw SchemaError("score for '" + std::string(kCategories[i]) + "' outside [0, 1]");
}

double EmotionProfile::score(std::string_view category) const {
  const auto idx = category_index(category);
  if (!idx) throw SchemaError("unknown emotion category '" + std::string(category) + "'");
  return scores[*idx];
}

std::size_t EmotionProfile::dominant() const {
  std::size_t best = kNeutral;
  for (std::size_t i = 0; i < kCategoryCount; ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

ValenceWeights ValenceWeights::defaults() {
  ValenceWeights w;
  for (auto name : {"joy", "admiration", "amusement", "approval", "caring", "gratitude", "love",
                    "optimism", "pride", "relief", "excitement", "desire"})
    w.weights[*category_index(name)] = 1.0;
  for (auto name : {"anger", "disgust", "annoyance", "disapproval", "disappointment",
                    "embarrassment", "fear", "grief", "remorse", "sadness"})
    w.weights[*category_index(name)] = -1.0;
  return w;
}

void ValenceWeights::validate() const {
  for (std::size_t i = 0; i < kCategoryCount; ++i)
    if (!(weights[i] >= -1.0 && weights[i] <= 1.0))
      throw SchemaError("weight for '" + std::string(kCategories[i]) + "' outside [-1, 1]");
  if (weights[kNeutral] != 0.0) throw SchemaError("neutral weight must be 0");
}

ValenceWeights ValenceWeights::from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("weight table is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("weight table must be a JSON object");
  ValenceWeights w;
  std::array<bool, kCategoryCount> seen{};
  for (const auto& [k, v] : j.items()) {
    if (!k.empty() && k[0] == '_') continue;  // comments
    const auto idx = category_index(k);
    if (!idx) throw SchemaError("unknown emotion category '" + k + "' in weight table");
    if (!v.is_number()) throw SchemaError("weight for '" + k + "' is not a number");
    w.weights[*idx] = v.get<double>();
    seen[*idx] = true;
  }
  for (std::size_t i = 0; i < kCategoryCount; ++i)
    if (!seen[i])
      throw SchemaError("weight table is missing category '" + std::string(kCategories[i]) + "'");
  w.validate();
  return w;
}

ValenceWeights ValenceWeights::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read weight table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string ValenceWeights::to_json_text() const {
  json j = json::object();
  for (std::size_t i = 0; i < kCategoryCount; ++i) j[std::string(kCategories[i])] = weights[i];
  return j.dump(2);
}

double map_valence(const EmotionProfile& profile, const ValenceWeights& weights) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    num += weights.weights[i] * profile.scores[i];
    den += profile.scores[i];
  }
  return std::clamp(num / std::max(den, kValenceEpsilon), -1.0, 1.0);
}

TranscriptEmotionSummary summarize(std::span<const double> valences,
                                   std::span<const EmotionProfile> profiles) {
  if (valences.empty()) throw std::invalid_argument("summary needs at least one chunk");
  if (profiles.size() != valences.size())
    throw std::invalid_argument("valence and profile counts differ");
  TranscriptEmotionSummary s;
  s.chunk_valences.assign(valences.begin(), valences.end());
  const double n = static_cast<double>(valences.size());
  double sum = 0.0;
  for (double v : valences) sum += v;
  s.mean_valence = sum / n;
  double ss = 0.0;
  for (double v : valences) ss += (v - s.mean_valence) * (v - s.mean_valence);
  s.volatility = std::sqrt(ss / n);
  // Equal values can leave rounding residue in the mean; report exact zero.
  if (std::all_of(valences.begin(), valences.end(), [&](double v) { return v == valences[0]; })) {
    s.mean_valence = valences[0];
    s.volatility = 0.0;
  }
  std::size_t neutral = 0;
  for (const auto& p : profiles) {
    const auto d = p.dominant();
    neutral += d == kNeutral;
    s.dominant_categories.emplace_back(kCategories[d]);
  }
  s.neutrality_fraction = static_cast<double>(neutral) / n;
  return s;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_abbreviation(std::string_view word) {
  static constexpr std::string_view kAbbrev[] = {
      "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "inc", "ltd", "corp",
      "mt", "gen", "sen", "rep", "gov", "col", "lt", "sgt", "capt", "approx", "dept",
      "fig", "jan", "feb", "apr", "aug", "sept", "oct", "nov", "dec"};
  std::string lower;
  for (char c : word) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (auto a : kAbbrev)
    if (lower == a) return true;
  // Initialisms with inner dots: U.S, e.g, i.e, a.m
  if (lower.size() >= 3 && lower.find('.') != std::string::npos) {
    bool alternating = true;
    for (std::size_t i = 0; i < lower.size(); ++i)
      alternating &= (i % 2 == 0) ? std::isalpha(static_cast<unsigned char>(lower[i])) != 0
                                  : lower[i] == '.';
    if (alternating && lower.size() % 2 == 1) return true;
  }
  return false;
}

// Length of a closing quote or bracket at `pos`, or 0.
std::size_t closer_at(std::string_view t, std::size_t pos) {
  const char c = t[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  // ” ’ »
  if (t.substr(pos, 3) == "\xE2\x80\x9D" || t.substr(pos, 3) == "\xE2\x80\x99") return 3;
  if (t.substr(pos, 2) == "\xC2\xBB") return 2;
  return 0;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> chunk_transcript(std::string_view text) {
  if (trim(text).empty()) throw std::invalid_argument("cannot chunk empty text");
  std::vector<std::string> chunks;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c != '.' && c != '?' && c != '!') {
      ++i;
      continue;
    }
    const std::size_t run_begin = i;
    while (i < text.size() && (text[i] == '.' || text[i] == '?' || text[i] == '!')) ++i;
    const bool single_dot = i - run_begin == 1 && c == '.';
    while (i < text.size())
      if (auto n = closer_at(text, i)) i += n;
      else break;
    if (i < text.size() && !is_space(text[i])) continue;  // 3.5, e.g, URL
    if (single_dot) {
      std::size_t w = run_begin;
      while (w > start && !is_space(text[w - 1])) --w;
      std::string_view word = text.substr(w, run_begin - w);
      while (!word.empty() && (word.front() == '(' || word.front() == '"')) word.remove_prefix(1);
      if (is_abbreviation(word)) continue;
    }
    // A lowercase continuation ("Stop!" she said) keeps the sentence going.
    std::size_t k = i;
    while (k < text.size() && is_space(text[k])) ++k;
    if (k < text.size() && std::islower(static_cast<unsigned char>(text[k]))) continue;
    if (auto chunk = trim(text.substr(start, i - start)); !chunk.empty())
      chunks.emplace_back(chunk);
    start = i;
  }
  if (auto tail = trim(text.substr(start)); !tail.empty()) chunks.emplace_back(tail);
  return chunks;
}

HttpEmotionSource::HttpEmotionSource(HttpEmotionConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty())
    throw std::invalid_argument("emotion endpoint URL not configured (PEACE_EMOTION_ENDPOINT)");
  if (cfg_.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!cfg_.sleep) cfg_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::vector<EmotionProfile> HttpEmotionSource::fetch(const std::vector<std::string>& chunks) {
  std::vector<EmotionProfile> out;
  for (std::size_t b = 0; b < chunks.size(); b += cfg_.batch_size) {
    const std::size_t e = std::min(chunks.size(), b + cfg_.batch_size);
    const json body{{"texts", std::vector<std::string>(chunks.begin() + static_cast<std::ptrdiff_t>(b),
                                                      chunks.begin() + static_cast<std::ptrdiff_t>(e))}};
    auto delay = cfg_.initial_backoff;
    std::string last_error;
    util::HttpResult res;
    bool ok = false;
    for (int attempt = 1; attempt <= cfg_.max_attempts && !ok; ++attempt) {
      try {
        res = util::post_json(cfg_.endpoint, body.dump(), {}, cfg_.timeout);
        if (res.status == 200) {
          ok = true;
          break;
        }
        last_error = "HTTP " + std::to_string(res.status);
        if (!util::retryable_status(res.status)) break;
      } catch (const util::TransportError& err) {
        last_error = err.what();
      }
      if (attempt < cfg_.max_attempts) {
        cfg_.sleep(delay);
        delay *= 2;
      }
    }
    if (!ok) throw EmotionEndpointError("emotion endpoint failed: " + last_error);
    json j;
    try {
      j = json::parse(res.body);
    } catch (const json::parse_error& err) {
      throw SchemaError(std::string("emotion response is not JSON: ") + err.what());
    }
    if (!j.contains("profiles") || !j["profiles"].is_array())
      throw SchemaError("emotion response lacks a \"profiles\" array");
    if (j["profiles"].size() != e - b)
      throw SchemaError("emotion endpoint returned " + std::to_string(j["profiles"].size()) +
                        " profiles for " + std::to_string(e - b) + " texts");
    for (std::size_t k = 0; k < e - b; ++k)
      out.push_back(EmotionProfile::from_json_text(j["profiles"][k].dump(), std::to_string(b + k)));
  }
  return out;
}

std::vector<EmotionProfile> FileEmotionSource::fetch(const std::vector<std::string>& chunks) {
  std::ifstream in(path_);
  if (!in) throw SchemaError("cannot read profile file " + path_.string());
  std::map<std::size_t, EmotionProfile> by_index;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw SchemaError("profile file line " + std::to_string(line_no) + " is not JSON");
    }
    if (!j.contains("chunk_index") || !j["chunk_index"].is_number_unsigned() ||
        !j.contains("scores"))
      throw SchemaError("profile file line " + std::to_string(line_no) +
                        " needs chunk_index and scores");
    const auto idx = j["chunk_index"].get<std::size_t>();
    if (by_index.count(idx))
      throw SchemaError("duplicate chunk_index " + std::to_string(idx));
    by_index.emplace(idx, EmotionProfile::from_json_text(j["scores"].dump(), std::to_string(idx)));
  }
  if (by_index.size() != chunks.size())
    throw SchemaError("profile file has " + std::to_string(by_index.size()) + " profiles for " +
                      std::to_string(chunks.size()) + " chunks");
  std::vector<EmotionProfile> out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    auto it = by_index.find(i);
    if (it == by_index.end()) throw SchemaError("no profile for chunk_index " + std::to_string(i));
    out.push_back(it->second);
  }
  return out;
}

namespace {

struct Cue {
  std::string_view stem;
  std::string_view category;
};

// Stems match at the start of a lowercased word.
constexpr Cue kCues[] = {
    {"admir", "admiration"}, {"brilliant", "admiration"}, {"inspir", "admiration"},
    {"wonderful", "admiration"}, {"amazing", "admiration"}, {"respect", "admiration"},
    {"funny", "amusement"}, {"laugh", "amusement"}, {"hilarious", "amusement"},
    {"anger", "anger"}, {"angry", "anger"}, {"furious", "anger"}, {"rage", "anger"},
    {"hate", "anger"}, {"despise", "anger"}, {"annoy", "annoyance"}, {"irritat", "annoyance"},
    {"agree", "approval"}, {"support", "approval"}, {"good", "approval"},
    {"care", "caring"}, {"help", "caring"}, {"kind", "caring"},
    {"confus", "confusion"}, {"unclear", "confusion"}, {"curious", "curiosity"},
    {"wondering", "curiosity"}, {"want", "desire"}, {"wish", "desire"},
    {"disappoint", "disappointment"}, {"letdown", "disappointment"},
    {"disapprov", "disapproval"}, {"wrong", "disapproval"}, {"shame", "disapproval"},
    {"disgust", "disgust"}, {"vile", "disgust"}, {"contempt", "disgust"},
    {"pathetic", "disgust"}, {"scum", "disgust"}, {"embarrass", "embarrassment"},
    {"excit", "excitement"}, {"thrill", "excitement"}, {"afraid", "fear"}, {"fear", "fear"},
    {"scare", "fear"}, {"terrif", "fear"}, {"thank", "gratitude"}, {"grateful", "gratitude"},
    {"grief", "grief"}, {"mourn", "grief"}, {"joy", "joy"}, {"happy", "joy"},
    {"delight", "joy"}, {"love", "love"}, {"nervous", "nervousness"}, {"anxious", "nervousness"},
    {"hope", "optimism"}, {"optimis", "optimism"}, {"proud", "pride"}, {"pride", "pride"},
    {"realiz", "realization"}, {"relief", "relief"}, {"reliev", "relief"},
    {"sorry", "remorse"}, {"regret", "remorse"}, {"sad", "sadness"}, {"tragic", "sadness"},
    {"surpris", "surprise"}, {"shock", "surprise"}};

constexpr double kNeutralBaseline = 0.5;

}  // namespace

EmotionProfile LexiconEmotionSource::profile_for(std::string_view chunk) {
  std::array<double, kCategoryCount> mass{};
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    for (const auto& cue : kCues)
      if (word.compare(0, cue.stem.size(), cue.stem) == 0) mass[*category_index(cue.category)] += 1.0;
    word.clear();
  };
  for (char c : chunk) {
    if (std::isalpha(static_cast<unsigned char>(c))) word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    else flush();
  }
  flush();
  EmotionProfile p;
  double cue_total = 0.0;
  for (double m : mass) cue_total += m;
  for (std::size_t i = 0; i < kCategoryCount; ++i) p.scores[i] = mass[i] / (cue_total + 1.0);
  p.scores[kNeutral] = kNeutralBaseline / (cue_total + 1.0);
  return p;
}

std::vector<EmotionProfile> LexiconEmotionSource::fetch(const std::vector<std::string>& chunks) {
  std::vector<EmotionProfile> out;
  out.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    out.push_back(profile_for(chunks[i]));
    out.back().chunk_id = std::to_string(i);
  }
  return out;
}

std::vector<EmotionProfile> fetch_profiles(const std::vector<std::string>& chunks,
                                           EmotionSource& source) {
  auto profiles = source.fetch(chunks);
  if (profiles.size() != chunks.size())
    throw SchemaError("emotion source returned " + std::to_string(profiles.size()) +
                      " profiles for " + std::to_string(chunks.size()) + " chunks");
  for (auto& p : profiles) p.validate();
  return profiles;
}

TranscriptEmotionSummary analyze_transcript(std::string_view text, EmotionSource& source,
                                            const ValenceWeights& weights) {
  const auto chunks = chunk_transcript(text);
  const auto profiles = fetch_profiles(chunks, source);
  std::vector<double> valences;
  valences.reserve(profiles.size());
  for (const auto& p : profiles) valences.push_back(map_valence(p, weights));
  return summarize(valences, profiles);
}

}  // namespace peacelens::emotion
