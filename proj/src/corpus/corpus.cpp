#include "peacelens/corpus/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "peacelens/util/utf8.hpp"

namespace peacelens::corpus {

using nlohmann::json;

namespace {

bool iso_date_prefix(const std::string& s) {
  // YYYY-MM-DD, optionally followed by a time part.
  if (s.size() < 10) return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (s[i] < '0' || s[i] > '9') return false;
  if (s[4] != '-' || s[7] != '-') return false;
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31 && (s.size() == 10 || s[10] == 'T');
}

std::string normalize_country(const std::string& c) {
  if (c.size() != 2) return {};
  std::string out;
  for (char ch : c) {
    if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 32);
    if (ch < 'A' || ch > 'Z') return {};
    out.push_back(ch);
  }
  return out;
}

// Returns an empty reason on success.
std::string parse_article(const std::string& line, Article& a) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    return std::string("invalid JSON: ") + e.what();
  }
  if (!j.is_object()) return "line is not a JSON object";
  auto str_field = [&](const char* key, std::string& out) -> std::string {
    auto it = j.find(key);
    if (it == j.end()) return std::string("missing \"") + key + "\"";
    if (!it->is_string()) return std::string("\"") + key + "\" is not a string";
    out = it->get<std::string>();
    return {};
  };
  std::string country;
  for (auto [key, out] : {std::pair<const char*, std::string*>{"id", &a.id},
                          {"country", &country},
                          {"source", &a.source},
                          {"text", &a.text}})
    if (auto err = str_field(key, *out); !err.empty()) return err;
  if (a.id.empty()) return "empty \"id\"";
  if (a.text.empty()) return "empty \"text\"";
  a.country = normalize_country(country);
  if (a.country.empty()) return "\"country\" is not an ISO-3166 alpha-2 code: '" + country + "'";
  if (auto it = j.find("published_at"); it != j.end() && !it->is_null()) {
    if (!it->is_string() || !iso_date_prefix(it->get<std::string>()))
      return "\"published_at\" is not an ISO-8601 date";
    a.published_at = it->get<std::string>();
  }
  return {};
}

}  // namespace

IngestResult ingest_jsonl(std::istream& in, double max_malformed_fraction) {
  IngestResult result;
  std::unordered_set<std::string> seen;
  std::size_t non_blank = 0;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++non_blank;
    Article a;
    std::string reason = parse_article(line, a);
    if (reason.empty() && !seen.insert(a.id).second) reason = "duplicate id '" + a.id + "'";
    if (!reason.empty()) {
      result.rejected.push_back({line_no, std::move(reason)});
      continue;
    }
    result.articles.push_back(std::move(a));
  }
  if (non_blank > 0 && static_cast<double>(result.rejected.size()) >
                           max_malformed_fraction * static_cast<double>(non_blank)) {
    std::ostringstream msg;
    msg << result.rejected.size() << " of " << non_blank << " lines malformed (limit "
        << max_malformed_fraction * 100.0 << "%); first:";
    for (std::size_t i = 0; i < std::min<std::size_t>(5, result.rejected.size()); ++i)
      msg << " line " << result.rejected[i].line << " (" << result.rejected[i].reason << ")";
    throw IngestError(msg.str());
  }
  return result;
}

IngestResult ingest_jsonl(const std::filesystem::path& path, double max_malformed_fraction) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read corpus file " + path.string());
  return ingest_jsonl(in, max_malformed_fraction);
}

CountryPeaceTable CountryPeaceTable::from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("peace table is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("peace table must be a JSON object");
  CountryPeaceTable t;
  for (const auto& [key, value] : j.items()) {
    if (key == "_provenance") {
      if (!value.is_string()) throw std::invalid_argument("_provenance must be a string");
      t.provenance = value.get<std::string>();
      continue;
    }
    const std::string code = normalize_country(key);
    if (code.empty()) throw std::invalid_argument("bad country code '" + key + "'");
    if (!value.is_string() || (value != "high" && value != "low"))
      throw std::invalid_argument("label for " + key + " must be \"high\" or \"low\"");
    t.levels[code] = value == "high" ? PeaceLevel::High : PeaceLevel::Low;
  }
  return t;
}

CountryPeaceTable CountryPeaceTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read peace table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string CountryPeaceTable::to_json_text() const {
  json j = json::object();
  for (const auto& [c, level] : levels) j[c] = level == PeaceLevel::High ? "high" : "low";
  j["_provenance"] = provenance;
  return j.dump(2);
}

namespace {
std::string join_missing(const std::vector<std::string>& m) {
  std::string s = "countries missing from the peace table:";
  for (const auto& c : m) s += " " + c;
  return s;
}
}  // namespace

UnknownCountries::UnknownCountries(std::vector<std::string> missing)
    : std::invalid_argument(join_missing(missing)), missing_(std::move(missing)) {}

std::vector<LabeledArticle> assign_labels(const std::vector<Article>& articles,
                                          const CountryPeaceTable& table) {
  std::set<std::string> missing;
  for (const auto& a : articles)
    if (!table.levels.count(a.country)) missing.insert(a.country);
  if (!missing.empty()) throw UnknownCountries({missing.begin(), missing.end()});
  std::vector<LabeledArticle> out;
  out.reserve(articles.size());
  for (const auto& a : articles)
    out.push_back({a, table.levels.at(a.country) == PeaceLevel::High ? 1 : 0});
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  const std::u32string cps = util::decode_utf8(text);
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && util::is_unicode_space(cps[i])) ++i;
    std::size_t j = i;
    while (j < cps.size() && !util::is_unicode_space(cps[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && util::is_unicode_punct(cps[b])) ++b;
    while (e > b && util::is_unicode_punct(cps[e - 1])) --e;
    if (b < e) {
      std::u32string tok(cps.begin() + static_cast<std::ptrdiff_t>(b),
                         cps.begin() + static_cast<std::ptrdiff_t>(e));
      for (auto& c : tok) c = util::to_lower(c);
      tokens.push_back(util::encode_utf8(tok));
    }
    i = j;
  }
  return tokens;
}

std::vector<std::string> ngram_preprocess(std::string_view text, int n) {
  if (n < 1) throw std::invalid_argument("n-gram order must be positive");
  const auto tokens = tokenize(text);
  std::vector<std::string> out;
  const auto un = static_cast<std::size_t>(n);
  if (tokens.size() < un) return out;
  out.reserve(tokens.size() - un + 1);
  for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
    std::string g = tokens[i];
    for (std::size_t k = 1; k < un; ++k) g += " " + tokens[i + k];
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<std::string> ngram_features(std::string_view text, const std::vector<int>& orders) {
  std::vector<std::string> out;
  for (int n : orders) {
    auto g = ngram_preprocess(text, n);
    out.insert(out.end(), std::make_move_iterator(g.begin()), std::make_move_iterator(g.end()));
  }
  return out;
}

}  // namespace peacelens::corpus
