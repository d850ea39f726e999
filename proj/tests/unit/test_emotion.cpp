#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "json.hpp"

#include "peacelens/emotion/emotion.hpp"

using namespace peacelens::emotion;
namespace fs = std::filesystem;

namespace {

EmotionProfile only(std::string_view cat, double v = 1.0) {
  EmotionProfile p;
  p.scores[*category_index(cat)] = v;
  return p;
}

std::string strip_ws(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

std::map<std::string, double> full_map(double v) {
  std::map<std::string, double> m;
  for (auto c : kCategories) m[std::string(c)] = v;
  return m;
}

}  // namespace

TEST_CASE("taxonomy has 28 distinct categories and the default table is 12/10/6") {
  std::set<std::string_view> names(kCategories.begin(), kCategories.end());
  CHECK(names.size() == 28);
  CHECK(kCategories[kNeutral] == "neutral");
  const auto w = ValenceWeights::defaults();
  int pos = 0, neg = 0, zero = 0;
  for (double x : w.weights) (x > 0 ? pos : x < 0 ? neg : zero)++;
  CHECK(pos == 12);
  CHECK(neg == 10);
  CHECK(zero == 6);
  CHECK(w.weights[*category_index("joy")] == 1.0);
  CHECK(w.weights[*category_index("admiration")] == 1.0);
  CHECK(w.weights[*category_index("anger")] == -1.0);
  CHECK(w.weights[*category_index("disgust")] == -1.0);
  CHECK(w.weights[kNeutral] == 0.0);
}

TEST_CASE("anchor valences") {
  const auto w = ValenceWeights::defaults();
  CHECK(map_valence(only("joy"), w) == 1.0);
  CHECK(map_valence(only("neutral"), w) == 0.0);
  EmotionProfile mix;
  mix.scores[*category_index("anger")] = 0.5;
  mix.scores[*category_index("joy")] = 0.5;
  CHECK(map_valence(mix, w) == 0.0);
  CHECK(map_valence(EmotionProfile{}, w) == 0.0);  // all-zero scores
}

TEST_CASE("valence is bounded and scale invariant") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    ValenceWeights w;
    for (std::size_t i = 0; i < kCategoryCount; ++i) w.weights[i] = i == kNeutral ? 0.0 : 2 * u(rng) - 1;
    EmotionProfile p;
    for (auto& s : p.scores) s = u(rng) * u(rng);
    const double v = map_valence(p, w);
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
    const double lambda = 0.01 + 0.98 * u(rng);
    EmotionProfile q = p;
    for (auto& s : q.scores) s *= lambda;
    CHECK(map_valence(q, w) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("summary closed forms") {
  const std::vector<double> v{1, -1, 1, -1};
  std::vector<EmotionProfile> p(4, only("joy"));
  const auto s = summarize(v, p);
  CHECK(s.mean_valence == 0.0);
  CHECK(s.volatility == 1.0);

  std::vector<double> ten(10, 0.0);
  std::vector<EmotionProfile> pn;
  for (int i = 0; i < 10; ++i) pn.push_back(i < 7 ? only("neutral") : only("anger"));
  CHECK(summarize(ten, pn).neutrality_fraction == doctest::Approx(0.7));

  const std::vector<double> one{0.3};
  const std::vector<EmotionProfile> p1{only("joy")};
  const auto s1 = summarize(one, p1);
  CHECK(s1.volatility == 0.0);
  CHECK(s1.dominant_categories == std::vector<std::string>{"joy"});

  const std::vector<double> same(5, 0.1);
  std::vector<EmotionProfile> p5(5, only("joy"));
  const auto s5 = summarize(same, p5);
  CHECK(s5.mean_valence == 0.1);
  CHECK(s5.volatility == 0.0);
  CHECK_THROWS(summarize({}, {}));
}

TEST_CASE("neutral wins ties for dominance") {
  EmotionProfile p;
  p.scores[*category_index("joy")] = 0.4;
  p.scores[kNeutral] = 0.4;
  CHECK(p.dominant() == kNeutral);
  CHECK(EmotionProfile{}.dominant() == kNeutral);
}

TEST_CASE("sentence chunking") {
  CHECK(chunk_transcript("A. B? C!") == std::vector<std::string>{"A.", "B?", "C!"});
  CHECK(chunk_transcript("no terminal punctuation here") ==
        std::vector<std::string>{"no terminal punctuation here"});
  CHECK_THROWS(chunk_transcript(""));
  CHECK_THROWS(chunk_transcript("  \n "));
  CHECK(chunk_transcript("Mr. Smith went to the U.S. on Monday. He paid 3.5 dollars, e.g. a fee!") ==
        std::vector<std::string>{"Mr. Smith went to the U.S. on Monday.", "He paid 3.5 dollars, e.g. a fee!"});
  CHECK(chunk_transcript("\"Stop!\" she said. Why?! Wait...  Then go.") ==
        std::vector<std::string>{"\"Stop!\" she said.", "Why?!", "Wait...", "Then go."});
}

TEST_CASE("chunks reproduce the text modulo whitespace") {
  std::mt19937 rng(3);
  const char* parts[] = {"Hello", " ", "world", ".", "?", "!", "Dr.", "\n", "3.14", "\"", "U.S.", "ok"};
  for (int t = 0; t < 500; ++t) {
    std::string text;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) text += parts[rng() % 12];
    if (strip_ws(text).empty()) continue;
    const auto chunks = chunk_transcript(text);
    std::string joined;
    for (const auto& c : chunks) {
      CHECK_FALSE(strip_ws(c).empty());
      joined += c;
    }
    CHECK(strip_ws(joined) == strip_ws(text));
  }
}

TEST_CASE("profile schema validation") {
  auto m = full_map(0.1);
  CHECK_NOTHROW(EmotionProfile::from_map(m));
  m.erase("grief");
  try {
    EmotionProfile::from_map(m);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("grief") != std::string::npos);
  }
  auto bad = full_map(0.1);
  bad["joy"] = 1.5;
  CHECK_THROWS_AS(EmotionProfile::from_map(bad), SchemaError);
  auto extra = full_map(0.1);
  extra["boredom"] = 0.1;
  CHECK_THROWS_AS(EmotionProfile::from_map(extra), SchemaError);
}

TEST_CASE("weight table JSON round-trip and validation") {
  const auto w = ValenceWeights::defaults();
  CHECK(ValenceWeights::from_json_text(w.to_json_text()).weights == w.weights);
  auto j = w.to_json_text();
  CHECK_THROWS(ValenceWeights::from_json_text(R"({"joy": 1})"));
  CHECK(ValenceWeights::load(PEACELENS_CONFIG "/valence_weights.json").weights == w.weights);
}

TEST_CASE("lexicon source aligns profiles with chunks") {
  LexiconEmotionSource src;
  const std::vector<std::string> chunks{"I love this.", "Plain statement.", "They are vile and I despise them."};
  const auto profiles = fetch_profiles(chunks, src);
  REQUIRE(profiles.size() == 3);
  CHECK(kCategories[profiles[0].dominant()] == "love");
  CHECK(profiles[1].dominant() == kNeutral);
  const auto w = ValenceWeights::defaults();
  CHECK(map_valence(profiles[2], w) < -0.5);
}

TEST_CASE("file-mode profiles need a matching chunk count") {
  const auto path = fs::temp_directory_path() / "peacelens_profiles.jsonl";
  {
    std::ofstream out(path);
    nlohmann::json scores = full_map(0.0);
    scores["joy"] = 0.9;
    out << nlohmann::json{{"chunk_index", 1}, {"scores", scores}}.dump() << "\n";
    scores["joy"] = 0.0;
    scores["anger"] = 0.8;
    out << nlohmann::json{{"chunk_index", 0}, {"scores", scores}}.dump() << "\n";
  }
  FileEmotionSource src(path);
  const auto p = fetch_profiles({"a", "b"}, src);
  CHECK(kCategories[p[0].dominant()] == "anger");
  CHECK(kCategories[p[1].dominant()] == "joy");
  CHECK_THROWS_AS(fetch_profiles({"a", "b", "c"}, src), SchemaError);
  fs::remove(path);
}

TEST_CASE("two-segment transcript averages out but keeps its volatility") {
  std::string text;
  for (int i = 0; i < 5; ++i) text += "Their policy is vile and I despise them. ";
  for (int i = 0; i < 5; ++i) text += "I admire her brilliant and joyful work. ";
  LexiconEmotionSource src;
  const auto s = analyze_transcript(text, src, ValenceWeights::defaults());
  CHECK(s.chunk_valences.size() == 10);
  CHECK(s.mean_valence >= -0.2);
  CHECK(s.mean_valence <= 0.2);
  CHECK(s.volatility >= 0.8);
}
