#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "peacelens/eval/gold.hpp"
#include "peacelens/eval/report.hpp"
#include "peacelens/eval/stats.hpp"

using namespace peacelens;
using namespace peacelens::eval;

namespace {

// Reference implementations written independently of the library: plain
// loops in long double, no Eigen.
std::optional<double> oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

struct OracleStats {
  std::size_t n = 0;
  double mean = 0, sd = NAN, min = 0, max = 0, median = 0;
};

OracleStats oracle_stats(const std::vector<double>& v) {
  OracleStats s;
  s.n = v.size();
  if (v.empty()) return s;
  long double sum = 0;
  s.min = v[0];
  s.max = v[0];
  for (double a : v) {
    sum += a;
    if (a < s.min) s.min = a;
    if (a > s.max) s.max = a;
  }
  const long double m = sum / v.size();
  s.mean = static_cast<double>(m);
  if (v.size() >= 2) {
    long double ss = 0;
    for (double a : v) ss += (a - m) * (a - m);
    s.sd = static_cast<double>(std::sqrt(ss / (v.size() - 1)));
  }
  // Selection by counting rank instead of sorting.
  std::vector<double> ranked;
  for (std::size_t k = 0; k < v.size(); ++k) {
    double best = INFINITY;
    for (double a : v) {
      const auto below = std::count_if(v.begin(), v.end(), [&](double b) { return b < a; });
      const auto same = std::count(v.begin(), v.end(), a);
      if (static_cast<std::size_t>(below) <= k && k < static_cast<std::size_t>(below + same))
        best = std::min(best, a);
    }
    ranked.push_back(best);
  }
  const std::size_t n = ranked.size();
  s.median = n % 2 ? ranked[n / 2] : (ranked[n / 2 - 1] + ranked[n / 2]) / 2;
  return s;
}

void check_close(std::optional<double> got, std::optional<double> want, double tol) {
  REQUIRE(got.has_value() == want.has_value());
  if (want) CHECK(std::abs(*got - *want) <= tol);
}

}  // namespace

TEST_CASE("accuracy fixtures and errors") {
  CHECK(accuracy(std::vector<int>{1, 1, 1, 1, 1, 1, 1, 1, 0, 0},
                 std::vector<int>{1, 1, 1, 1, 1, 1, 1, 1, 1, 1}) == doctest::Approx(0.8));
  CHECK(accuracy(std::vector<int>{0, 1}, std::vector<int>{0, 1}) == 1.0);
  CHECK(accuracy(std::vector<int>{0, 1}, std::vector<int>{1, 0}) == 0.0);
  CHECK_THROWS_AS(accuracy(std::vector<int>{1}, std::vector<int>{1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("pearson named examples") {
  const std::vector<double> x{1, 2, 3};
  CHECK(*pearson_r(x, x).r == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(*pearson_r(x, std::vector<double>{3, 2, 1}).r == doctest::Approx(-1.0).epsilon(1e-15));
  // 3 / sqrt(2 * 42/9)
  const double r = *pearson_r(x, std::vector<double>{1, 2, 4}).r;
  CHECK(std::abs(r - 0.981981) < 1e-6);
  CHECK(std::abs(r - 3.0 / std::sqrt(84.0 / 9.0)) < 1e-15);
  CHECK_FALSE(pearson_r(x, std::vector<double>{2, 2, 2}).defined());
  CHECK_THROWS_AS(pearson_r(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
  CHECK_THROWS_AS(pearson_r(x, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("pearson matches the oracle and its symmetries") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(2, 12);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  for (int t = 0; t < 1000; ++t) {
    const int n = len(rng);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = u(rng);
      y[i] = 0.5 * x[i] + u(rng);
    }
    const auto r = pearson_r(x, y);
    check_close(r.r, oracle_pearson(x, y), 1e-12);
    check_close(pearson_r(y, x).r, r.r, 1e-12);
    std::vector<double> ax(n), nx(n);
    for (int i = 0; i < n; ++i) {
      ax[i] = 2.5 * x[i] + 7.0;
      nx[i] = -3.0 * x[i] + 1.0;
    }
    check_close(pearson_r(ax, y).r, r.r, 1e-12);
    check_close(pearson_r(nx, y).r, -*r.r, 1e-12);
    CHECK(*r.r <= 1.0);
    CHECK(*r.r >= -1.0);
  }
}

TEST_CASE("country classification") {
  auto v = country_level_classify({{"DK", {0.9, 0.8, 0.4}}, {"AF", {0.4, 0.4}}});
  REQUIRE(v.size() == 2);
  CHECK(v[0].country == "AF");
  CHECK(v[0].label == 0);
  CHECK(v[1].mean_probability == doctest::Approx(0.7));
  CHECK(v[1].label == 1);
  CHECK(v[1].articles == 3);
  CHECK(country_level_classify({{"XX", {0.5}}})[0].label == 1);
  CHECK_THROWS_AS(country_level_classify({{"XX", {}}}), std::invalid_argument);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(1 + t % 9);
    for (auto& a : p) a = u(rng);
    const auto base = country_level_classify({{"C", p}})[0];
    auto shuffled = p;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto s = country_level_classify({{"C", shuffled}})[0];
    CHECK(s.mean_probability == base.mean_probability);
    CHECK(s.label == base.label);
    std::vector<double> dup;
    for (int k = 0; k < 3; ++k) dup.insert(dup.end(), p.begin(), p.end());
    const auto d = country_level_classify({{"C", dup}})[0];
    CHECK(d.mean_probability == doctest::Approx(base.mean_probability).epsilon(1e-14));
    if (std::abs(base.mean_probability - 0.5) > 1e-12) CHECK(d.label == base.label);
  }
}

TEST_CASE("median and sample sd") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(sample_sd(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9}) ==
        doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK_THROWS(median({}));
  CHECK_THROWS(sample_sd(std::vector<double>{1}));
}

TEST_CASE("transfer diagnostic") {
  std::vector<int> l(22, 1);
  l[0] = 0;
  auto d = transfer_diagnostic(l);
  CHECK(d.high == 21);
  CHECK(d.high_fraction == doctest::Approx(21.0 / 22.0));
  CHECK(d.alarm);
  std::vector<int> half(22, 0);
  std::fill(half.begin(), half.begin() + 11, 1);
  CHECK_FALSE(transfer_diagnostic(half).alarm);
  CHECK(transfer_diagnostic(std::vector<int>(22, 0)).alarm);
  // Exactly 95 of 100 is on the boundary.
  std::vector<int> b(100, 0);
  std::fill(b.begin(), b.begin() + 95, 1);
  CHECK(transfer_diagnostic(b).alarm);
  std::fill(b.begin(), b.end(), 0);
  std::fill(b.begin(), b.begin() + 94, 1);
  CHECK_FALSE(transfer_diagnostic(b).alarm);
  CHECK_THROWS(transfer_diagnostic(std::vector<int>{}));
}

TEST_CASE("gold CSV fixture") {
  const auto g = GoldStandard::load_csv(std::string(PEACELENS_FIXTURES) + "/gold_small.csv");
  CHECK(g.ratings().size() == 11);
  CHECK(g.codebook[index(PeaceDimension::NuanceSimplistic)].find("nuanced") != std::string::npos);

  const auto stats = aggregate_gold(g);
  REQUIRE(stats.size() == kDimensionCount);
  const auto& cc = stats[index(PeaceDimension::CompassionContempt)];
  CHECK(cc.n == 3);
  CHECK(*cc.mean == doctest::Approx(23.0 / 6.0));
  CHECK(*cc.median == 3.5);
  CHECK(*cc.min == 3.0);
  CHECK(*cc.max == 5.0);
  CHECK(*cc.sd == doctest::Approx(std::sqrt(13.0 / 12.0)));
  const auto& no = stats[index(PeaceDimension::NewsOpinion)];
  CHECK(no.n == 3);
  CHECK(*no.median == 3.5);
  CHECK(*no.max == doctest::Approx(13.0 / 3.0));
  const auto& empty = stats[index(PeaceDimension::OrderCreativity)];
  CHECK(empty.n == 0);
  CHECK_FALSE(empty.mean.has_value());

  const auto table = render_gold_table(stats);
  CHECK(table.find("Median") != std::string::npos);
  CHECK(table.find("n/a") != std::string::npos);
  CHECK(to_json(stats)[3]["mean"].is_null());

  const auto rc = inter_rater_reliability(g, PeaceDimension::CompassionContempt);
  REQUIRE(rc.pairs.size() == 1);
  CHECK(rc.pairs[0].overlap == 2);
  CHECK(*rc.pairs[0].agreement == 0.5);  // (3,4) within, (2,4) outside
  CHECK_FALSE(rc.pairs[0].r.defined());

  const auto rn = inter_rater_reliability(g, PeaceDimension::NewsOpinion);
  CHECK(rn.raters == std::vector<std::string>{"r1", "r2", "r3"});
  REQUIRE(rn.pairs.size() == 3);
  CHECK(*rn.pairs[0].r.r == doctest::Approx(1.0));
  CHECK(rn.pairs[1].insufficient);
  CHECK_FALSE(rn.pairs[1].r.defined());
  CHECK(*rn.pooled_agreement == 1.0);
  CHECK(rn.pooled_observations == 4);
  CHECK(*rn.r(0, 1) == doctest::Approx(1.0));
  CHECK_FALSE(rn.r(0, 2).has_value());
  CHECK(to_json(rn)["pairs"][1]["insufficient_overlap"] == true);
}

TEST_CASE("gold CSV errors") {
  CHECK_THROWS_AS(GoldStandard::from_csv_text("video_id,dimension,score\n"), GoldFormatError);
  CHECK_THROWS_AS(
      GoldStandard::from_csv_text("video_id,rater_id,dimension,score\nv,r,news_opinion,6\n"),
      GoldFormatError);
  CHECK_THROWS_AS(
      GoldStandard::from_csv_text("video_id,rater_id,dimension,score\nv,r,joy,3\n"),
      GoldFormatError);
  CHECK_THROWS_AS(GoldStandard::from_csv_text(
                      "video_id,rater_id,dimension,score\nv,r,news_opinion,3\nv,r,news_opinion,4\n"),
                  GoldFormatError);
  CHECK_THROWS_AS(
      GoldStandard::from_csv_text("video_id,rater_id,dimension,score\nv,r,news_opinion,x\n"),
      GoldFormatError);
  const auto g = GoldStandard::from_csv_text(
      "# orientation news_opinion: 5=Opinion\nvideo_id,rater_id,dimension,score\n");
  CHECK(g.orientation[index(PeaceDimension::NewsOpinion)] == Orientation::SecondPoleHigh);
}

TEST_CASE("aggregate_gold matches brute force on random tables") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> nv(1, 10), nr(1, 5), pick(0, 3);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  for (int t = 0; t < 1000; ++t) {
    GoldStandard g;
    const int videos = nv(rng), raters = nr(rng);
    // Brute force: a dense table with NaN holes.
    std::vector<std::vector<std::vector<double>>> dense(
        kDimensionCount, std::vector<std::vector<double>>(videos, std::vector<double>(raters, NAN)));
    for (auto d : kDimensions)
      for (int v = 0; v < videos; ++v)
        for (int r = 0; r < raters; ++r) {
          if (pick(rng) == 0) continue;  // missing
          const double s = t % 2 ? std::round(u(rng)) : u(rng);
          dense[index(d)][v][r] = s;
          g.add("v" + std::to_string(v), "r" + std::to_string(r), d, s);
        }
    const auto stats = aggregate_gold(g);
    for (auto d : kDimensions) {
      std::vector<double> means;
      for (int v = 0; v < videos; ++v) {
        long double sum = 0;
        int c = 0;
        for (int r = 0; r < raters; ++r)
          if (!std::isnan(dense[index(d)][v][r])) {
            sum += dense[index(d)][v][r];
            ++c;
          }
        if (c) means.push_back(static_cast<double>(sum / c));
      }
      const auto o = oracle_stats(means);
      const auto& s = stats[index(d)];
      REQUIRE(s.n == o.n);
      if (o.n == 0) {
        CHECK_FALSE(s.mean.has_value());
        continue;
      }
      CHECK(std::abs(*s.mean - o.mean) <= 1e-12);
      CHECK(std::abs(*s.min - o.min) <= 1e-12);
      CHECK(std::abs(*s.max - o.max) <= 1e-12);
      CHECK(std::abs(*s.median - o.median) <= 1e-12);
      CHECK(*s.min <= *s.median);
      CHECK(*s.median <= *s.max);
      if (o.n >= 2) CHECK(std::abs(*s.sd - o.sd) <= 1e-12);
      else CHECK_FALSE(s.sd.has_value());
    }
  }
}

TEST_CASE("single rating row") {
  GoldStandard g;
  g.add("v", "r", PeaceDimension::OrderCreativity, 3);
  const auto s = aggregate_gold(g)[index(PeaceDimension::OrderCreativity)];
  CHECK(s.n == 1);
  CHECK(*s.mean == 3);
  CHECK_FALSE(s.sd.has_value());
  CHECK(*s.min == 3);
  CHECK(*s.max == 3);
  CHECK(*s.median == 3);
}

TEST_CASE("inter-rater agreement and r against brute force") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> score(1, 5), nv(2, 8), pick(0, 4);
  for (int t = 0; t < 300; ++t) {
    GoldStandard g;
    const int videos = nv(rng);
    std::vector<std::array<int, 3>> s(videos);
    for (int v = 0; v < videos; ++v)
      for (int r = 0; r < 3; ++r) {
        s[v][r] = pick(rng) == 0 ? 0 : score(rng);
        if (s[v][r]) g.add("v" + std::to_string(v), "r" + std::to_string(r),
                           PeaceDimension::NuanceSimplistic, s[v][r]);
      }
    const auto rep = inter_rater_reliability(g, PeaceDimension::NuanceSimplistic);
    std::size_t within = 0, obs = 0;
    for (const auto& p : rep.pairs) {
      const int a = p.rater_a[1] - '0', b = p.rater_b[1] - '0';
      std::vector<double> xa, xb;
      std::size_t w = 0;
      for (int v = 0; v < videos; ++v)
        if (s[v][a] && s[v][b]) {
          xa.push_back(s[v][a]);
          xb.push_back(s[v][b]);
          w += std::abs(s[v][a] - s[v][b]) <= 1;
        }
      REQUIRE(p.overlap == xa.size());
      within += w;
      obs += xa.size();
      if (!xa.empty()) CHECK(*p.agreement == static_cast<double>(w) / xa.size());
      if (xa.size() >= 2) check_close(p.r.r, oracle_pearson(xa, xb), 1e-12);
      else CHECK(p.insufficient);
    }
    CHECK(rep.pooled_observations == obs);
    if (obs) CHECK(*rep.pooled_agreement == static_cast<double>(within) / obs);
  }
}

TEST_CASE("agreement is one when raters never differ by more than a point") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> base(1, 4), bump(0, 1);
  GoldStandard g;
  for (int v = 0; v < 40; ++v) {
    const int b = base(rng);
    for (int r = 0; r < 4; ++r)
      g.add("v" + std::to_string(v), "r" + std::to_string(r), PeaceDimension::NewsOpinion,
            b + bump(rng));
  }
  const auto rep = inter_rater_reliability(g, PeaceDimension::NewsOpinion);
  CHECK(*rep.pooled_agreement == 1.0);
  for (const auto& p : rep.pairs) CHECK(*p.agreement == 1.0);
}

TEST_CASE("identical raters") {
  GoldStandard g;
  for (int v = 0; v < 5; ++v)
    for (const char* r : {"a", "b"})
      g.add("v" + std::to_string(v), r, PeaceDimension::CompassionContempt, 1 + v % 5);
  const auto rep = inter_rater_reliability(g, PeaceDimension::CompassionContempt);
  CHECK(*rep.pairs[0].r.r == doctest::Approx(1.0));
  CHECK(*rep.pairs[0].agreement == 1.0);
}

TEST_CASE("synthetic raters at r = 0.93 are recovered") {
  // B = A + e with var(e) = var(A) (1/r^2 - 1), so corr(A, B) = r.
  const double target = 0.93, spread = 0.35;
  const double noise = spread * std::sqrt(1.0 / (target * target) - 1.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    GoldStandard g;
    for (int v = 0; v < 1000; ++v) {
      const double a = std::clamp(3.0 + spread * z(rng), 1.0, 5.0);
      const double b = std::clamp(a + noise * z(rng), 1.0, 5.0);
      g.add("v" + std::to_string(v), "A", PeaceDimension::CompassionContempt, a);
      g.add("v" + std::to_string(v), "B", PeaceDimension::CompassionContempt, b);
    }
    const auto rep = inter_rater_reliability(g, PeaceDimension::CompassionContempt);
    CHECK(std::abs(*rep.pairs[0].r.r - target) <= 0.02);
  }
}

TEST_CASE("model versus human") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  GoldStandard g;
  std::map<std::string, double> rounded, constant;
  for (int v = 0; v < 200; ++v) {
    const std::string id = "v" + std::to_string(v);
    g.add(id, "r1", PeaceDimension::NuanceSimplistic, u(rng));
    g.add(id, "r2", PeaceDimension::NuanceSimplistic, u(rng));
  }
  for (const auto& [id, m] : g.video_means(PeaceDimension::NuanceSimplistic)) {
    rounded[id] = std::round(m);
    constant[id] = 3;
  }
  const auto e = model_vs_human(rounded, g, PeaceDimension::NuanceSimplistic, "mock-llm", "text_only");
  CHECK(*e.r.r >= 0.9);
  CHECK(e.r.n == 200);
  const auto c = model_vs_human(constant, g, PeaceDimension::NuanceSimplistic, "gemini-2.5-flash",
                                "dual_input");
  CHECK_FALSE(c.r.defined());

  CorrelationReport rep{{e, c}};
  const auto j = rep.to_json();
  CHECK(j[1]["r"] == "undefined");
  CHECK(j[1]["model_id"] == "gemini-2.5-flash");
  const auto csv = rep.to_csv();
  CHECK(csv.rfind("model_id,mode,dimension,r,n\n", 0) == 0);
  CHECK(csv.find("gemini-2.5-flash,dual_input,nuance_simplistic,,200") != std::string::npos);
  CHECK(rep.to_text().find("undefined") != std::string::npos);

  CHECK_THROWS_AS(model_vs_human({{"v0", 3.0}}, g, PeaceDimension::NuanceSimplistic, "m", "t"),
                  InsufficientOverlap);
  CHECK_THROWS_AS(model_vs_human(rounded, g, PeaceDimension::NuanceSimplistic, "m", "t",
                                 Orientation::SecondPoleHigh),
                  OrientationMismatch);
}

TEST_CASE("eval report") {
  const std::vector<std::string> countries{"DK", "DK", "DK", "AF", "AF"};
  const std::vector<double> probs{0.9, 0.8, 0.4, 0.6, 0.1};
  const std::vector<int> truths{1, 1, 1, 0, 0};
  const auto rep = build_eval_report("now", "ff", countries, probs, truths);
  CHECK(rep.n == 5);
  CHECK(rep.accuracy == doctest::Approx(0.6));
  CHECK(rep.confusion.tp == 2);
  CHECK(rep.confusion.fn == 1);
  CHECK(rep.confusion.fp == 1);
  CHECK(rep.confusion.tn == 1);
  CHECK(rep.countries.size() == 2);
  CHECK(rep.countries_correct == 2);  // AF mean 0.35 low, DK 0.7 high
  const auto j = rep.to_json();
  CHECK(j["countries"][1]["label"] == "high");
  const auto table = render_accuracy_table({rep});
  CHECK(table.find("60.00%") != std::string::npos);
  CHECK(render_country_table(rep).find("countries correct") != std::string::npos);
  CHECK_THROWS(build_eval_report("d", "m", countries, probs, std::vector<int>{1, 0, 1, 0, 0}));
}
