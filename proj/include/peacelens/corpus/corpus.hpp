#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace peacelens::corpus {

struct Article {
  std::string id;
  std::string country;  // ISO-3166 alpha-2
  std::string source;
  std::string text;
  std::optional<std::string> published_at;
};

struct RejectedLine {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct IngestResult {
  std::vector<Article> articles;
  std::vector<RejectedLine> rejected;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses one article per line. Blank lines are skipped and do not count
/// toward the malformed fraction. Duplicate ids are rejected as malformed.
/// Throws IngestError when more than `max_malformed_fraction` of the
/// non-blank lines are rejected.
IngestResult ingest_jsonl(std::istream& in, double max_malformed_fraction = 0.10);
IngestResult ingest_jsonl(const std::filesystem::path& path,
                          double max_malformed_fraction = 0.10);

enum class PeaceLevel { Low = 0, High = 1 };

struct CountryPeaceTable {
  std::map<std::string, PeaceLevel> levels;
  std::string provenance;

  static CountryPeaceTable from_json_text(std::string_view text);
  static CountryPeaceTable load(const std::filesystem::path& path);
  std::string to_json_text() const;
};

class UnknownCountries : public std::invalid_argument {
 public:
  explicit UnknownCountries(std::vector<std::string> missing);
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

struct LabeledArticle {
  Article article;
  int label = 0;  // 1 = high-peace
};

std::vector<LabeledArticle> assign_labels(const std::vector<Article>& articles,
                                          const CountryPeaceTable& table);

/// Lowercased whitespace tokens with edge punctuation removed; tokens that are
/// all punctuation vanish.
std::vector<std::string> tokenize(std::string_view text);
std::vector<std::string> ngram_preprocess(std::string_view text, int n);
/// All n-grams for each order in `orders`, concatenated in that order.
std::vector<std::string> ngram_features(std::string_view text,
                                        const std::vector<int>& orders = {1, 2});

struct SplitConfig {
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
};

/// Seeded uniform shuffle; the first floor(N * train_fraction) go to train.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> train_test_split(std::vector<T> examples,
                                                           const SplitConfig& cfg) {
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  if (examples.size() < 2) throw std::invalid_argument("split needs at least 2 examples");
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                    static_cast<std::uint32_t>(cfg.seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  for (std::size_t i = examples.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(examples[i], examples[pick(rng)]);
  }
  const auto n_train = static_cast<std::size_t>(
      static_cast<double>(examples.size()) * cfg.train_fraction);
  std::vector<T> test(std::make_move_iterator(examples.begin() + static_cast<std::ptrdiff_t>(n_train)),
                      std::make_move_iterator(examples.end()));
  examples.resize(n_train);
  return {std::move(examples), std::move(test)};
}

}  // namespace peacelens::corpus
