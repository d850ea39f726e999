#include "peacelens/corpus/dataset.hpp"

#include <random>

#include "peacelens/util/bytes.hpp"

namespace peacelens::corpus {

namespace {

constexpr std::string_view kMagic = "PLDS";
constexpr std::uint16_t kVersion = 1;

// ISO 3166 reserves XA-XZ and QM-QZ for user assignment.
std::string synthetic_country(int i) {
  if (i < 26) return std::string{'X', static_cast<char>('A' + i)};
  return std::string{'Q', static_cast<char>('M' + (i - 26))};
}
constexpr int kMaxSyntheticCountries = 26 + 14;

Eigen::VectorXd unit_gaussian(std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Eigen::VectorXd v(nn::kEmbeddingDim);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = n01(rng);
  return v / v.norm();
}

void put_string(std::string& out, std::string_view s) {
  util::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

std::string get_string(util::ByteReader& r) {
  const auto n = r.get<std::uint32_t>();
  return std::string(r.take(n));
}

}  // namespace

const Eigen::VectorXd& synthetic_peace_direction() {
  static const Eigen::VectorXd dir = [] {
    std::seed_seq seq{0x70656163u, 0x65646972u};
    std::mt19937_64 rng(seq);
    return unit_gaussian(rng);
  }();
  return dir;
}

std::vector<LabeledExample> generate_synthetic_corpus(const SyntheticCorpusConfig& cfg) {
  if (cfg.countries < 2 || cfg.countries % 2 != 0 || cfg.countries > kMaxSyntheticCountries)
    throw std::invalid_argument("countries must be even and between 2 and " +
                                std::to_string(kMaxSyntheticCountries));
  if (cfg.articles_per_country < 1)
    throw std::invalid_argument("articles_per_country must be positive");
  if (!(cfg.separation >= 0.0)) throw std::invalid_argument("separation must be >= 0");
  if (!(cfg.noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");

  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                    static_cast<std::uint32_t>(cfg.seed >> 32), 0xC0FFu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Eigen::VectorXd& dir = synthetic_peace_direction();

  std::vector<LabeledExample> out;
  out.reserve(static_cast<std::size_t>(cfg.countries) *
              static_cast<std::size_t>(cfg.articles_per_country));
  for (int c = 0; c < cfg.countries; ++c) {
    const int label = c < cfg.countries / 2 ? 1 : 0;
    const std::string country = synthetic_country(c);
    const Eigen::VectorXd centre =
        unit_gaussian(rng) + (label ? 0.5 : -0.5) * cfg.separation * dir;
    for (int a = 0; a < cfg.articles_per_country; ++a) {
      Eigen::VectorXd v = centre;
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += cfg.noise_sigma * noise(rng);
      char id[32];
      std::snprintf(id, sizeof id, "%s-%05d", country.c_str(), a);
      out.push_back({id, nn::EmbeddingVector(std::move(v)), label, country, {}});
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, std::span<const LabeledExample> examples) {
  std::string out(kMagic);
  util::put_le<std::uint16_t>(out, kVersion);
  util::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(examples.size()));
  for (const auto& e : examples) {
    put_string(out, e.id);
    put_string(out, e.country);
    put_string(out, e.text);
    util::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.label));
    for (Eigen::Index i = 0; i < e.embedding.size(); ++i) util::put_le<double>(out, e.embedding(i));
  }
  util::write_file_atomic(path, out);
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path& path) {
  const std::string bytes = util::read_file(path);
  util::ByteReader r(bytes);
  try {
    if (r.take(kMagic.size()) != kMagic) throw std::runtime_error("missing PLDS magic");
    const auto version = r.get<std::uint16_t>();
    if (version != kVersion)
      throw std::runtime_error("unsupported dataset version " + std::to_string(version));
    const auto count = r.get<std::uint32_t>();
    std::vector<LabeledExample> out;
    out.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
      LabeledExample e;
      e.id = get_string(r);
      e.country = get_string(r);
      e.text = get_string(r);
      const auto label = r.get<std::uint8_t>();
      if (label > 1) throw std::runtime_error("label out of range");
      e.label = label;
      Eigen::VectorXd v(nn::kEmbeddingDim);
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = r.get<double>();
      e.embedding = nn::EmbeddingVector(std::move(v));
      out.push_back(std::move(e));
    }
    if (r.remaining() != 0) throw std::runtime_error("trailing bytes");
    return out;
  } catch (const std::out_of_range&) {
    throw std::runtime_error("dataset file " + path.string() + " is truncated");
  }
}

}  // namespace peacelens::corpus
