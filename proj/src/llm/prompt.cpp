#include "peacelens/llm/prompt.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "builtin_prompt.hpp"

namespace peacelens::llm {

std::string_view to_string(ScoringMode m) {
  return m == ScoringMode::TextOnly ? "text_only" : "dual_input";
}

ScoringMode parse_mode(std::string_view s) {
  if (s == "text_only" || s == "text") return ScoringMode::TextOnly;
  if (s == "dual_input" || s == "dual") return ScoringMode::DualInput;
  throw std::invalid_argument("unknown scoring mode '" + std::string(s) + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Byte offset just past the first `n` code points.
std::size_t code_point_offset(std::string_view s, std::size_t n) {
  std::size_t i = 0;
  for (std::size_t k = 0; k < n && i < s.size(); ++k) {
    ++i;
    while (i < s.size() && (static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) ++i;
  }
  return i;
}

std::size_t code_points(std::string_view s) {
  std::size_t n = 0;
  for (char c : s) n += (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  return n;
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string_view text) {
  PromptTemplate t;
  std::istringstream in{std::string(text)};
  std::string line, section, body;
  bool have_section = false;
  std::array<bool, kDimensionCount> have_rubric{};
  auto flush = [&] {
    if (!have_section) return;
    const std::string b = trim(body);
    if (section == "preamble") t.preamble = b;
    else if (section == "emotion_intro") t.emotion_intro = b;
    else if (section == "output") t.output_instruction = b;
    else if (section.rfind("rubric ", 0) == 0) {
      const auto d = parse_dimension(section.substr(7));
      if (!d) throw TemplateError("unknown rubric dimension '" + section.substr(7) + "'");
      t.rubrics[index(*d)] = b;
      have_rubric[index(*d)] = true;
    } else {
      throw TemplateError("unknown template section '" + section + "'");
    }
    body.clear();
  };
  while (std::getline(in, line)) {
    if (line.rfind("=== ", 0) == 0) {
      flush();
      section = trim(line.substr(4));
      have_section = true;
    } else if (!have_section && line.rfind("version:", 0) == 0) {
      t.version = trim(line.substr(8));
    } else if (have_section) {
      body += line + "\n";
    } else if (!trim(line).empty()) {
      throw TemplateError("text before the first section: '" + line + "'");
    }
  }
  flush();
  for (auto d : kDimensions)
    if (!have_rubric[index(d)])
      throw TemplateError("template lacks a rubric for " + std::string(key(d)));
  t.validate();
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TemplateError("cannot read prompt template " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate t = parse(kBuiltinPromptText);
  return t;
}

void PromptTemplate::validate() const {
  if (version.empty()) throw TemplateError("template has no version");
  if (preamble.empty()) throw TemplateError("template has no preamble");
  if (output_instruction.empty()) throw TemplateError("template has no output instruction");
  for (auto d : kDimensions)
    if (rubrics[index(d)].empty())
      throw TemplateError("empty rubric for " + std::string(key(d)));
}

std::string format_stat(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite statistic");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 4);
  std::string s(buf, end);
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string build_prompt(std::string_view transcript, const PromptTemplate& tmpl,
                         ScoringMode mode, const emotion::TranscriptEmotionSummary* summary,
                         const PromptOptions& options) {
  if (mode == ScoringMode::DualInput && !summary)
    throw MissingSummary("dual-input scoring needs an emotion summary");
  std::ostringstream p;
  p << tmpl.preamble << "\n\n";
  p << "Scale: every dimension is scored as an integer from " << kMinScore << " to "
    << kMaxScore << ".\n\nDimensions:\n";
  for (auto d : kDimensions) {
    const auto pl = poles(d);
    const bool first_high = tmpl.orientation[index(d)] == Orientation::FirstPoleHigh;
    p << "- " << key(d) << " (" << kMaxScore << " = " << (first_high ? pl.first : pl.second)
      << ", " << kMinScore << " = " << (first_high ? pl.second : pl.first)
      << "): " << tmpl.rubrics[index(d)] << "\n";
  }
  if (mode == ScoringMode::DualInput) {
    p << "\n" << kEmotionBlockOpen << "\n";
    if (!tmpl.emotion_intro.empty()) p << tmpl.emotion_intro << "\n";
    p << "mean_valence: " << format_stat(summary->mean_valence) << "\n"
      << "volatility: " << format_stat(summary->volatility) << "\n"
      << "neutrality_fraction: " << format_stat(summary->neutrality_fraction) << "\n"
      << "chunks: " << summary->chunk_valences.size() << "\n"
      << kEmotionBlockClose << "\n";
  }
  p << "\n" << tmpl.output_instruction << "\n\nTRANSCRIPT:\n";
  const std::size_t total = code_points(transcript);
  if (total > options.max_transcript_chars) {
    p << transcript.substr(0, code_point_offset(transcript, options.max_transcript_chars))
      << "\n\n[Transcript truncated: showing the first " << options.max_transcript_chars << " of "
      << total << " characters.]";
  } else {
    p << transcript;
  }
  return p.str();
}

}  // namespace peacelens::llm
