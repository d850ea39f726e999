#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "peacelens/dimensions.hpp"
#include "peacelens/emotion/emotion.hpp"

namespace peacelens::llm {

enum class ScoringMode { TextOnly, DualInput };

std::string_view to_string(ScoringMode m);
ScoringMode parse_mode(std::string_view s);  // "text_only" | "dual_input" (also "text", "dual")

inline constexpr std::string_view kEmotionBlockOpen = "[EMOTION PROFILE]";
inline constexpr std::string_view kEmotionBlockClose = "[/EMOTION PROFILE]";

class TemplateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Text file with a "version:" line followed by "=== <section>" blocks:
/// preamble, one "rubric <dimension key>" per dimension, emotion_intro, output.
struct PromptTemplate {
  std::string version;
  std::string preamble;
  std::array<std::string, kDimensionCount> rubrics;
  std::string emotion_intro;
  std::string output_instruction;
  OrientationTable orientation = kDefaultOrientation;

  static PromptTemplate parse(std::string_view text);
  static PromptTemplate load(const std::filesystem::path& path);
  /// The template shipped in prompts/, compiled in.
  static const PromptTemplate& builtin();
  void validate() const;
};

struct PromptOptions {
  std::size_t max_transcript_chars = 60000;  // Unicode code points
};

class MissingSummary : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shortest of up to four decimals, always with a decimal point ("0.0", "-0.25").
std::string format_stat(double v);

std::string build_prompt(std::string_view transcript, const PromptTemplate& tmpl,
                         ScoringMode mode, const emotion::TranscriptEmotionSummary* summary,
                         const PromptOptions& options = {});

}  // namespace peacelens::llm
