#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "peacelens/emotion/emotion.hpp"
#include "peacelens/llm/scorer.hpp"

namespace peacelens::service {

nlohmann::json to_json(const emotion::TranscriptEmotionSummary& s);
emotion::TranscriptEmotionSummary summary_from_json(const nlohmann::json& j);

struct ScoreRecord {
  std::string video_id;
  std::string session_id;  // viewer session, may be empty
  std::int64_t scored_at_ms = 0;  // Unix epoch milliseconds, UTC
  std::string transcript_digest;  // SHA-256 hex of the transcript bytes
  std::optional<llm::DimensionScoreSet> scores;
  std::optional<emotion::TranscriptEmotionSummary> emotion;
  std::optional<double> news_probability;

  /// Throws std::invalid_argument when the id is empty or no result is present.
  void validate() const;
  nlohmann::json to_json() const;
  static ScoreRecord from_json(const nlohmann::json& j);
};

bool operator==(const ScoreRecord& a, const ScoreRecord& b);

/// "2026-03-01T12:00:00.250Z"
std::string format_timestamp(std::int64_t epoch_ms);

struct HistoryPage {
  std::vector<std::shared_ptr<const ScoreRecord>> records;
  std::optional<std::size_t> next_offset;
};

/// JSONL log with an in-memory index keyed by (video_id, digest), by video
/// and by session. Appends are serialised; records are immutable once stored.
/// A malformed final line (interrupted append) is dropped on load.
class HistoryStore {
 public:
  HistoryStore() = default;  // memory only
  explicit HistoryStore(std::filesystem::path path);

  std::shared_ptr<const ScoreRecord> find(const std::string& video_id,
                                          const std::string& digest) const;
  /// Stores the record unless (video_id, digest) is already present, in which
  /// case the existing record is returned.
  std::shared_ptr<const ScoreRecord> insert(ScoreRecord record);

  /// Sorted by scored_at ascending, then insertion order.
  HistoryPage by_video(const std::string& video_id, std::size_t offset, std::size_t limit) const;
  HistoryPage by_session(const std::string& session_id, std::size_t offset,
                         std::size_t limit) const;

  std::size_t size() const;
  std::size_t dropped_lines() const { return dropped_; }

 private:
  using Ptr = std::shared_ptr<const ScoreRecord>;
  void index(Ptr rec);
  static HistoryPage page(const std::vector<Ptr>& list, std::size_t offset, std::size_t limit);

  mutable std::shared_mutex mu_;
  std::optional<std::filesystem::path> path_;
  std::ofstream log_;
  std::vector<Ptr> records_;
  std::map<std::pair<std::string, std::string>, Ptr> by_key_;
  std::map<std::string, std::vector<Ptr>> by_video_;
  std::map<std::string, std::vector<Ptr>> by_session_;
  std::size_t dropped_ = 0;
};

}  // namespace peacelens::service
