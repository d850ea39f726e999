#include "peacelens/service/history.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <mutex>
#include <sstream>

#include "peacelens/util/bytes.hpp"
#include "peacelens/util/log.hpp"

namespace peacelens::service {

nlohmann::json to_json(const emotion::TranscriptEmotionSummary& s) {
  return {{"chunk_valences", s.chunk_valences},
          {"mean_valence", s.mean_valence},
          {"volatility", s.volatility},
          {"neutrality_fraction", s.neutrality_fraction},
          {"dominant_categories", s.dominant_categories}};
}

emotion::TranscriptEmotionSummary summary_from_json(const nlohmann::json& j) {
  emotion::TranscriptEmotionSummary s;
  j.at("chunk_valences").get_to(s.chunk_valences);
  j.at("mean_valence").get_to(s.mean_valence);
  j.at("volatility").get_to(s.volatility);
  j.at("neutrality_fraction").get_to(s.neutrality_fraction);
  j.at("dominant_categories").get_to(s.dominant_categories);
  return s;
}

std::string format_timestamp(std::int64_t epoch_ms) {
  const std::time_t secs = static_cast<std::time_t>(epoch_ms / 1000);
  const int ms = static_cast<int>(epoch_ms % 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, ms);
  return out;
}

void ScoreRecord::validate() const {
  if (video_id.empty()) throw std::invalid_argument("score record without video_id");
  if (!scores && !emotion && !news_probability)
    throw std::invalid_argument("score record for " + video_id + " carries no result");
}

nlohmann::json ScoreRecord::to_json() const {
  nlohmann::json j;
  j["video_id"] = video_id;
  if (!session_id.empty()) j["session_id"] = session_id;
  j["scored_at"] = format_timestamp(scored_at_ms);
  j["scored_at_ms"] = scored_at_ms;
  j["transcript_digest"] = transcript_digest;
  j["scores"] = scores ? scores->to_json() : nlohmann::json(nullptr);
  j["emotion"] = emotion ? service::to_json(*emotion) : nlohmann::json(nullptr);
  j["news_probability"] = news_probability ? nlohmann::json(*news_probability)
                                           : nlohmann::json(nullptr);
  return j;
}

ScoreRecord ScoreRecord::from_json(const nlohmann::json& j) {
  ScoreRecord r;
  j.at("video_id").get_to(r.video_id);
  r.session_id = j.value("session_id", "");
  j.at("scored_at_ms").get_to(r.scored_at_ms);
  j.at("transcript_digest").get_to(r.transcript_digest);
  if (j.contains("scores") && !j["scores"].is_null())
    r.scores = llm::DimensionScoreSet::from_json(j["scores"]);
  if (j.contains("emotion") && !j["emotion"].is_null()) r.emotion = summary_from_json(j["emotion"]);
  if (j.contains("news_probability") && !j["news_probability"].is_null())
    r.news_probability = j["news_probability"].get<double>();
  r.validate();
  return r;
}

bool operator==(const ScoreRecord& a, const ScoreRecord& b) {
  auto same_emotion = [](const auto& x, const auto& y) {
    if (x.has_value() != y.has_value()) return false;
    if (!x) return true;
    return x->chunk_valences == y->chunk_valences && x->mean_valence == y->mean_valence &&
           x->volatility == y->volatility && x->neutrality_fraction == y->neutrality_fraction &&
           x->dominant_categories == y->dominant_categories;
  };
  return a.video_id == b.video_id && a.session_id == b.session_id &&
         a.scored_at_ms == b.scored_at_ms && a.transcript_digest == b.transcript_digest &&
         a.scores == b.scores && same_emotion(a.emotion, b.emotion) &&
         a.news_probability == b.news_probability;
}

HistoryStore::HistoryStore(std::filesystem::path path) : path_(std::move(path)) {
  bool clean = true;
  if (std::filesystem::exists(*path_)) {
    std::ifstream in(*path_, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (in.eof()) clean = false;  // no trailing newline
      if (line.empty()) continue;
      try {
        index(std::make_shared<const ScoreRecord>(
            ScoreRecord::from_json(nlohmann::json::parse(line))));
      } catch (const std::exception& e) {
        ++dropped_;
        clean = false;
        util::log_warn("history line " + std::to_string(line_no) + " dropped: " + e.what());
      }
    }
  }
  if (!clean) {
    std::string text;
    for (const auto& r : records_) text += r->to_json().dump() + "\n";
    util::write_file_atomic(*path_, text);
  }
  log_.open(*path_, std::ios::binary | std::ios::app);
  if (!log_) throw std::runtime_error("cannot open history log " + path_->string());
}

void HistoryStore::index(Ptr rec) {
  const auto key = std::make_pair(rec->video_id, rec->transcript_digest);
  if (by_key_.count(key)) return;
  by_key_[key] = rec;
  auto insert_sorted = [&](std::vector<Ptr>& list) {
    auto pos = std::upper_bound(list.begin(), list.end(), rec->scored_at_ms,
                                [](std::int64_t t, const Ptr& p) { return t < p->scored_at_ms; });
    list.insert(pos, rec);
  };
  insert_sorted(by_video_[rec->video_id]);
  if (!rec->session_id.empty()) insert_sorted(by_session_[rec->session_id]);
  records_.push_back(std::move(rec));
}

std::shared_ptr<const ScoreRecord> HistoryStore::find(const std::string& video_id,
                                                      const std::string& digest) const {
  std::shared_lock lock(mu_);
  auto it = by_key_.find({video_id, digest});
  return it == by_key_.end() ? nullptr : it->second;
}

std::shared_ptr<const ScoreRecord> HistoryStore::insert(ScoreRecord record) {
  record.validate();
  std::unique_lock lock(mu_);
  if (auto it = by_key_.find({record.video_id, record.transcript_digest}); it != by_key_.end())
    return it->second;
  auto rec = std::make_shared<const ScoreRecord>(std::move(record));
  if (log_.is_open()) {
    log_ << rec->to_json().dump() << '\n';
    log_.flush();
    if (!log_) throw std::runtime_error("history append failed");
  }
  index(rec);
  return rec;
}

HistoryPage HistoryStore::page(const std::vector<Ptr>& list, std::size_t offset,
                               std::size_t limit) {
  HistoryPage p;
  if (offset >= list.size()) return p;
  const std::size_t end = std::min(list.size(), offset + limit);
  p.records.assign(list.begin() + static_cast<std::ptrdiff_t>(offset),
                   list.begin() + static_cast<std::ptrdiff_t>(end));
  if (end < list.size()) p.next_offset = end;
  return p;
}

HistoryPage HistoryStore::by_video(const std::string& video_id, std::size_t offset,
                                   std::size_t limit) const {
  std::shared_lock lock(mu_);
  auto it = by_video_.find(video_id);
  return it == by_video_.end() ? HistoryPage{} : page(it->second, offset, limit);
}

HistoryPage HistoryStore::by_session(const std::string& session_id, std::size_t offset,
                                     std::size_t limit) const {
  std::shared_lock lock(mu_);
  auto it = by_session_.find(session_id);
  return it == by_session_.end() ? HistoryPage{} : page(it->second, offset, limit);
}

std::size_t HistoryStore::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

}  // namespace peacelens::service
