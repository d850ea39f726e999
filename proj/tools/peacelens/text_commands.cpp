#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "peacelens/eval/gold.hpp"
#include "peacelens/eval/report.hpp"
#include "peacelens/llm/scorer.hpp"
#include "peacelens/service/history.hpp"
#include "peacelens/service/service.hpp"
#include "peacelens/util/log.hpp"

namespace peacelens::cli {

namespace {

using nlohmann::json;

service::ServiceConfig offline_ok(const Globals& g, const std::string& prompt) {
  auto cfg = provider_config(g);
  if (!prompt.empty()) cfg.prompt_path = prompt;
  cfg.checkpoint_path.clear();
  cfg.validate();
  return cfg;
}

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ScoreArgs {
  std::string transcript, video_id, mode = "dual_input", prompt;
};

void add_score(CLI::App& app, Globals& g) {
  auto a = std::make_shared<ScoreArgs>();
  auto* cmd = app.add_subcommand("score", "Score one transcript on the five peace dimensions");
  cmd->add_option("--transcript", a->transcript, "Transcript text file, or - for stdin")->required();
  cmd->add_option("--video-id", a->video_id, "Identifier (default: file stem)");
  cmd->add_option("--mode", a->mode, "text_only or dual_input")->capture_default_str();
  cmd->add_option("--prompt", a->prompt, "Prompt template file (default: built-in)");
  cmd->callback([a, &g] {
    const auto comps = service::build_components(offline_ok(g, a->prompt));
    const std::string text = read_text(a->transcript);
    const std::string id = !a->video_id.empty() ? a->video_id
                           : a->transcript == "-" ? "stdin"
                                                  : std::filesystem::path(a->transcript).stem().string();
    const auto summary = emotion::analyze_transcript(text, *comps.emotion, comps.weights);
    const auto scores = llm::score_transcript({id, text, summary}, *comps.llm, comps.prompt,
                                              llm::parse_mode(a->mode));
    std::cout << json{{"video_id", id},
                      {"scores", scores.to_json()},
                      {"emotion", service::to_json(summary)}}
                     .dump(2)
              << "\n";
  });
}

std::vector<llm::Transcript> read_transcripts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<llm::Transcript> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("video_id").get<std::string>(), j.at("transcript").get<std::string>(), {}});
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.empty()) throw std::runtime_error(path + " holds no transcripts");
  return out;
}

struct BenchArgs {
  std::string transcripts, gold, csv, prompt;
  std::vector<std::string> modes{"text_only", "dual_input"};
  std::size_t in_flight = 4;
};

void add_bench(CLI::App& app, Globals& g) {
  auto a = std::make_shared<BenchArgs>();
  auto* cmd = app.add_subcommand(
      "bench", "Score a transcript set and correlate against a human gold standard");
  cmd->add_option("--transcripts", a->transcripts, "JSONL lines {video_id, transcript}")->required();
  cmd->add_option("--gold", a->gold, "Gold CSV: video_id, rater_id, dimension, score")->required();
  cmd->add_option("--modes", a->modes, "Scoring modes to compare")->delimiter(',')->capture_default_str();
  cmd->add_option("--csv", a->csv, "Also write the correlation bars as CSV");
  cmd->add_option("--prompt", a->prompt, "Prompt template file (default: built-in)");
  cmd->add_option("--in-flight", a->in_flight)->capture_default_str();
  cmd->callback([a, &g] {
    const auto comps = service::build_components(offline_ok(g, a->prompt));
    const auto gold = eval::GoldStandard::load_csv(a->gold);
    auto transcripts = read_transcripts(a->transcripts);
    for (auto& t : transcripts)
      t.summary = emotion::analyze_transcript(t.text, *comps.emotion, comps.weights);

    json out;
    const auto stats = eval::aggregate_gold(gold);
    out["gold"] = eval::to_json(stats);
    std::string text = "Human gold standard\n" + eval::render_gold_table(stats) + "\nInter-rater\n";
    out["reliability"] = json::array();
    for (auto d : kDimensions) {
      const auto rel = eval::inter_rater_reliability(gold, d);
      out["reliability"].push_back(eval::to_json(rel));
      double sum = 0;
      int defined = 0;
      for (const auto& p : rel.pairs)
        if (p.r.r) {
          sum += *p.r.r;
          ++defined;
        }
      std::ostringstream os;
      os << std::fixed << std::setprecision(3) << "  " << std::left << std::setw(22) << label(d)
         << std::right << defined << " pairs";
      if (defined) os << ", mean r " << sum / defined;
      if (rel.pooled_agreement)
        os << ", within one point " << *rel.pooled_agreement << " of " << rel.pooled_observations;
      text += os.str() + "\n";
    }

    llm::ScorerOptions opts;
    opts.max_in_flight = a->in_flight;
    eval::CorrelationReport report;
    std::size_t failures = 0;
    for (const auto& m : a->modes) {
      const auto mode = llm::parse_mode(m);
      const auto results = llm::batch_score(transcripts, *comps.llm, comps.prompt, mode, opts);
      for (auto d : kDimensions) {
        std::map<std::string, double> model;
        for (const auto& r : results) {
          if (r.scores) model[r.transcript_id] = r.scores->score(d);
        }
        try {
          report.entries.push_back(eval::model_vs_human(model, gold, d, comps.llm->model_id(),
                                                        std::string(llm::to_string(mode)),
                                                        comps.prompt.orientation[index(d)]));
        } catch (const eval::InsufficientOverlap& e) {
          util::log_warn(e.what());
        }
      }
      for (const auto& r : results)
        if (r.error) {
          ++failures;
          util::log_warn(r.transcript_id + ": " + *r.error);
        }
    }
    out["correlations"] = report.to_json();
    out["scoring_failures"] = failures;
    text += "\nModel vs human (Pearson r)\n" + report.to_text();
    if (failures) text += std::to_string(failures) + " transcripts failed to score\n";
    if (!a->csv.empty()) {
      std::ofstream(a->csv) << report.to_csv();
      text += "wrote " + a->csv + "\n";
    }
    emit(g, out, text);
  });
}

struct SynthBenchArgs {
  int videos = 52, raters = 3;
  std::uint64_t seed = 7;
  double rater_noise = 0.35, model_noise = 0.6, missing = 0.1;
  std::string out_dir;
};

void add_synth_bench(CLI::App& app, Globals& g) {
  auto a = std::make_shared<SynthBenchArgs>();
  auto* cmd = app.add_subcommand(
      "synth-bench", "Write synthetic transcripts, gold ratings and mock LLM replies for bench");
  cmd->add_option("--videos", a->videos)->capture_default_str();
  cmd->add_option("--raters", a->raters)->capture_default_str();
  cmd->add_option("--seed", a->seed)->capture_default_str();
  cmd->add_option("--rater-noise", a->rater_noise, "SD of rater scores around the latent value")
      ->capture_default_str();
  cmd->add_option("--model-noise", a->model_noise, "SD of mock model scores around the latent value")
      ->capture_default_str();
  cmd->add_option("--missing", a->missing, "Probability that a rating cell is empty")
      ->capture_default_str();
  cmd->add_option("-o,--out-dir", a->out_dir)->required();
  cmd->callback([a, &g] {
    if (a->videos < 2 || a->raters < 1) throw std::invalid_argument("need >= 2 videos and >= 1 rater");
    std::filesystem::create_directories(a->out_dir);
    const auto dir = std::filesystem::path(a->out_dir);
    std::mt19937_64 rng(a->seed);
    std::uniform_real_distribution<double> latent(1.5, 4.5), u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    auto to_scale = [](double v) { return std::clamp(std::round(v), 1.0, 5.0); };
    const std::vector<std::string> warm{"We are grateful for the help.", "Thank you all, this is wonderful.",
                                        "I love how the town came together."};
    const std::vector<std::string> cold{"This is disgusting and I am furious.",
                                        "They are idiots and I hate it.", "What a terrible, awful mess."};
    const std::vector<std::string> plain{"The meeting starts at noon.", "Here is the schedule for today.",
                                         "The report covers three regions."};

    std::ofstream tx(dir / "transcripts.jsonl"), gold(dir / "gold.csv"), mock(dir / "mock_llm.jsonl");
    gold << "video_id,rater_id,dimension,score\n";
    std::size_t ratings = 0;
    for (int v = 0; v < a->videos; ++v) {
      std::ostringstream id;
      id << "vid" << std::setw(3) << std::setfill('0') << v;
      std::array<double, kDimensionCount> t{};
      for (auto& x : t) x = latent(rng);
      std::string transcript;
      const double warmth = t[0];
      for (int s = 0; s < 6; ++s) {
        const double pick = u(rng) * 4.0 + 1.0;
        const auto& pool = pick < warmth - 1.0 ? warm : pick > warmth + 1.0 ? cold : plain;
        transcript += pool[static_cast<std::size_t>(u(rng) * pool.size()) % pool.size()] + " ";
      }
      tx << json{{"video_id", id.str()}, {"transcript", transcript}}.dump() << "\n";
      json reply;
      for (auto d : kDimensions) {
        reply[std::string(key(d))] = static_cast<int>(to_scale(t[index(d)] + a->model_noise * z(rng)));
        for (int r = 0; r < a->raters; ++r) {
          if (u(rng) < a->missing) continue;
          gold << id.str() << ",rater" << r + 1 << "," << key(d) << ","
               << to_scale(t[index(d)] + a->rater_noise * z(rng)) << "\n";
          ++ratings;
        }
      }
      mock << json{{"transcript_id", id.str()}, {"response", reply.dump()}}.dump() << "\n";
    }
    emit(g, {{"videos", a->videos}, {"ratings", ratings}, {"out_dir", a->out_dir}},
         "wrote " + std::to_string(a->videos) + " transcripts, " + std::to_string(ratings) +
             " ratings and mock replies to " + a->out_dir + "\n");
  });
}

std::atomic<service::HttpServer*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

struct ServeArgs {
  std::string host, history;
  int port = -1;
};

void add_serve(CLI::App& app, Globals& g) {
  auto a = std::make_shared<ServeArgs>();
  auto* cmd = app.add_subcommand("serve", "Run the HTTP service");
  cmd->add_option("--host", a->host, "Bind address (default 127.0.0.1)");
  cmd->add_option("--port", a->port, "Port (default 8787; 0 picks one)");
  cmd->add_option("--history", a->history, "Score history log (JSONL)");
  cmd->callback([a, &g] {
    auto cfg = provider_config(g);
    if (!a->host.empty()) cfg.host = a->host;
    if (a->port >= 0) cfg.port = a->port;
    if (!a->history.empty()) cfg.history_path = a->history;
    auto svc = service::PeaceService::from_config(cfg);
    service::HttpServer server(*svc);
    const int port = server.bind(cfg.host, cfg.port);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "peacelens serving on http://" << cfg.host << ":" << port << " (mode "
              << service::to_string(cfg.mode) << ")" << std::endl;
    server.listen();
    g_server = nullptr;
  });
}

}  // namespace

void add_text_commands(CLI::App& app, Globals& g) {
  add_score(app, g);
  add_bench(app, g);
  add_synth_bench(app, g);
  add_serve(app, g);
}

}  // namespace peacelens::cli
