#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "peacelens/util/bytes.hpp"

#include "httplib.h"

extern char** environ;

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "peacelens_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args) {
  const auto out = workdir() / "stdout.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && env -u PEACE_MODE '" PEACELENS_CLI "' " +
                          args + " > '" + out.string() + "' 2> '" + (workdir() / "stderr.txt").string() + "'";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, ss.str()};
}

}  // namespace

TEST_CASE("synth, train and evaluate") {
  REQUIRE(run("synth --countries 4 --articles-per-country 60 --separation 3 --seed 5 -o d.bin").status == 0);
  REQUIRE(run("train --data d.bin --arch ff --epochs 2 --seed 5 -o a.ckpt").status == 0);
  REQUIRE(run("train --data d.bin --arch ff --epochs 2 --seed 5 -o b.ckpt").status == 0);
  CHECK(peacelens::util::read_file(workdir() / "a.ckpt") ==
        peacelens::util::read_file(workdir() / "b.ckpt"));

  const auto hist = run("--json train --data d.bin --arch ff --epochs 2 --seed 5 -o c.ckpt");
  REQUIRE(hist.status == 0);
  CHECK(json::parse(hist.out)["history"].size() == 2);

  const auto ev = run("--json evaluate --model a.ckpt --data d.bin --holdout --seed 5");
  REQUIRE(ev.status == 0);
  const auto reports = json::parse(ev.out);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0]["countries"].size() == 4);
  CHECK(reports[0]["accuracy"].get<double>() >= 0.0);
  CHECK(reports[0].contains("transfer_diagnostic"));

  const auto text = run("evaluate --model a.ckpt --data one=d.bin --data two=d.bin");
  CHECK(text.out.find("countries correct") != std::string::npos);
  CHECK(text.out.find("two") != std::string::npos);

  const auto pr = run("--json predict --model a.ckpt --text \"peace talks resume\"");
  REQUIRE(pr.status == 0);
  const double p = json::parse(pr.out)[0]["probability"];
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}

TEST_CASE("ingest embeds a labelled JSONL corpus") {
  {
    std::ofstream c(workdir() / "articles.jsonl");
    c << R"({"id":"a1","country":"dk","source":"x","text":"Talks went well."})" "\n"
      << R"({"id":"a2","country":"AF","source":"x","text":"Shelling continued."})" "\n"
      << R"({"id":"a3","country":"DK","source":"x","text":"Parliament met."})" "\n";
    std::ofstream l(workdir() / "levels.json");
    l << R"({"DK":"high","AF":"low"})";
  }
  const auto r = run("--json ingest --corpus articles.jsonl --labels levels.json -o in.bin");
  REQUIRE(r.status == 0);
  const auto j = json::parse(r.out);
  CHECK(j["articles"] == 3);
  CHECK(j["high"] == 2);
}

TEST_CASE("score and bench in offline modes") {
  { std::ofstream(workdir() / "t.txt") << "We are grateful for the help. Then they shouted in anger."; }
  const auto s = run("score --transcript t.txt --video-id abc");
  REQUIRE(s.status == 0);
  const auto j = json::parse(s.out);
  CHECK(j["scores"]["scores"].size() == 5);
  CHECK(j["emotion"]["chunk_valences"].size() == 2);

  REQUIRE(run("synth-bench --videos 30 --seed 2 -o sb").status == 0);
  const auto b = run("--json --provider mock --mock-fixtures sb/mock_llm.jsonl bench "
                     "--transcripts sb/transcripts.jsonl --gold sb/gold.csv --csv sb/r.csv");
  REQUIRE(b.status == 0);
  const auto out = json::parse(b.out);
  REQUIRE(out["correlations"].size() == 10);
  for (const auto& e : out["correlations"]) CHECK(e["r"].get<double>() > 0.3);
  CHECK(out["gold"].size() == 5);
  CHECK(fs::exists(workdir() / "sb" / "r.csv"));
}

TEST_CASE("failures exit non-zero") {
  CHECK(run("train --data missing.bin -o x.ckpt").status != 0);
  CHECK(run("no-such-command").status != 0);
  CHECK(run("--provider live score --transcript t.txt").status != 0);  // no credentials
  CHECK(run("").status != 0);
}

TEST_CASE("serve answers healthz") {
  const auto log = workdir() / "serve.out";
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_addopen(&fa, 1, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  const std::string hist = (workdir() / "hist.jsonl").string();
  std::vector<std::string> args{PEACELENS_CLI, "--provider", "stub", "serve", "--port", "0",
                                "--history", hist};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  REQUIRE(posix_spawn(&pid, PEACELENS_CLI, &fa, nullptr, argv.data(), environ) == 0);
  posix_spawn_file_actions_destroy(&fa);

  int port = 0;
  for (int i = 0; i < 200 && port == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
    std::ifstream in(log);
    std::string line;
    std::getline(in, line);
    if (auto p = line.find("127.0.0.1:"); p != std::string::npos) port = std::atoi(line.c_str() + p + 10);
  }
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Get("/healthz");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == "ok");
  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  CHECK(WIFEXITED(status));
}
