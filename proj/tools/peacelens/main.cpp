#include <iostream>

#include "commands.hpp"
#include "peacelens/util/log.hpp"

namespace peacelens::cli {

service::ServiceConfig provider_config(const Globals& g) {
  service::ServiceConfig cfg;
  if (!g.config.empty()) cfg = service::load_config_file(g.config);
  cfg = service::apply_env(std::move(cfg));
  if (!g.provider.empty()) cfg.mode = service::parse_provider_mode(g.provider);
  if (!g.mock_fixtures.empty()) cfg.mock_llm_fixtures = g.mock_fixtures;
  if (!g.embedding_cache.empty()) cfg.embedding_cache_path = g.embedding_cache;
  return cfg;
}

}  // namespace peacelens::cli

int main(int argc, char** argv) {
  using namespace peacelens;
  CLI::App app{"peacelens: peace-speech classifiers, transcript dimension scoring and evaluation"};
  app.require_subcommand(1);
  cli::Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON output");
  app.add_flag("-v,--verbose", g.verbose, "Log progress to stderr");
  app.add_option("--config", g.config, "Key-value config file (see README)");
  app.add_option("--provider", g.provider, "live, stub or mock (default: PEACE_MODE or stub)")
      ->check(CLI::IsMember({"live", "stub", "mock"}));
  app.add_option("--mock-fixtures", g.mock_fixtures, "JSONL of canned LLM replies for mock mode");
  app.add_option("--embedding-cache", g.embedding_cache, "Persistent embedding cache file");
  app.parse_complete_callback([&] {
    if (g.verbose) util::set_log_level(util::LogLevel::Info);
  });
  cli::add_model_commands(app, g);
  cli::add_text_commands(app, g);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "peacelens: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
