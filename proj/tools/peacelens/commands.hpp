#pragma once

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "peacelens/service/config.hpp"

namespace peacelens::cli {

struct Globals {
  bool json = false;
  bool verbose = false;
  std::string config;    // service key-value config, also used for provider settings
  std::string provider;  // live | stub | mock, overrides PEACE_MODE
  std::string mock_fixtures;
  std::string embedding_cache;
};

/// Config file, then environment, then command-line flags.
service::ServiceConfig provider_config(const Globals& g);

void add_model_commands(CLI::App& app, Globals& g);
void add_text_commands(CLI::App& app, Globals& g);

inline void emit(const Globals& g, const nlohmann::json& j, const std::string& text) {
  if (g.json) std::cout << j.dump(2) << "\n";
  else std::cout << text;
}

}  // namespace peacelens::cli
