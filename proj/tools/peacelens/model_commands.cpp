#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "peacelens/corpus/corpus.hpp"
#include "peacelens/corpus/dataset.hpp"
#include "peacelens/eval/predict.hpp"
#include "peacelens/eval/report.hpp"
#include "peacelens/nn/checkpoint.hpp"
#include "peacelens/nn/train.hpp"
#include "peacelens/service/service.hpp"
#include "peacelens/util/log.hpp"

namespace peacelens::cli {

namespace {

using nlohmann::json;

json to_json(const nn::EpochRecord& r) {
  json j{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"train_accuracy", r.train_accuracy}};
  if (r.test_loss) j["test_loss"] = *r.test_loss;
  if (r.test_accuracy) j["test_accuracy"] = *r.test_accuracy;
  return j;
}

std::string epoch_line(const nn::EpochRecord& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << "epoch " << std::setw(3) << r.epoch << "  loss "
     << r.train_loss << "  acc " << r.train_accuracy;
  if (r.test_loss) os << "  test_loss " << *r.test_loss << "  test_acc " << *r.test_accuracy;
  return os.str();
}

struct SynthArgs {
  corpus::SyntheticCorpusConfig cfg;
  std::string out;
};

void add_synth(CLI::App& app, Globals& g) {
  auto a = std::make_shared<SynthArgs>();
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic labelled embedding corpus");
  cmd->add_option("--countries", a->cfg.countries, "Even number of countries, half high-peace")
      ->capture_default_str();
  cmd->add_option("--articles-per-country", a->cfg.articles_per_country)->capture_default_str();
  cmd->add_option("--separation", a->cfg.separation, "Distance between class centres")
      ->capture_default_str();
  cmd->add_option("--noise-sigma", a->cfg.noise_sigma, "Per-coordinate article noise")
      ->capture_default_str();
  cmd->add_option("--seed", a->cfg.seed)->capture_default_str();
  cmd->add_option("-o,--out", a->out, "Dataset file")->required();
  cmd->callback([a, &g] {
    const auto examples = corpus::generate_synthetic_corpus(a->cfg);
    corpus::save_dataset(a->out, examples);
    emit(g, {{"examples", examples.size()}, {"countries", a->cfg.countries}, {"out", a->out}},
         "wrote " + std::to_string(examples.size()) + " examples from " +
             std::to_string(a->cfg.countries) + " countries to " + a->out + "\n");
  });
}

struct IngestArgs {
  std::string corpus, labels, out;
  double max_malformed = 0.10;
  std::size_t in_flight = 4;
};

void add_ingest(CLI::App& app, Globals& g) {
  auto a = std::make_shared<IngestArgs>();
  auto* cmd = app.add_subcommand("ingest", "JSONL articles + country peace table -> embedded dataset");
  cmd->add_option("--corpus", a->corpus, "JSONL with id, country, source, text")->required();
  cmd->add_option("--labels", a->labels, "JSON object country -> high|low")->required();
  cmd->add_option("-o,--out", a->out, "Dataset file")->required();
  cmd->add_option("--max-malformed", a->max_malformed, "Abort above this fraction of bad lines")
      ->capture_default_str();
  cmd->add_option("--in-flight", a->in_flight, "Concurrent embedding calls")->capture_default_str();
  cmd->callback([a, &g] {
    const auto ingest = corpus::ingest_jsonl(std::filesystem::path(a->corpus), a->max_malformed);
    for (const auto& r : ingest.rejected)
      util::log_warn("line " + std::to_string(r.line) + " rejected: " + r.reason);
    const auto table = corpus::CountryPeaceTable::load(a->labels);
    const auto labeled = corpus::assign_labels(ingest.articles, table);

    auto cfg = provider_config(g);
    if (cfg.mode == service::ProviderMode::Mock) cfg.mode = service::ProviderMode::Stub;
    cfg.validate();
    const auto comps = service::build_components(cfg);
    std::vector<embedding::EmbeddingRequest> reqs;
    for (const auto& l : labeled) reqs.push_back({l.article.id, l.article.text, comps.embed_model});
    const auto batch = comps.gateway->embed_batch(reqs, a->in_flight);
    if (!batch.errors.empty()) {
      for (const auto& [id, err] : batch.errors) util::log_warn("embedding " + id + ": " + err);
      throw std::runtime_error(std::to_string(batch.errors.size()) + " articles failed to embed");
    }
    std::vector<corpus::LabeledExample> examples;
    for (const auto& l : labeled)
      examples.push_back({l.article.id, batch.vectors.at(l.article.id), l.label, l.article.country,
                          l.article.text});
    corpus::save_dataset(a->out, examples);
    std::size_t high = 0;
    for (const auto& e : examples) high += e.label == 1;
    emit(g,
         {{"articles", examples.size()}, {"high", high}, {"rejected", ingest.rejected.size()},
          {"truncated", comps.gateway->truncations()}, {"out", a->out}},
         "ingested " + std::to_string(examples.size()) + " articles (" + std::to_string(high) +
             " high-peace), rejected " + std::to_string(ingest.rejected.size()) + " lines\n");
  });
}

struct TrainArgs {
  std::string data, out, arch = "ff", precision = "float";
  nn::TrainingConfig cfg;
  double train_fraction = 0.8;
  bool nondeterministic = false;
};

void add_train(CLI::App& app, Globals& g) {
  auto a = std::make_shared<TrainArgs>();
  auto* cmd = app.add_subcommand("train", "Train a classifier on a dataset file");
  cmd->add_option("--data", a->data, "Dataset file from synth or ingest")->required();
  cmd->add_option("-o,--out", a->out, "Checkpoint file")->required();
  cmd->add_option("--arch", a->arch, "cnn, ff or revised-cnn")->capture_default_str();
  cmd->add_option("--epochs", a->cfg.epochs)->capture_default_str();
  cmd->add_option("--batch-size", a->cfg.batch_size)->capture_default_str();
  cmd->add_option("--lr", a->cfg.learning_rate)->capture_default_str();
  cmd->add_option("--seed", a->cfg.seed, "Initialisation, split and shuffle seed")
      ->capture_default_str();
  cmd->add_option("--train-fraction", a->train_fraction)->capture_default_str();
  cmd->add_option("--precision", a->precision)
      ->check(CLI::IsMember({"float", "double"}))
      ->capture_default_str();
  cmd->add_flag("--nondeterministic", a->nondeterministic,
                "Draw shuffle and dropout randomness from the OS");
  cmd->callback([a, &g] {
    a->cfg.deterministic = !a->nondeterministic;
    const auto spec = nn::instantiate_architecture(nn::parse_architecture(a->arch));
    auto [train_part, test_part] =
        corpus::train_test_split(corpus::load_dataset(a->data), {a->train_fraction, a->cfg.seed});
    auto run = [&](auto tag) {
      using Scalar = decltype(tag);
      const auto tr = corpus::to_dataset<Scalar>(train_part);
      const auto te = corpus::to_dataset<Scalar>(test_part);
      auto result = nn::train(spec, tr, a->cfg, test_part.empty() ? nullptr : &te,
                              [&](const nn::EpochRecord& r) {
                                if (!g.json) std::cout << epoch_line(r) << "\n";
                              });
      nn::save_checkpoint(spec, result.weights, a->cfg.seed, a->out);
      return result.history;
    };
    const auto history = a->precision == "float" ? run(float{}) : run(double{});
    json j{{"architecture", nn::to_string(spec.architecture)},
           {"train_examples", train_part.size()},
           {"test_examples", test_part.size()},
           {"checkpoint", a->out},
           {"history", json::array()}};
    for (const auto& r : history) j["history"].push_back(to_json(r));
    emit(g, j, "saved " + a->out + "\n");
  });
}

struct EvalArgs {
  std::string model, model_id;
  std::vector<std::string> data;
  bool holdout = false;
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
};

void add_evaluate(CLI::App& app, Globals& g) {
  auto a = std::make_shared<EvalArgs>();
  auto* cmd = app.add_subcommand(
      "evaluate", "Accuracy, country aggregation and transfer diagnostic on one or more datasets");
  cmd->add_option("--model", a->model, "Checkpoint file")->required();
  cmd->add_option("--data", a->data, "Dataset file, or name=path; repeat for cross-corpus runs")
      ->required();
  cmd->add_option("--model-id", a->model_id, "Row label (default: architecture name)");
  cmd->add_flag("--holdout", a->holdout,
                "Score only the test part of each dataset (same split rule as train)");
  cmd->add_option("--train-fraction", a->train_fraction)->capture_default_str();
  cmd->add_option("--seed", a->seed, "Split seed for --holdout")->capture_default_str();
  cmd->callback([a, &g] {
    const auto ck = nn::load_checkpoint(a->model);
    const std::string model_id =
        a->model_id.empty() ? std::string(nn::to_string(ck.spec.architecture)) : a->model_id;
    std::vector<eval::EvalReport> reports;
    for (const auto& item : a->data) {
      std::string name, path = item;
      if (auto eq = item.find('='); eq != std::string::npos) {
        name = item.substr(0, eq);
        path = item.substr(eq + 1);
      } else {
        name = std::filesystem::path(path).stem().string();
      }
      auto examples = corpus::load_dataset(path);
      if (a->holdout)
        examples = corpus::train_test_split(std::move(examples), {a->train_fraction, a->seed}).second;
      const auto probs = eval::predict_examples(ck, examples);
      std::vector<std::string> countries;
      std::vector<int> truths;
      for (const auto& e : examples) {
        countries.push_back(e.country);
        truths.push_back(e.label);
      }
      reports.push_back(eval::build_eval_report(name, model_id, countries, probs, truths));
    }
    json j = json::array();
    std::string text = eval::render_accuracy_table(reports);
    for (const auto& r : reports) {
      j.push_back(r.to_json());
      text += "\n[" + r.dataset_id + "]\n" + eval::render_country_table(r);
    }
    emit(g, j, text);
  });
}

struct PredictArgs {
  std::string model, input;
  std::vector<std::string> texts;
};

void add_predict(CLI::App& app, Globals& g) {
  auto a = std::make_shared<PredictArgs>();
  auto* cmd = app.add_subcommand("predict", "High-peace probability for raw texts");
  cmd->add_option("--model", a->model, "Checkpoint file")->required();
  cmd->add_option("--text", a->texts, "Text to classify (repeatable)");
  cmd->add_option("--input", a->input, "File with one text per line");
  cmd->callback([a, &g] {
    auto texts = a->texts;
    if (!a->input.empty()) {
      std::ifstream in(a->input);
      if (!in) throw std::runtime_error("cannot read " + a->input);
      for (std::string line; std::getline(in, line);)
        if (!line.empty()) texts.push_back(line);
    }
    if (texts.empty()) throw std::runtime_error("nothing to classify; pass --text or --input");
    auto cfg = provider_config(g);
    if (cfg.mode == service::ProviderMode::Mock) cfg.mode = service::ProviderMode::Stub;
    cfg.validate();
    const auto comps = service::build_components(cfg);
    std::vector<embedding::EmbeddingRequest> reqs;
    for (std::size_t i = 0; i < texts.size(); ++i)
      reqs.push_back({std::to_string(i), texts[i], comps.embed_model});
    const auto batch = comps.gateway->embed_batch(reqs);
    if (!batch.errors.empty()) throw std::runtime_error(batch.errors.begin()->second);
    std::vector<corpus::LabeledExample> examples;
    for (std::size_t i = 0; i < texts.size(); ++i)
      examples.push_back({std::to_string(i), batch.vectors.at(std::to_string(i)), 0, "", texts[i]});
    const auto probs = eval::predict_examples(nn::load_checkpoint(a->model), examples);
    json j = json::array();
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const char* label = nn::decide(probs[i]) ? "high" : "low";
      j.push_back({{"text", texts[i]}, {"probability", probs[i]}, {"label", label}});
      os << probs[i] << "  " << label << "  " << texts[i].substr(0, 60) << "\n";
    }
    emit(g, j, os.str());
  });
}

}  // namespace

void add_model_commands(CLI::App& app, Globals& g) {
  add_synth(app, g);
  add_ingest(app, g);
  add_train(app, g);
  add_evaluate(app, g);
  add_predict(app, g);
}

}  // namespace peacelens::cli
