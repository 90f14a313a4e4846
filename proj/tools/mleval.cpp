#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "mleval/embeddings.hpp"
#include "mleval/error.hpp"
#include "mleval/fetch.hpp"
#include "mleval/harness.hpp"
#include "mleval/labelset.hpp"
#include "mleval/text.hpp"
#include "mleval/wmd.hpp"

namespace {

using namespace mleval;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitUpstream = 3;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> comma_list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& part : split(text, ',')) {
    if (auto t = trim(part); !t.empty()) out.push_back(std::move(t));
  }
  return out;
}

struct EvaluateArgs {
  std::string config;
  std::string top_k;
  std::optional<double> threshold;
  std::string embeddings;
  std::string out;
  std::string format;
  std::optional<std::size_t> workers;
  std::string sentence_provider;
  std::string sentence_model;
};

int run_evaluate(const EvaluateArgs& args) {
  auto config = load_run_config(args.config);
  if (!args.top_k.empty()) {
    config.top_ks.clear();
    for (const auto& k : comma_list(args.top_k)) {
      try {
        config.top_ks.push_back(std::stoul(k));
      } catch (const std::exception&) {
        throw Error(Errc::InvalidArgument, "--top-k expects integers, got '" + k + "'");
      }
    }
  }
  if (args.threshold) config.threshold = *args.threshold;
  if (!args.embeddings.empty()) config.embeddings = args.embeddings;
  if (!args.out.empty()) config.output.dir = args.out;
  if (!args.format.empty()) {
    config.output.formats.clear();
    for (const auto& f : comma_list(args.format)) config.output.formats.push_back(parse_report_format(f));
  }
  if (args.workers) config.workers = *args.workers;
  if (!args.sentence_provider.empty()) {
    ProviderConfig provider = config.sentence.value_or(ProviderConfig{});
    if (args.sentence_provider.rfind("http://", 0) == 0 || args.sentence_provider.rfind("https://", 0) == 0) {
      RemoteService remote;
      remote.endpoint = args.sentence_provider;
      provider.mode = remote;
    } else {
      provider.mode = PrecomputedFile{args.sentence_provider};
    }
    config.sentence = provider;
    config.metrics.sentence = true;
  }
  if (!args.sentence_model.empty()) {
    if (!config.sentence) throw Error(Errc::InvalidArgument, "--sentence-model needs a sentence provider");
    config.sentence->model = args.sentence_model;
  }
  if (config.sentence && config.sentence->model.empty()) {
    throw Error(Errc::InvalidArgument, "the sentence provider needs a model name");
  }

  const auto report = run_evaluation(config);
  for (const auto& path : write_report(report, config.output)) std::cout << path.string() << '\n';
  return 0;
}

int run_fetch(const std::string& clients_path, const std::string& images_path, const std::string& cache,
              const std::string& out, const std::vector<std::string>& only, std::size_t workers) {
  auto specs = read_client_specs(clients_path);
  const auto images = read_image_list(images_path);
  std::vector<PredictionRecord> all;
  for (const auto& spec : specs) {
    if (!only.empty() && std::find(only.begin(), only.end(), spec.api_id) == only.end()) continue;
    FetchOptions options;
    options.cache_dir = cache;
    options.workers = workers;
    PredictionFetcher fetcher(spec, options);
    auto records = fetcher.fetch(images);
    spdlog::info("{}: {} image(s), {} upstream request(s)", spec.api_id, records.size(), fetcher.upstream_requests());
    all.insert(all.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
  }
  std::ofstream file;
  if (out != "-") {
    file.open(out);
    if (!file) throw Error(Errc::IoError, "cannot write " + out);
  }
  write_predictions(out == "-" ? std::cout : file, all);
  return 0;
}

int run_wmd(const std::string& embeddings, const std::string& truth, const std::string& predicted) {
  const auto store = load_model(embeddings);
  const auto a = label_bag(comma_list(truth), store);
  const auto b = label_bag(comma_list(predicted), store);
  const auto result = wmd_solve(a, b, store);
  std::printf("%.6f\n", result.distance);
  for (std::size_t i = 0; i < result.truth.tokens.size(); ++i) {
    for (std::size_t j = 0; j < result.predicted.tokens.size(); ++j) {
      const double flow = result.plan.flow(i, j);
      if (flow > 0.0) {
        std::printf("  %s -> %s  %.6f\n", result.truth.tokens[i].display().c_str(),
                    result.predicted.tokens[j].display().c_str(), flow);
      }
    }
  }
  return 0;
}

int run_inspect(const std::string& path, const std::vector<std::string>& tokens) {
  const auto store = load_model(path);
  std::printf("%s: %zu tokens, dimension %zu\n", path.c_str(), store.vocab_size(), store.dim());
  for (const auto& raw : tokens) {
    const auto r = resolve_label(store, raw);
    if (!r.resolved()) {
      std::printf("%s: unknown\n", raw.c_str());
      continue;
    }
    const auto vec = *store.find(*r.token);
    double norm = 0.0;
    for (const float x : vec) norm += static_cast<double>(x) * x;
    std::printf("%s: %s (%s), norm %.6f\n", raw.c_str(), r.token->c_str(),
                std::string(permutation_name(*r.permutation_used)).c_str(),
                std::sqrt(norm));
  }
  return 0;
}

int run_stats(const std::vector<std::string>& prediction_paths, const std::string& embeddings, std::size_t k) {
  const auto store = load_model(embeddings);
  std::map<std::string, std::vector<PredictionRecord>> by_api;
  for (const auto& path : prediction_paths) {
    for (auto& record : read_predictions(path)) by_api[record.api_id].push_back(std::move(record));
  }
  if (by_api.empty()) throw Error(Errc::EmptyInput, "no prediction records");
  std::printf("api_id,images,objects,unknown_objects,unknown_object_rate,mean_labels_per_object\n");
  for (const auto& [api, records] : by_api) {
    const auto s = metadata_stats(records, store, k);
    std::printf("%s,%zu,%zu,%zu,%.3f,%.3f\n", api.c_str(), records.size(), s.objects, s.unknown_objects,
                s.unknown_object_rate, s.mean_labels_per_object);
  }
  return 0;
}

int exit_code_for(const Error& e) {
  if (is_upstream(e.code())) return kExitUpstream;
  if (e.code() == Errc::InvalidArgument) return kExitUsage;
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label image annotation evaluation"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress");

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "Score prediction files against the ground truth");
  evaluate->add_option("config", eval.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--top-k", eval.top_k, "Comma-separated k values, e.g. 1,3,5");
  evaluate->add_option("--threshold", eval.threshold, "Semantic similarity threshold in (0, 1]");
  evaluate->add_option("--embeddings", eval.embeddings, "Word embedding model (.bin binary, otherwise text)");
  evaluate->add_option("--out", eval.out, "Output directory");
  evaluate->add_option("--format", eval.format, "Comma-separated: csv, json_lines, html");
  evaluate->add_option("--workers", eval.workers, "Scoring threads")->check(CLI::PositiveNumber);
  evaluate->add_option("--sentence-provider", eval.sentence_provider,
                       "Precomputed vector file, or an http(s) endpoint");
  evaluate->add_option("--sentence-model", eval.sentence_model, "Sentence embedding model name");

  std::string clients, images, cache = "cache", fetch_out = "-";
  std::vector<std::string> only;
  std::size_t fetch_workers = 4;
  auto* fetch = app.add_subcommand("fetch", "Query tagging APIs for an image list");
  fetch->add_option("clients", clients, "Client specs (JSON)")->required()->check(CLI::ExistingFile);
  fetch->add_option("images", images, "Image list (JSONL of image_id, path)")->required()->check(CLI::ExistingFile);
  fetch->add_option("--cache", cache, "Response cache directory")->capture_default_str();
  fetch->add_option("--out", fetch_out, "Predictions output, - for stdout")->capture_default_str();
  fetch->add_option("--api", only, "Only these api_ids");
  fetch->add_option("--workers", fetch_workers, "Concurrent requests per API")->check(CLI::PositiveNumber);

  std::string wmd_embeddings, wmd_a, wmd_b;
  auto* wmd = app.add_subcommand("wmd", "Word mover's distance between two label lists");
  wmd->add_option("--embeddings", wmd_embeddings, "Word embedding model")->required()->check(CLI::ExistingFile);
  wmd->add_option("truth", wmd_a, "Comma-separated labels")->required();
  wmd->add_option("predicted", wmd_b, "Comma-separated labels")->required();

  std::string inspect_path;
  std::vector<std::string> inspect_tokens;
  auto* inspect = app.add_subcommand("inspect-embeddings", "Show store size and how labels resolve");
  inspect->add_option("path", inspect_path, "Word embedding model")->required()->check(CLI::ExistingFile);
  inspect->add_option("tokens", inspect_tokens, "Labels to resolve");

  std::vector<std::string> stats_predictions;
  std::string stats_embeddings;
  std::size_t stats_k = 5;
  auto* stats = app.add_subcommand("stats", "Unknown-object rate and labels per object, per API");
  stats->add_option("predictions", stats_predictions, "Prediction files")->required()->check(CLI::ExistingFile);
  stats->add_option("--embeddings", stats_embeddings, "Word embedding model")->required()->check(CLI::ExistingFile);
  stats->add_option("--k", stats_k, "Top-k objects per image")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (*evaluate) return run_evaluate(eval);
    if (*fetch) return run_fetch(clients, images, cache, fetch_out, only, fetch_workers);
    if (*wmd) return run_wmd(wmd_embeddings, wmd_a, wmd_b);
    if (*inspect) return run_inspect(inspect_path, inspect_tokens);
    if (*stats) return run_stats(stats_predictions, stats_embeddings, stats_k);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
