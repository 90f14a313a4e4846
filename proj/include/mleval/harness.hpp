#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mleval/metrics_semantic.hpp"
#include "mleval/report.hpp"
#include "mleval/sentence_sim.hpp"

namespace mleval {

struct MetricSelection {
  bool exact = true;
  bool semantic = true;
  bool label_based = true;
  bool wmd = true;
  bool sentence = false;  // needs RunConfig::sentence
};

struct OutputSpec {
  std::filesystem::path dir = "report";
  std::vector<ReportFormat> formats{ReportFormat::JsonLines};
};

struct RunConfig {
  std::filesystem::path ground_truth;
  std::vector<std::filesystem::path> predictions;
  std::filesystem::path embeddings;
  std::vector<std::size_t> top_ks{1, 3, 5};
  double threshold = kDefaultSemanticThreshold;
  MetricSelection metrics;
  std::optional<ProviderConfig> sentence;
  OutputSpec output;
  std::size_t workers = 1;
};

void validate(const RunConfig& config);

// JSON document. Relative paths resolve against base_dir. Recognized keys:
// ground_truth, predictions (string or array), embeddings, top_ks, threshold,
// workers, metrics {exact, semantic, label_based, wmd, sentence},
// sentence {precomputed | endpoint, model, batch_size, max_in_flight,
// timeout_ms, max_retries, backoff_ms, cache}, output {dir, formats}.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

// Column ids in report order for the selected metrics.
std::vector<MetricColumn> report_columns(const MetricSelection& metrics);

// Reads every input, scores each api_id x k and returns the ranked report.
// A custom sentence provider replaces the one built from config.sentence.
MetricReport run_evaluation(const RunConfig& config, std::shared_ptr<SentenceProvider> sentence_provider = nullptr);

// Writes every configured format into config.output.dir.
std::vector<std::filesystem::path> write_report(const MetricReport& report, const OutputSpec& output);

}  // namespace mleval
