#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mleval {

enum class Direction { HigherBetter, LowerBetter };

struct MetricColumn {
  std::string id;
  Direction direction = Direction::HigherBetter;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

std::string hex(const Rgb& color);

// Per-row object statistics over the top-k predictions.
struct RowStats {
  std::size_t images = 0;  // images scored for this (api_id, k)
  std::size_t objects = 0;
  std::size_t unknown_objects = 0;
  double unknown_object_rate = 0.0;
  double mean_labels_per_object = 0.0;
  std::size_t wmd_skipped = 0;
  std::size_t sentence_skipped = 0;
};

struct ReportRow {
  std::string api_id;
  std::size_t k = 0;
  std::vector<std::optional<double>> cells;  // one per column
  std::vector<std::optional<std::size_t>> ranks;
  std::vector<std::optional<Rgb>> colors;
  RowStats stats;
};

struct SkipCounts {
  std::size_t unusable_truth = 0;
  std::map<std::string, std::size_t> predictions_without_truth;  // by api_id
  std::map<std::string, std::size_t> truth_without_predictions;  // by api_id
};

struct MetricReport {
  std::vector<MetricColumn> columns;
  std::vector<ReportRow> rows;
  SkipCounts skips;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  nlohmann::json config;

  std::optional<std::size_t> column_index(const std::string& id) const;
};

// Dense ranks and colors per column, computed separately for each k.
// Missing cells get neither. Throws EmptyReport when there are no rows.
void rank_and_colorize(MetricReport& report);

// Green at t = 0 (best), yellow at 0.5, red at 1 (worst).
Rgb gradient_color(double t);

enum class ReportFormat { Csv, JsonLines, Html };

ReportFormat parse_report_format(const std::string& name);
std::string report_format_name(ReportFormat format);

// csv: report_k<k>.csv per k; json_lines: report.jsonl; html: report.html.
// Every call also writes provenance.json. Returns the files written.
std::vector<std::filesystem::path> emit(const MetricReport& report, ReportFormat format,
                                        const std::filesystem::path& out_dir);

std::string to_csv(const MetricReport& report, std::size_t k);
std::string to_json_lines(const MetricReport& report);
std::string to_html(const MetricReport& report);
std::string provenance_json(const MetricReport& report);

// Rows and columns back from to_json_lines output; stats, ranks and colors
// included. Skip counts and provenance are not part of the format.
MetricReport parse_json_lines(const std::string& text);

}  // namespace mleval
