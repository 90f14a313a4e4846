#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mleval/embeddings.hpp"

namespace mleval {

struct GroundTruthRecord {
  std::string image_id;
  std::vector<std::string> labels;  // file order, duplicates kept
  // False when the record carries no labels; the harness skips and counts it.
  bool usable = true;

  bool operator==(const GroundTruthRecord&) const = default;
};

struct PredictedObject {
  std::vector<std::string> synonyms;
  std::optional<double> confidence;

  bool operator==(const PredictedObject&) const = default;
};

struct PredictionRecord {
  std::string image_id;
  std::string api_id;
  std::vector<PredictedObject> objects;

  bool operator==(const PredictionRecord&) const = default;
};

struct EvaluationUnit {
  std::string image_id;
  std::vector<std::string> truth_labels;
  std::vector<PredictedObject> predicted_objects;
};

// A resolved store token or the distinguished Unknown token.
class Token {
 public:
  static Token unknown() { return Token(); }
  static Token word(std::string text) { return Token(std::move(text)); }

  bool is_unknown() const noexcept { return !text_.has_value(); }
  // Precondition: !is_unknown().
  const std::string& text() const { return *text_; }
  std::string display() const { return text_ ? *text_ : std::string("<unknown>"); }

  auto operator<=>(const Token&) const = default;

 private:
  Token() = default;
  explicit Token(std::string text) : text_(std::move(text)) {}
  std::optional<std::string> text_;
};

using LabelBag = std::vector<Token>;

std::vector<GroundTruthRecord> read_ground_truth(const std::filesystem::path& path);
std::vector<GroundTruthRecord> parse_ground_truth(std::istream& in);

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);
std::vector<PredictionRecord> parse_predictions(std::istream& in);

void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& records);
std::string prediction_to_json_line(const PredictionRecord& record);
PredictionRecord prediction_from_json_line(const std::string& line, std::size_t line_no = 1);

// Stable sort by confidence descending (absent confidences last), keep the
// first min(k, n). k == 0 is rejected with InvalidArgument.
PredictionRecord top_k(const PredictionRecord& record, std::size_t k);
std::vector<PredictedObject> top_k(const std::vector<PredictedObject>& objects, std::size_t k);

// Every synonym of every object, in order, resolved against the store.
LabelBag label_bag(const std::vector<PredictedObject>& objects, const EmbeddingStore& store);
// Every truth label, in order, resolved against the store.
LabelBag label_bag(const std::vector<std::string>& truth_labels, const EmbeddingStore& store);

struct MetadataStats {
  double unknown_object_rate = 0.0;
  double mean_labels_per_object = 0.0;
  std::size_t objects = 0;
  std::size_t unknown_objects = 0;
  std::size_t synonyms = 0;
};

// Object-level unknown rate (all synonyms unresolvable) and mean synonym
// count over the top-k objects of every record.
MetadataStats metadata_stats(const std::vector<PredictionRecord>& records, const EmbeddingStore& store,
                             std::size_t k);

}  // namespace mleval
