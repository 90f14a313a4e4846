#include "mleval/labelset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mleval/error.hpp"

namespace mleval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": " + what);
}

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    parse_fail(line_no, e.what());
  }
}

std::string require_string(const json& obj, const char* field, std::size_t line_no) {
  const auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) parse_fail(line_no, std::string("missing text field '") + field + "'");
  auto value = it->get<std::string>();
  if (value.empty()) parse_fail(line_no, std::string("empty field '") + field + "'");
  return value;
}

std::vector<std::string> require_string_array(const json& obj, const char* field, std::size_t line_no) {
  const auto it = obj.find(field);
  if (it == obj.end() || !it->is_array()) parse_fail(line_no, std::string("missing array field '") + field + "'");
  std::vector<std::string> values;
  values.reserve(it->size());
  for (const auto& item : *it) {
    if (!item.is_string()) parse_fail(line_no, std::string("non-text entry in '") + field + "'");
    values.push_back(item.get<std::string>());
  }
  return values;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(line, line_no);
  }
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<GroundTruthRecord> parse_ground_truth(std::istream& in) {
  std::vector<GroundTruthRecord> records;
  std::unordered_set<std::string> seen;
  for_each_line(in, [&](const std::string& line, std::size_t line_no) {
    const json obj = parse_line(line, line_no);
    if (!obj.is_object()) parse_fail(line_no, "expected an object");
    GroundTruthRecord record;
    record.image_id = require_string(obj, "image_id", line_no);
    record.labels = require_string_array(obj, "labels", line_no);
    if (!seen.insert(record.image_id).second) throw Error(Errc::DuplicateImage, record.image_id);
    if (record.labels.empty()) {
      spdlog::warn("ground truth image '{}' has no labels; it will be skipped", record.image_id);
      record.usable = false;
    }
    records.push_back(std::move(record));
  });
  return records;
}

std::vector<GroundTruthRecord> read_ground_truth(const fs::path& path) {
  auto in = open_input(path);
  return parse_ground_truth(in);
}

PredictionRecord prediction_from_json_line(const std::string& line, std::size_t line_no) {
  const json obj = parse_line(line, line_no);
  if (!obj.is_object()) parse_fail(line_no, "expected an object");
  PredictionRecord record;
  record.image_id = require_string(obj, "image_id", line_no);
  record.api_id = require_string(obj, "api_id", line_no);
  const auto objects = obj.find("objects");
  if (objects == obj.end() || !objects->is_array()) parse_fail(line_no, "missing array field 'objects'");
  for (const auto& item : *objects) {
    if (!item.is_object()) parse_fail(line_no, "object entry is not an object");
    PredictedObject object;
    object.synonyms = require_string_array(item, "labels", line_no);
    if (object.synonyms.empty()) parse_fail(line_no, "object with no labels");
    if (const auto conf = item.find("confidence"); conf != item.end() && !conf->is_null()) {
      if (!conf->is_number()) parse_fail(line_no, "non-numeric confidence");
      const double value = conf->get<double>();
      if (!(value >= 0.0 && value <= 1.0)) {
        throw Error(Errc::BadConfidence, std::to_string(value) + " on line " + std::to_string(line_no));
      }
      object.confidence = value;
    }
    record.objects.push_back(std::move(object));
  }
  return record;
}

std::vector<PredictionRecord> parse_predictions(std::istream& in) {
  std::vector<PredictionRecord> records;
  for_each_line(in, [&](const std::string& line, std::size_t line_no) {
    records.push_back(prediction_from_json_line(line, line_no));
  });
  return records;
}

std::vector<PredictionRecord> read_predictions(const fs::path& path) {
  auto in = open_input(path);
  return parse_predictions(in);
}

std::string prediction_to_json_line(const PredictionRecord& record) {
  json objects = json::array();
  for (const auto& object : record.objects) {
    json item = {{"labels", object.synonyms}};
    if (object.confidence) item["confidence"] = *object.confidence;
    objects.push_back(std::move(item));
  }
  const json obj = {{"image_id", record.image_id}, {"api_id", record.api_id}, {"objects", std::move(objects)}};
  return obj.dump();
}

void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& records) {
  for (const auto& record : records) out << prediction_to_json_line(record) << '\n';
}

std::vector<PredictedObject> top_k(const std::vector<PredictedObject>& objects, std::size_t k) {
  if (k == 0) throw Error(Errc::InvalidArgument, "top-k requires k >= 1");
  std::vector<PredictedObject> sorted = objects;
  std::stable_sort(sorted.begin(), sorted.end(), [](const PredictedObject& a, const PredictedObject& b) {
    if (a.confidence && b.confidence) return *a.confidence > *b.confidence;
    return a.confidence.has_value() && !b.confidence.has_value();
  });
  if (sorted.size() > k) sorted.resize(k);
  return sorted;
}

PredictionRecord top_k(const PredictionRecord& record, std::size_t k) {
  return PredictionRecord{record.image_id, record.api_id, top_k(record.objects, k)};
}

namespace {

Token resolve_token(const EmbeddingStore& store, const std::string& label) {
  auto resolution = resolve_label(store, label);
  return resolution.token ? Token::word(std::move(*resolution.token)) : Token::unknown();
}

}  // namespace

LabelBag label_bag(const std::vector<PredictedObject>& objects, const EmbeddingStore& store) {
  LabelBag bag;
  for (const auto& object : objects) {
    for (const auto& synonym : object.synonyms) bag.push_back(resolve_token(store, synonym));
  }
  return bag;
}

LabelBag label_bag(const std::vector<std::string>& truth_labels, const EmbeddingStore& store) {
  LabelBag bag;
  bag.reserve(truth_labels.size());
  for (const auto& label : truth_labels) bag.push_back(resolve_token(store, label));
  return bag;
}

MetadataStats metadata_stats(const std::vector<PredictionRecord>& records, const EmbeddingStore& store,
                             std::size_t k) {
  MetadataStats stats;
  for (const auto& record : records) {
    for (const auto& object : top_k(record.objects, k)) {
      ++stats.objects;
      stats.synonyms += object.synonyms.size();
      const bool all_unknown = std::none_of(object.synonyms.begin(), object.synonyms.end(),
                                            [&](const std::string& s) { return resolve_label(store, s).resolved(); });
      if (all_unknown) ++stats.unknown_objects;
    }
  }
  if (stats.objects == 0) throw Error(Errc::EmptyInput, "no predicted objects among the top-" + std::to_string(k));
  stats.unknown_object_rate = static_cast<double>(stats.unknown_objects) / static_cast<double>(stats.objects);
  stats.mean_labels_per_object = static_cast<double>(stats.synonyms) / static_cast<double>(stats.objects);
  return stats;
}

}  // namespace mleval
