#include "mleval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "mleval/embeddings.hpp"
#include "mleval/error.hpp"
#include "mleval/labelset.hpp"
#include "mleval/metrics_bipartition.hpp"
#include "mleval/text.hpp"
#include "mleval/wmd.hpp"

namespace mleval {

namespace fs = std::filesystem;
using nlohmann::json;

void validate(const RunConfig& config) {
  if (config.top_ks.empty()) throw Error(Errc::InvalidArgument, "top_ks must not be empty");
  for (const auto k : config.top_ks) {
    if (k < 1) throw Error(Errc::InvalidArgument, "every top-k must be >= 1");
  }
  if (std::set<std::size_t>(config.top_ks.begin(), config.top_ks.end()).size() != config.top_ks.size()) {
    throw Error(Errc::InvalidArgument, "top_ks lists a value twice");
  }
  if (!(config.threshold > 0.0 && config.threshold <= 1.0)) {
    throw Error(Errc::InvalidArgument, "threshold must lie in (0, 1], got " + std::to_string(config.threshold));
  }
  if (config.predictions.empty()) throw Error(Errc::InvalidArgument, "no prediction files configured");
  if (config.workers < 1) throw Error(Errc::InvalidArgument, "workers must be >= 1");
  if (config.output.formats.empty()) throw Error(Errc::InvalidArgument, "no output format selected");
  if (config.sentence) validate(*config.sentence);
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_relative() ? base / path : path;
}

ProviderConfig sentence_from_json(const json& obj, const fs::path& base) {
  ProviderConfig config;
  if (obj.contains("precomputed")) {
    config.mode = PrecomputedFile{resolve(base, obj["precomputed"].get<std::string>())};
  } else if (obj.contains("endpoint")) {
    RemoteService remote;
    remote.endpoint = obj["endpoint"].get<std::string>();
    remote.timeout = std::chrono::milliseconds(obj.value("timeout_ms", remote.timeout.count()));
    remote.max_retries = obj.value("max_retries", remote.max_retries);
    remote.backoff = std::chrono::milliseconds(obj.value("backoff_ms", remote.backoff.count()));
    config.mode = remote;
  } else {
    throw Error(Errc::InvalidArgument, "sentence block needs 'precomputed' or 'endpoint'");
  }
  config.model = obj.at("model").get<std::string>();
  config.batch_size = obj.value("batch_size", config.batch_size);
  config.max_in_flight = obj.value("max_in_flight", config.max_in_flight);
  if (obj.contains("cache")) config.cache_path = resolve(base, obj["cache"].get<std::string>());
  return config;
}

}  // namespace

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  RunConfig config;
  try {
    config.ground_truth = resolve(base_dir, doc.at("ground_truth").get<std::string>());
    const auto& preds = doc.at("predictions");
    if (preds.is_string()) {
      config.predictions.push_back(resolve(base_dir, preds.get<std::string>()));
    } else {
      for (const auto& p : preds) config.predictions.push_back(resolve(base_dir, p.get<std::string>()));
    }
    config.embeddings = resolve(base_dir, doc.at("embeddings").get<std::string>());
    if (doc.contains("top_ks")) config.top_ks = doc["top_ks"].get<std::vector<std::size_t>>();
    config.threshold = doc.value("threshold", config.threshold);
    config.workers = doc.value("workers", config.workers);
    if (doc.contains("sentence")) {
      config.sentence = sentence_from_json(doc["sentence"], base_dir);
      config.metrics.sentence = true;
    }
    if (const auto m = doc.find("metrics"); m != doc.end()) {
      config.metrics.exact = m->value("exact", config.metrics.exact);
      config.metrics.semantic = m->value("semantic", config.metrics.semantic);
      config.metrics.label_based = m->value("label_based", config.metrics.label_based);
      config.metrics.wmd = m->value("wmd", config.metrics.wmd);
      config.metrics.sentence = m->value("sentence", config.metrics.sentence);
    }
    if (const auto o = doc.find("output"); o != doc.end()) {
      if (o->contains("dir")) config.output.dir = resolve(base_dir, (*o)["dir"].get<std::string>());
      if (o->contains("formats")) {
        config.output.formats.clear();
        for (const auto& f : (*o)["formats"]) config.output.formats.push_back(parse_report_format(f.get<std::string>()));
      }
    } else {
      config.output.dir = base_dir / config.output.dir;
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("run config: ") + e.what());
  }
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  return run_config_from_json(doc, path.parent_path());
}

json to_json(const RunConfig& config) {
  json doc;
  doc["ground_truth"] = config.ground_truth.generic_string();
  doc["predictions"] = json::array();
  for (const auto& p : config.predictions) doc["predictions"].push_back(p.generic_string());
  doc["embeddings"] = config.embeddings.generic_string();
  doc["top_ks"] = config.top_ks;
  doc["threshold"] = config.threshold;
  doc["workers"] = config.workers;
  doc["metrics"] = {{"exact", config.metrics.exact},
                    {"semantic", config.metrics.semantic},
                    {"label_based", config.metrics.label_based},
                    {"wmd", config.metrics.wmd},
                    {"sentence", config.metrics.sentence}};
  if (config.sentence) {
    json s{{"model", config.sentence->model},
           {"batch_size", config.sentence->batch_size},
           {"max_in_flight", config.sentence->max_in_flight}};
    if (const auto* file = std::get_if<PrecomputedFile>(&config.sentence->mode)) {
      s["precomputed"] = file->path.generic_string();
    } else {
      const auto& remote = std::get<RemoteService>(config.sentence->mode);
      s["endpoint"] = remote.endpoint;
      s["timeout_ms"] = remote.timeout.count();
      s["max_retries"] = remote.max_retries;
      s["backoff_ms"] = remote.backoff.count();
    }
    if (config.sentence->cache_path) s["cache"] = config.sentence->cache_path->generic_string();
    doc["sentence"] = s;
  }
  json formats = json::array();
  for (const auto f : config.output.formats) formats.push_back(report_format_name(f));
  doc["output"] = {{"dir", config.output.dir.generic_string()}, {"formats", formats}};
  return doc;
}

std::vector<MetricColumn> report_columns(const MetricSelection& metrics) {
  std::vector<MetricColumn> cols;
  const auto add = [&](std::initializer_list<const char*> ids, Direction d = Direction::HigherBetter) {
    for (const auto* id : ids) cols.push_back({id, d});
  };
  if (metrics.exact) add({"exact_accuracy", "exact_precision", "exact_recall", "exact_f1"});
  if (metrics.semantic) add({"semantic_accuracy", "semantic_precision", "semantic_recall", "semantic_f1"});
  if (metrics.label_based) {
    add({"macro_precision", "macro_recall", "macro_f1", "micro_precision", "micro_recall", "micro_f1"});
  }
  if (metrics.wmd) add({"wmd"}, Direction::LowerBetter);
  if (metrics.sentence) add({"sentence"});
  return cols;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto work = [&] {
    while (!stop) {
      const auto i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };
  const auto threads = std::min(workers, n);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return sha256_hex(bytes);
}

struct TruthImage {
  std::string image_id;
  std::vector<std::string> raw_labels;
  std::vector<std::string> labels;  // deduplicated, cleaned
};

struct ApiData {
  std::map<std::string, std::vector<PredictedObject>> by_image;
  std::vector<const TruthImage*> scored;  // natural image order
};

struct KResult {
  ExampleScores exact;
  ExampleScores semantic;
  std::optional<double> wmd;
  std::optional<double> sentence;
};

struct Task {
  std::string api_id;
  const TruthImage* truth = nullptr;
  const std::vector<PredictedObject>* objects = nullptr;
  std::vector<KResult> per_k;  // parallel to config.top_ks
};

double mean_in_order(const std::vector<double>& values) {
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

MetricReport run_evaluation(const RunConfig& config, std::shared_ptr<SentenceProvider> sentence_provider) {
  validate(config);
  if (config.metrics.sentence && !config.sentence && !sentence_provider) {
    throw Error(Errc::InvalidArgument, "sentence scores requested without a sentence provider");
  }

  MetricReport report;
  report.columns = report_columns(config.metrics);
  report.config = to_json(config);
  report.input_digests[config.ground_truth.generic_string()] = file_digest(config.ground_truth);
  report.input_digests[config.embeddings.generic_string()] = file_digest(config.embeddings);
  for (const auto& p : config.predictions) report.input_digests[p.generic_string()] = file_digest(p);

  const auto store = load_model(config.embeddings);

  std::vector<TruthImage> truth;
  std::set<std::string> unusable;
  for (auto& record : read_ground_truth(config.ground_truth)) {
    auto labels = record.usable ? dedup_truth(record.labels) : std::vector<std::string>{};
    if (labels.empty()) {
      ++report.skips.unusable_truth;
      unusable.insert(record.image_id);
      continue;
    }
    truth.push_back({record.image_id, std::move(record.labels), std::move(labels)});
  }
  std::sort(truth.begin(), truth.end(),
            [](const TruthImage& a, const TruthImage& b) { return natural_less(a.image_id, b.image_id); });
  if (report.skips.unusable_truth) spdlog::warn("skipped {} ground-truth image(s) without labels", report.skips.unusable_truth);
  std::unordered_map<std::string, const TruthImage*> truth_index;
  std::vector<std::string> label_space;
  for (const auto& t : truth) {
    truth_index.emplace(t.image_id, &t);
    label_space.insert(label_space.end(), t.labels.begin(), t.labels.end());
  }

  std::map<std::string, ApiData> apis;
  for (const auto& path : config.predictions) {
    for (auto& record : read_predictions(path)) {
      auto& api = apis[record.api_id];
      if (api.by_image.count(record.image_id)) {
        throw Error(Errc::DuplicateImage, "api '" + record.api_id + "' predicts image '" + record.image_id + "' twice");
      }
      if (!truth_index.count(record.image_id)) {
        if (!unusable.count(record.image_id)) ++report.skips.predictions_without_truth[record.api_id];
        api.by_image.emplace(record.image_id, std::vector<PredictedObject>{});  // duplicate detection only
        continue;
      }
      api.by_image.emplace(record.image_id, std::move(record.objects));
    }
  }
  if (apis.empty()) throw Error(Errc::EmptyDataset, "no predictions to evaluate");

  std::vector<Task> tasks;
  for (auto& [api_id, api] : apis) {
    for (const auto& t : truth) {
      const auto it = api.by_image.find(t.image_id);
      if (it == api.by_image.end()) {
        ++report.skips.truth_without_predictions[api_id];
        continue;
      }
      api.scored.push_back(&t);
      tasks.push_back({api_id, &t, &it->second, {}});
    }
    if (api.scored.empty()) throw Error(Errc::EmptyDataset, "api '" + api_id + "' has no image with usable ground truth");
    if (const auto n = report.skips.predictions_without_truth[api_id]) {
      spdlog::warn("{}: skipped {} prediction(s) for images missing from the ground truth", api_id, n);
    }
  }

  // All sentence vectors are fetched up front so the scoring below never
  // touches the provider.
  std::unordered_map<std::string, SentenceVector> sentence_vectors;
  if (config.metrics.sentence) {
    if (!sentence_provider) sentence_provider = std::make_shared<SentenceProvider>(*config.sentence);
    std::vector<std::string> texts;
    std::set<std::string> seen;
    const auto want = [&](const std::string& text) {
      if (seen.insert(text).second) texts.push_back(text);
    };
    for (const auto& t : truth) want(render_bow_text(t.raw_labels).text);
    for (const auto& task : tasks) {
      for (const auto k : config.top_ks) {
        const auto objects = top_k(*task.objects, k);
        if (!objects.empty()) want(render_bow_text(objects, task.api_id, k).text);
      }
    }
    const auto vectors = sentence_provider->fetch(texts);
    for (std::size_t i = 0; i < texts.size(); ++i) sentence_vectors.emplace(texts[i], vectors[i]);
  }

  parallel_for(tasks.size(), config.workers, [&](std::size_t i) {
    auto& task = tasks[i];
    const auto& labels = task.truth->labels;
    try {
      const auto truth_bag = config.metrics.wmd ? label_bag(labels, store) : LabelBag{};
      const auto truth_text =
          config.metrics.sentence ? render_bow_text(task.truth->raw_labels).text : std::string();
      for (const auto k : config.top_ks) {
        const auto objects = top_k(*task.objects, k);
        KResult r;
        if (config.metrics.exact) {
          r.exact = scores_from_counts(exact_intersection(labels, objects).matched, labels.size(), objects.size());
        }
        if (config.metrics.semantic) r.semantic = semantic_example_scores(labels, objects, store, config.threshold);
        if (config.metrics.wmd) {
          const auto predicted_bag = label_bag(objects, store);
          if (!truth_bag.empty() && !predicted_bag.empty()) r.wmd = wmd_pair(truth_bag, predicted_bag, store);
        }
        if (config.metrics.sentence && !objects.empty()) {
          const auto& a = sentence_vectors.at(truth_text);
          const auto& b = sentence_vectors.at(render_bow_text(objects, task.api_id, k).text);
          r.sentence = cosine(std::span<const double>(a), std::span<const double>(b));
        }
        task.per_k.push_back(r);
      }
    } catch (const Error& e) {
      throw Error(e.code(), "api '" + task.api_id + "' image '" + task.truth->image_id + "': " + e.detail());
    }
  });

  for (std::size_t ki = 0; ki < config.top_ks.size(); ++ki) {
    const auto k = config.top_ks[ki];
    std::size_t t = 0;
    for (const auto& [api_id, api] : apis) {
      std::vector<ImageScores> exact, semantic;
      std::vector<double> wmd, sentence;
      ConfusionLedger ledger(label_space);
      std::vector<PredictionRecord> records;
      ReportRow row;
      row.api_id = api_id;
      row.k = k;
      for (; t < tasks.size() && tasks[t].api_id == api_id; ++t) {
        const auto& task = tasks[t];
        const auto& r = task.per_k[ki];
        exact.push_back({task.truth->image_id, r.exact});
        semantic.push_back({task.truth->image_id, r.semantic});
        if (r.wmd) {
          wmd.push_back(*r.wmd);
        } else {
          ++row.stats.wmd_skipped;
        }
        if (r.sentence) {
          sentence.push_back(*r.sentence);
        } else {
          ++row.stats.sentence_skipped;
        }
        const auto objects = top_k(*task.objects, k);
        if (config.metrics.label_based) ledger.accumulate(task.truth->labels, objects);
        records.push_back({task.truth->image_id, api_id, objects});
      }
      const auto push = [&](const ExampleScores& s) {
        row.cells.insert(row.cells.end(), {s.accuracy, s.precision, s.recall, s.f1});
      };
      if (config.metrics.exact) push(mean_example_scores(std::move(exact)));
      if (config.metrics.semantic) push(mean_example_scores(std::move(semantic)));
      if (config.metrics.label_based) {
        const auto lb = label_based_scores(ledger);
        row.cells.insert(row.cells.end(), {lb.macro_precision, lb.macro_recall, lb.macro_f1, lb.micro_precision,
                                           lb.micro_recall, lb.micro_f1});
      }
      if (config.metrics.wmd) {
        row.cells.push_back(wmd.empty() ? std::nullopt : std::optional<double>(mean_in_order(wmd)));
      }
      if (config.metrics.sentence) {
        row.cells.push_back(sentence.empty() ? std::nullopt : std::optional<double>(mean_in_order(sentence)));
      }
      if (!config.metrics.wmd) row.stats.wmd_skipped = 0;
      if (!config.metrics.sentence) row.stats.sentence_skipped = 0;
      row.stats.images = records.size();
      if (std::any_of(records.begin(), records.end(), [](const auto& r) { return !r.objects.empty(); })) {
        const auto stats = metadata_stats(records, store, k);
        row.stats.objects = stats.objects;
        row.stats.unknown_objects = stats.unknown_objects;
        row.stats.unknown_object_rate = stats.unknown_object_rate;
        row.stats.mean_labels_per_object = stats.mean_labels_per_object;
      }
      report.rows.push_back(std::move(row));
    }
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return a.k != b.k ? a.k < b.k : a.api_id < b.api_id;
  });
  rank_and_colorize(report);
  return report;
}

std::vector<fs::path> write_report(const MetricReport& report, const OutputSpec& output) {
  std::vector<fs::path> written;
  for (const auto format : output.formats) {
    for (auto& p : emit(report, format, output.dir)) {
      if (std::find(written.begin(), written.end(), p) == written.end()) written.push_back(std::move(p));
    }
  }
  return written;
}

}  // namespace mleval
