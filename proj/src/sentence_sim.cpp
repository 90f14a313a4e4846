#include "mleval/sentence_sim.hpp"

#include <cstdlib>
#include <fstream>
#include <future>
#include <mutex>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mleval/embeddings.hpp"
#include "mleval/error.hpp"
#include "mleval/text.hpp"

namespace mleval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void append_cleaned(std::string& out, const std::string& label) {
  const auto cleaned = clean_label(label);
  if (cleaned.empty()) return;
  if (!out.empty()) out.push_back(' ');
  out += cleaned;
}

}  // namespace

BowText render_bow_text(const std::vector<std::string>& truth_labels) {
  BowText bow;
  for (const auto& label : truth_labels) append_cleaned(bow.text, label);
  if (bow.text.empty()) throw Error(Errc::EmptyBag, "nothing to render for the ground truth");
  return bow;
}

BowText render_bow_text(const std::vector<PredictedObject>& objects, std::string api_id, std::size_t k) {
  BowText bow;
  bow.provenance = {BowProvenance::Kind::Prediction, std::move(api_id), k};
  for (const auto& object : objects) {
    for (const auto& synonym : object.synonyms) append_cleaned(bow.text, synonym);
  }
  if (bow.text.empty()) throw Error(Errc::EmptyBag, "nothing to render for '" + bow.provenance.api_id + "'");
  return bow;
}

void validate(const ProviderConfig& config) {
  if (config.batch_size < 1) throw Error(Errc::InvalidArgument, "sentence provider batch_size must be >= 1");
  if (config.max_in_flight < 1) throw Error(Errc::InvalidArgument, "sentence provider max_in_flight must be >= 1");
  if (const auto* remote = std::get_if<RemoteService>(&config.mode)) {
    if (remote->timeout.count() <= 0) throw Error(Errc::InvalidArgument, "sentence provider timeout must be > 0");
  }
}

namespace {

std::string record_line(const std::string& model, const std::string& digest, const SentenceVector& vector) {
  return json{{"digest", digest}, {"model", model}, {"vector", vector}}.dump();
}

}  // namespace

std::string precomputed_record(const std::string& model, const std::string& text, const SentenceVector& vector) {
  return record_line(model, sha256_hex(text), vector);
}

EmbeddingCache::EmbeddingCache(fs::path backing_file, bool append_on_put) {
  std::ifstream in(backing_file);
  if (append_on_put) backing_file_ = backing_file;
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      auto vector = obj.at("vector").get<SentenceVector>();
      entries_[{obj.at("model").get<std::string>(), obj.at("digest").get<std::string>()}] = std::move(vector);
    } catch (const json::exception& e) {
      throw Error(Errc::CacheCorrupt, backing_file.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::optional<SentenceVector> EmbeddingCache::get(const std::string& model, const std::string& digest) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find({model, digest});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const std::string& model, const std::string& digest, const SentenceVector& vector) {
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign({model, digest}, vector);
  if (!backing_file_) return;
  std::ofstream out(*backing_file_, std::ios::app);
  if (!out) throw Error(Errc::IoError, "cannot append to " + backing_file_->string());
  out << record_line(model, digest, vector) << '\n';
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

SentenceProvider::SentenceProvider(ProviderConfig config, std::shared_ptr<HttpClient> http,
                                   std::shared_ptr<Clock> clock)
    : config_(std::move(config)), http_(std::move(http)), clock_(std::move(clock)) {
  validate(config_);
  if (!http_) http_ = std::make_shared<NetworkHttpClient>();
  if (!clock_) clock_ = std::make_shared<SystemClock>();
  if (auto* remote = std::get_if<RemoteService>(&config_.mode)) {
    if (const char* endpoint = std::getenv(kSentenceEndpointEnv); endpoint && *endpoint) remote->endpoint = endpoint;
    cache_ = config_.cache_path ? std::make_unique<EmbeddingCache>(*config_.cache_path)
                                : std::make_unique<EmbeddingCache>();
  } else {
    const auto& path = std::get<PrecomputedFile>(config_.mode).path;
    if (!fs::exists(path)) throw Error(Errc::ProviderUnavailable, "no precomputed vector file " + path.string());
    cache_ = std::make_unique<EmbeddingCache>(path, false);
  }
}

std::vector<SentenceVector> SentenceProvider::fetch_remote_batch(const RemoteService& remote,
                                                                 const std::vector<std::string>& texts) {
  const std::string body = json{{"model", config_.model}, {"texts", texts}}.dump();
  auto delay = remote.backoff;
  for (std::size_t attempt = 0;; ++attempt) {
    {
      std::lock_guard lock(counter_mutex_);
      ++upstream_requests_;
    }
    const auto response = http_->post(remote.endpoint, {}, body, "application/json", remote.timeout);
    if (response.status == 200) {
      json parsed;
      try {
        parsed = json::parse(response.body);
      } catch (const json::parse_error& e) {
        throw Error(Errc::ProviderUnavailable, std::string("unparseable provider response: ") + e.what());
      }
      const auto vectors = parsed.find("vectors");
      if (vectors == parsed.end() || !vectors->is_array() || vectors->size() != texts.size()) {
        throw Error(Errc::ProviderUnavailable, "provider response lacks one vector per text");
      }
      std::vector<SentenceVector> out;
      out.reserve(texts.size());
      for (const auto& v : *vectors) {
        try {
          out.push_back(v.get<SentenceVector>());
        } catch (const json::exception& e) {
          throw Error(Errc::ProviderUnavailable, std::string("non-numeric vector in provider response: ") + e.what());
        }
        if (out.back().size() != out.front().size() || out.back().empty()) {
          throw Error(Errc::DimensionInconsistent, "provider returned vectors of lengths " +
                                                       std::to_string(out.front().size()) + " and " +
                                                       std::to_string(out.back().size()));
        }
      }
      return out;
    }
    if (!is_transient_status(response.status) || attempt >= remote.max_retries) {
      throw Error(Errc::ProviderUnavailable, remote.endpoint + " answered status " +
                                                 std::to_string(response.status) + " after " +
                                                 std::to_string(attempt + 1) + " attempt(s)");
    }
    spdlog::warn("sentence provider attempt {} failed with status {}; retrying", attempt + 1, response.status);
    clock_->sleep_for(delay);
    delay *= 2;
  }
}

std::vector<SentenceVector> SentenceProvider::fetch(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(Errc::InvalidArgument, "no texts to embed");
  std::vector<std::string> digests;
  digests.reserve(texts.size());
  for (const auto& t : texts) digests.push_back(sha256_hex(t));

  if (const auto* remote = std::get_if<RemoteService>(&config_.mode)) {
    std::vector<std::string> missing;
    std::unordered_map<std::string, bool> queued;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (cache_->get(config_.model, digests[i]) || queued.count(digests[i])) continue;
      queued[digests[i]] = true;
      missing.push_back(texts[i]);
    }
    std::vector<std::vector<std::string>> batches;
    for (std::size_t start = 0; start < missing.size(); start += config_.batch_size) {
      const auto end = std::min(missing.size(), start + config_.batch_size);
      batches.emplace_back(missing.begin() + static_cast<std::ptrdiff_t>(start),
                           missing.begin() + static_cast<std::ptrdiff_t>(end));
    }
    for (std::size_t wave = 0; wave < batches.size(); wave += config_.max_in_flight) {
      const auto wave_end = std::min(batches.size(), wave + config_.max_in_flight);
      std::vector<std::future<std::vector<SentenceVector>>> inflight;
      for (std::size_t b = wave; b < wave_end; ++b) {
        inflight.push_back(std::async(std::launch::async,
                                      [this, remote, &batches, b] { return fetch_remote_batch(*remote, batches[b]); }));
      }
      for (std::size_t b = wave; b < wave_end; ++b) {
        const auto vectors = inflight[b - wave].get();
        for (std::size_t t = 0; t < batches[b].size(); ++t) {
          cache_->put(config_.model, sha256_hex(batches[b][t]), vectors[t]);
        }
      }
    }
  }

  std::vector<SentenceVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto vector = cache_->get(config_.model, digests[i]);
    if (!vector) {
      throw Error(Errc::ProviderUnavailable,
                  "no vector for text digest " + digests[i] + " under model '" + config_.model + "'");
    }
    if (!out.empty() && vector->size() != out.front().size()) {
      throw Error(Errc::DimensionInconsistent, "vectors of lengths " + std::to_string(out.front().size()) + " and " +
                                                   std::to_string(vector->size()));
    }
    out.push_back(std::move(*vector));
  }
  return out;
}

std::vector<SentenceVector> fetch_embeddings(const ProviderConfig& config, const std::vector<std::string>& texts) {
  SentenceProvider provider(config);
  return provider.fetch(texts);
}

double sentence_score(const std::string& truth_text, const std::string& predicted_text, SentenceProvider& provider) {
  const auto vectors = provider.fetch({truth_text, predicted_text});
  return cosine(std::span<const double>(vectors[0]), std::span<const double>(vectors[1]));
}

}  // namespace mleval
