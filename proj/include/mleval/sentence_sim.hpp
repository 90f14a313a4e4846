#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mleval/clock.hpp"
#include "mleval/http.hpp"
#include "mleval/labelset.hpp"

namespace mleval {

inline constexpr const char* kSentenceEndpointEnv = "MLEVAL_SENTENCE_ENDPOINT";

struct BowProvenance {
  enum class Kind { Truth, Prediction };
  Kind kind = Kind::Truth;
  std::string api_id;  // predictions only
  std::size_t k = 0;   // predictions only
};

struct BowText {
  std::string text;
  BowProvenance provenance;
};

// Truth labels in file order, cleaned, joined by single spaces.
BowText render_bow_text(const std::vector<std::string>& truth_labels);
// Objects in order, each object's synonyms in order.
BowText render_bow_text(const std::vector<PredictedObject>& objects, std::string api_id, std::size_t k);

using SentenceVector = std::vector<double>;

struct PrecomputedFile {
  std::filesystem::path path;
};

struct RemoteService {
  std::string endpoint;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_retries = 3;
  std::chrono::milliseconds backoff{500};  // doubles after every failed attempt
};

struct ProviderConfig {
  std::variant<PrecomputedFile, RemoteService> mode;
  std::string model;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  // Persistent response cache for the remote mode, same record format as a
  // precomputed file.
  std::optional<std::filesystem::path> cache_path;
};

void validate(const ProviderConfig& config);

// Thread-safe (model, text digest) -> vector map. Readers share the lock,
// writers serialize; with a backing file every insert is appended to it.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  // Loads the file when it exists; throws CacheCorrupt on unreadable records.
  // With append_on_put false the file is only read.
  explicit EmbeddingCache(std::filesystem::path backing_file, bool append_on_put = true);

  std::optional<SentenceVector> get(const std::string& model, const std::string& digest) const;
  void put(const std::string& model, const std::string& digest, const SentenceVector& vector);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::string>, SentenceVector> entries_;
  std::optional<std::filesystem::path> backing_file_;
};

// One record line of a precomputed-vector file.
std::string precomputed_record(const std::string& model, const std::string& text, const SentenceVector& vector);

class SentenceProvider {
 public:
  explicit SentenceProvider(ProviderConfig config, std::shared_ptr<HttpClient> http = nullptr,
                            std::shared_ptr<Clock> clock = nullptr);

  // One vector per text, all of equal dimension.
  std::vector<SentenceVector> fetch(const std::vector<std::string>& texts);

  const ProviderConfig& config() const noexcept { return config_; }
  std::size_t upstream_requests() const noexcept { return upstream_requests_; }

 private:
  std::vector<SentenceVector> fetch_remote_batch(const RemoteService& remote, const std::vector<std::string>& texts);

  ProviderConfig config_;
  std::shared_ptr<HttpClient> http_;
  std::shared_ptr<Clock> clock_;
  std::unique_ptr<EmbeddingCache> cache_;
  std::size_t upstream_requests_ = 0;
  std::mutex counter_mutex_;
};

std::vector<SentenceVector> fetch_embeddings(const ProviderConfig& config, const std::vector<std::string>& texts);

double sentence_score(const std::string& truth_text, const std::string& predicted_text, SentenceProvider& provider);

}  // namespace mleval
