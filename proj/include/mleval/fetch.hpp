#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mleval/clock.hpp"
#include "mleval/http.hpp"
#include "mleval/labelset.hpp"

namespace mleval {

// Where the predicted objects sit in a vendor response.
struct ResponseAdapter {
  std::string objects_pointer = "/objects";  // JSON pointer to the object array
  std::string label_field = "labels";        // a string or an array of synonyms
  std::string confidence_field = "confidence";
};

struct ApiClientSpec {
  std::string api_id;
  std::string endpoint;
  std::string auth_env_var;  // empty: no Authorization header
  std::size_t requests_per_period = 1;
  Clock::duration period{1000};
  std::optional<std::size_t> max_total;
  std::chrono::milliseconds timeout{30000};
  ResponseAdapter adapter;
};

void validate(const ApiClientSpec& spec);

// Keys: api_id, endpoint, auth_env_var, requests_per_period, period_ms,
// max_total, timeout_ms, adapter {objects_pointer, label_field, confidence_field}.
ApiClientSpec client_spec_from_json(const nlohmann::json& obj);
// A JSON array of specs, or an object with a "clients" array. api_ids must be unique.
std::vector<ApiClientSpec> read_client_specs(const std::filesystem::path& path);

// At most `limit` acquisitions in any window of length `period`.
class RateLimiter {
 public:
  RateLimiter(std::size_t limit, Clock::duration period, std::shared_ptr<Clock> clock);

  // Sleeps on the clock until a slot is free, takes it and returns the grant time.
  Clock::time_point acquire();

 private:
  std::size_t limit_;
  Clock::duration period_;
  std::shared_ptr<Clock> clock_;
  std::mutex mutex_;
  std::deque<Clock::time_point> issued_;
};

struct ImageRef {
  std::string image_id;
  std::filesystem::path path;
};

// JSONL of {"image_id", "path"}; relative paths resolve against the list's directory.
std::vector<ImageRef> read_image_list(const std::filesystem::path& path);

// Vendor response body -> normalized record.
PredictionRecord normalize_response(const ApiClientSpec& spec, const std::string& image_id, const std::string& body);

struct FetchOptions {
  std::filesystem::path cache_dir;
  std::size_t workers = 4;
  std::size_t attempts = 3;
  Clock::duration backoff{500};  // doubles after every failed attempt
};

class PredictionFetcher {
 public:
  // Throws AuthMissing when auth_env_var names an unset variable.
  PredictionFetcher(ApiClientSpec spec, FetchOptions options, std::shared_ptr<HttpClient> http = nullptr,
                    std::shared_ptr<Clock> clock = nullptr);

  // Records in input order. Cached images cost nothing; every other image is
  // one quota unit, and QuotaExhausted is thrown for the first image beyond
  // max_total.
  std::vector<PredictionRecord> fetch(const std::vector<ImageRef>& images);

  // HTTP requests issued, retries included.
  std::size_t upstream_requests() const;
  // Images that went upstream; this is what max_total limits.
  std::size_t quota_used() const;
  // Rate-limiter grant time of every request issued, in grant order.
  std::vector<Clock::time_point> request_times() const;

  std::filesystem::path cache_file(const std::string& image_digest) const;

 private:
  PredictionRecord fetch_one(const ImageRef& image);
  PredictionRecord request_upstream(const ImageRef& image, const std::string& bytes);

  ApiClientSpec spec_;
  FetchOptions options_;
  std::shared_ptr<HttpClient> http_;
  std::shared_ptr<Clock> clock_;
  RateLimiter limiter_;
  HttpHeaders headers_;
  mutable std::mutex mutex_;
  std::size_t upstream_requests_ = 0;
  std::size_t quota_used_ = 0;
  std::vector<Clock::time_point> request_times_;
};

std::vector<PredictionRecord> fetch_predictions(const ApiClientSpec& spec, const std::vector<ImageRef>& images,
                                                const FetchOptions& options);

}  // namespace mleval
