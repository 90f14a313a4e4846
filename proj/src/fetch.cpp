#include "mleval/fetch.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "mleval/error.hpp"
#include "mleval/text.hpp"

namespace mleval {

namespace fs = std::filesystem;
using nlohmann::json;

void validate(const ApiClientSpec& spec) {
  if (spec.api_id.empty()) throw Error(Errc::InvalidArgument, "client spec without api_id");
  if (spec.endpoint.empty()) throw Error(Errc::InvalidArgument, "client '" + spec.api_id + "' has no endpoint");
  if (spec.requests_per_period < 1) {
    throw Error(Errc::InvalidArgument, "client '" + spec.api_id + "': requests_per_period must be >= 1");
  }
  if (spec.period.count() <= 0) throw Error(Errc::InvalidArgument, "client '" + spec.api_id + "': period must be > 0");
}

ApiClientSpec client_spec_from_json(const json& obj) {
  ApiClientSpec spec;
  try {
    spec.api_id = obj.at("api_id").get<std::string>();
    spec.endpoint = obj.at("endpoint").get<std::string>();
    spec.auth_env_var = obj.value("auth_env_var", std::string());
    spec.requests_per_period = obj.value("requests_per_period", std::size_t{1});
    spec.period = Clock::duration(obj.value("period_ms", std::int64_t{1000}));
    if (obj.contains("max_total") && !obj["max_total"].is_null()) spec.max_total = obj["max_total"].get<std::size_t>();
    spec.timeout = std::chrono::milliseconds(obj.value("timeout_ms", std::int64_t{30000}));
    if (const auto a = obj.find("adapter"); a != obj.end()) {
      spec.adapter.objects_pointer = a->value("objects_pointer", spec.adapter.objects_pointer);
      spec.adapter.label_field = a->value("label_field", spec.adapter.label_field);
      spec.adapter.confidence_field = a->value("confidence_field", spec.adapter.confidence_field);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("client spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

std::vector<ApiClientSpec> read_client_specs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  const json& list = doc.is_object() && doc.contains("clients") ? doc["clients"] : doc;
  if (!list.is_array()) throw Error(Errc::ParseError, path.string() + ": expected an array of client specs");
  std::vector<ApiClientSpec> specs;
  std::set<std::string> seen;
  for (const auto& item : list) {
    specs.push_back(client_spec_from_json(item));
    if (!seen.insert(specs.back().api_id).second) {
      throw Error(Errc::InvalidArgument, "duplicate api_id '" + specs.back().api_id + "'");
    }
  }
  return specs;
}

RateLimiter::RateLimiter(std::size_t limit, Clock::duration period, std::shared_ptr<Clock> clock)
    : limit_(limit), period_(period), clock_(std::move(clock)) {
  if (limit_ < 1) throw Error(Errc::InvalidArgument, "rate limit must be >= 1");
}

Clock::time_point RateLimiter::acquire() {
  // The lock is held while sleeping so waiters are served in turn.
  std::lock_guard lock(mutex_);
  for (;;) {
    const auto now = clock_->now();
    while (!issued_.empty() && issued_.front() + period_ <= now) issued_.pop_front();
    if (issued_.size() < limit_) {
      issued_.push_back(now);
      return now;
    }
    clock_->sleep_for(issued_.front() + period_ - now);
  }
}

std::vector<ImageRef> read_image_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  const auto base = path.parent_path();
  std::vector<ImageRef> images;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ImageRef ref;
    try {
      const auto obj = json::parse(line);
      ref.image_id = obj.at("image_id").get<std::string>();
      ref.path = obj.at("path").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(Errc::ParseError, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (ref.path.is_relative()) ref.path = base / ref.path;
    if (!seen.insert(ref.image_id).second) throw Error(Errc::DuplicateImage, "image '" + ref.image_id + "' listed twice");
    images.push_back(std::move(ref));
  }
  return images;
}

PredictionRecord normalize_response(const ApiClientSpec& spec, const std::string& image_id, const std::string& body) {
  PredictionRecord record{image_id, spec.api_id, {}};
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::UpstreamError, spec.api_id + " sent an unparseable body for '" + image_id + "': " + e.what());
  }
  const auto fail = [&](const std::string& what) {
    throw Error(Errc::UpstreamError, spec.api_id + " response for '" + image_id + "': " + what);
  };
  const json* objects = nullptr;
  try {
    objects = &doc.at(json::json_pointer(spec.adapter.objects_pointer));
  } catch (const json::exception&) {
    fail("nothing at " + spec.adapter.objects_pointer);
  }
  if (!objects->is_array()) fail(spec.adapter.objects_pointer + " is not an array");
  for (const auto& item : *objects) {
    PredictedObject object;
    const auto label = item.find(spec.adapter.label_field);
    if (label == item.end()) fail("object without '" + spec.adapter.label_field + "'");
    if (label->is_string()) {
      object.synonyms.push_back(label->get<std::string>());
    } else if (label->is_array()) {
      for (const auto& s : *label) {
        if (!s.is_string()) fail("non-string synonym");
        object.synonyms.push_back(s.get<std::string>());
      }
    }
    if (object.synonyms.empty()) fail("object without labels");
    const auto confidence = item.find(spec.adapter.confidence_field);
    if (confidence != item.end() && !confidence->is_null()) {
      if (!confidence->is_number()) fail("non-numeric confidence");
      const double c = confidence->get<double>();
      if (!(c >= 0.0 && c <= 1.0)) {
        throw Error(Errc::BadConfidence, spec.api_id + " response for '" + image_id + "': confidence " +
                                             std::to_string(c) + " outside [0, 1]");
      }
      object.confidence = c;
    }
    record.objects.push_back(std::move(object));
  }
  return record;
}

PredictionFetcher::PredictionFetcher(ApiClientSpec spec, FetchOptions options, std::shared_ptr<HttpClient> http,
                                     std::shared_ptr<Clock> clock)
    : spec_(std::move(spec)),
      options_(std::move(options)),
      http_(http ? std::move(http) : std::make_shared<NetworkHttpClient>()),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()),
      limiter_(spec_.requests_per_period, spec_.period, clock_) {
  validate(spec_);
  if (options_.attempts < 1) throw Error(Errc::InvalidArgument, "attempts must be >= 1");
  if (!spec_.auth_env_var.empty()) {
    const char* token = std::getenv(spec_.auth_env_var.c_str());
    if (!token || !*token) {
      throw Error(Errc::AuthMissing, "environment variable " + spec_.auth_env_var + " is not set for '" +
                                         spec_.api_id + "'");
    }
    headers_.emplace_back("Authorization", std::string("Bearer ") + token);
  }
}

fs::path PredictionFetcher::cache_file(const std::string& image_digest) const {
  return options_.cache_dir / spec_.api_id / (image_digest + ".json");
}

std::size_t PredictionFetcher::upstream_requests() const {
  std::lock_guard lock(mutex_);
  return upstream_requests_;
}

std::size_t PredictionFetcher::quota_used() const {
  std::lock_guard lock(mutex_);
  return quota_used_;
}

std::vector<Clock::time_point> PredictionFetcher::request_times() const {
  std::lock_guard lock(mutex_);
  return request_times_;
}

PredictionRecord PredictionFetcher::request_upstream(const ImageRef& image, const std::string& bytes) {
  auto delay = options_.backoff;
  for (std::size_t attempt = 1;; ++attempt) {
    const auto granted = limiter_.acquire();
    {
      std::lock_guard lock(mutex_);
      ++upstream_requests_;
      request_times_.push_back(granted);
    }
    const auto response = http_->post(spec_.endpoint, headers_, bytes, "application/octet-stream", spec_.timeout);
    if (response.status >= 200 && response.status < 300) return normalize_response(spec_, image.image_id, response.body);
    if (!is_transient_status(response.status) || attempt >= options_.attempts) {
      throw Error(Errc::UpstreamError, spec_.api_id + " answered status " + std::to_string(response.status) +
                                           " for '" + image.image_id + "'");
    }
    spdlog::warn("{}: attempt {} for '{}' failed with status {}; retrying", spec_.api_id, attempt, image.image_id,
                 response.status);
    clock_->sleep_for(delay);
    delay *= 2;
  }
}

PredictionRecord PredictionFetcher::fetch_one(const ImageRef& image) {
  std::ifstream in(image.path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read image " + image.path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto path = cache_file(sha256_hex(bytes));

  if (std::ifstream cached(path); cached) {
    std::string line;
    std::getline(cached, line);
    try {
      auto record = prediction_from_json_line(line);
      if (record.api_id != spec_.api_id) throw Error(Errc::ParseError, "api_id differs");
      record.image_id = image.image_id;
      return record;
    } catch (const Error& e) {
      throw Error(Errc::CacheCorrupt, path.string() + ": " + e.detail());
    }
  }

  {
    std::lock_guard lock(mutex_);
    if (spec_.max_total && quota_used_ >= *spec_.max_total) {
      throw Error(Errc::QuotaExhausted, spec_.api_id + " allows " + std::to_string(*spec_.max_total) +
                                            " requests; '" + image.image_id + "' would exceed it");
    }
    ++quota_used_;
  }
  auto record = request_upstream(image, bytes);

  std::lock_guard lock(mutex_);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  const auto tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out << prediction_to_json_line(record) << '\n';
    if (!out) throw Error(Errc::IoError, "cannot write cache file " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "cannot move cache file into place: " + ec.message());
  return record;
}

std::vector<PredictionRecord> PredictionFetcher::fetch(const std::vector<ImageRef>& images) {
  std::vector<PredictionRecord> out(images.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const auto work = [&] {
    for (;;) {
      if (stop) return;
      const auto i = next++;
      if (i >= images.size()) return;
      try {
        out[i] = fetch_one(images[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop = true;
        return;
      }
    }
  };
  const auto n = std::min(std::max<std::size_t>(options_.workers, 1), images.size());
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

std::vector<PredictionRecord> fetch_predictions(const ApiClientSpec& spec, const std::vector<ImageRef>& images,
                                                const FetchOptions& options) {
  PredictionFetcher fetcher(spec, options);
  return fetcher.fetch(images);
}

}  // namespace mleval
