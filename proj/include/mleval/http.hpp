#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace mleval {

struct HttpResponse {
  int status = 0;  // 0: no response (connection failure, timeout)
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

class HttpClient {
 public:
  virtual ~HttpClient() = default;
  virtual HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                            const std::string& content_type, std::chrono::milliseconds timeout) = 0;
};

// cpp-httplib backed client; accepts http:// and https:// URLs.
class NetworkHttpClient final : public HttpClient {
 public:
  HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                    const std::string& content_type, std::chrono::milliseconds timeout) override;
};

// Connection failures, timeouts, 429 and 5xx.
inline bool is_transient_status(int status) { return status == 0 || status == 429 || status >= 500; }

}  // namespace mleval
