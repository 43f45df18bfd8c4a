#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>

namespace biomech::llm {

using Headers = std::multimap<std::string, std::string>;

struct HttpResponse {
  int status = 0;  // 0 means the request never produced a response
  std::string body;
  std::string error;
};

/// Minimal HTTP client seam so retry logic can be exercised with injected faults.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const Headers& headers) = 0;
  virtual HttpResponse get(const std::string& path_and_query, const Headers& headers) = 0;
};

/// cpp-httplib backed transport. `base_url` is "scheme://host[:port][/prefix]";
/// request paths are appended to the prefix.
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::seconds timeout = std::chrono::seconds(60));

bool is_transient_status(int status);

/// Percent-encodes a query parameter value.
std::string url_encode(const std::string& value);

}  // namespace biomech::llm
