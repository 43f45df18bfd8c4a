#include "biomech/llm/http.hpp"

#include "biomech/core/error.hpp"

#include <httplib.h>

#include <cctype>
#include <regex>

namespace biomech::llm {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url, std::chrono::seconds timeout) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(base_url, m, kUrl)) throw Error("invalid base URL '" + base_url + "'");
    origin_ = m[1].str();
    prefix_ = m[2].str();
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    client_ = std::make_unique<httplib::Client>(origin_);
    client_->set_connection_timeout(timeout);
    client_->set_read_timeout(timeout);
    client_->set_write_timeout(timeout);
  }

  HttpResponse post(const std::string& path, const std::string& body, const Headers& headers) override {
    httplib::Headers h(headers.begin(), headers.end());
    return convert(client_->Post(prefix_ + path, h, body, "application/json"));
  }

  HttpResponse get(const std::string& path_and_query, const Headers& headers) override {
    httplib::Headers h(headers.begin(), headers.end());
    return convert(client_->Get(prefix_ + path_and_query, h));
  }

 private:
  static HttpResponse convert(const httplib::Result& res) {
    if (!res) return HttpResponse{0, {}, httplib::to_string(res.error())};
    return HttpResponse{res->status, res->body, {}};
  }

  std::string origin_;
  std::string prefix_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

bool is_transient_status(int status) {
  return status == 0 || status == 408 || status == 409 || status == 429 || status >= 500;
}

std::string url_encode(const std::string& value) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : value) {
    if (std::isalnum(c) != 0 || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0x0f]);
    }
  }
  return out;
}

}  // namespace biomech::llm
