#include "biomech/service/api.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace biomech::service {

struct HttpServer::Impl {
  Impl(const ApiService& a, ServerOptions o) : api(a), options(std::move(o)) {}

  const ApiService& api;
  ServerOptions options;
  httplib::Server server;
  int port = -1;
};

HttpServer::HttpServer(const ApiService& api, ServerOptions options)
    : impl_(std::make_unique<Impl>(api, std::move(options))) {
  auto& s = impl_->server;
  const std::string origin = impl_->options.cors_origin;

  s.set_default_headers({{"Access-Control-Allow-Origin", origin},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});

  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = impl_->api.handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  const std::string api_routes = R"(/(healthz|problems|mechanisms|actions)(/.*)?)";
  s.Get(api_routes, dispatch);
  s.Post(api_routes, dispatch);
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  if (impl_->options.static_dir) {
    if (!s.set_mount_point("/", impl_->options.static_dir->string())) {
      throw Error("static directory '" + impl_->options.static_dir->string() + "' does not exist");
    }
  }
  s.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& o = impl_->options;
  if (o.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(o.host);
  } else {
    impl_->port = impl_->server.bind_to_port(o.host, o.port) ? o.port : -1;
  }
  if (impl_->port < 0) throw Error("cannot bind " + o.host + ":" + std::to_string(o.port));
  return impl_->port;
}

void HttpServer::serve() {
  if (impl_->port < 0) bind();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace biomech::service
