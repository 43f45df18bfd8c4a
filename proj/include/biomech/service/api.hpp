#pragma once

#include "biomech/clustering/clustering.hpp"
#include "biomech/core/dataset.hpp"
#include "biomech/llm/gateway.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace biomech::service {

struct ApiResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

/// Longest idea text accepted by /actions/critique, in bytes.
inline constexpr std::size_t kMaxIdeaBytes = 32 * 1024;

/// Routes and handlers over an immutable dataset snapshot. Thread-safe: the
/// snapshot is never written and the gateway bounds concurrent completions.
///
///   GET  /healthz
///   GET  /problems
///   GET  /problems/{id}/clusters
///   GET  /problems/{id}/clusters/{cluster_id}
///   GET  /mechanisms/{id}
///   POST /actions/explain   {"mechanism_id", "problem_id"}
///   POST /actions/compare   {"a", "b", "problem_id"}
///   POST /actions/combine   {"a", "b", "problem_id"}
///   POST /actions/critique  {"idea_text"}
///
/// Errors are {"error": message} with 400, 404, 405 or 502.
class ApiService {
 public:
  ApiService(Dataset dataset, clustering::ModelSet models, llm::Gateway& gateway);

  ApiResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

  const Dataset& dataset() const { return dataset_; }

 private:
  ApiResponse problems() const;
  ApiResponse clusters(const std::string& problem) const;
  ApiResponse cluster(const std::string& problem, const std::string& cluster_id) const;
  ApiResponse mechanism(const std::string& id) const;
  ApiResponse explain(const nlohmann::json& req) const;
  ApiResponse pairwise(const std::string& kind, const nlohmann::json& req) const;
  ApiResponse critique(const nlohmann::json& req) const;

  nlohmann::ordered_json cluster_json(const clustering::Cluster& c) const;

  Dataset dataset_;
  clustering::ModelSet models_;
  llm::Gateway& gateway_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;  // served at "/" when set
  std::string cors_origin = "*";
};

/// HTTP binding for ApiService.
class HttpServer {
 public:
  HttpServer(const ApiService& api, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free one) and returns the bound port; throws on failure.
  int bind();
  /// Blocks serving requests until stop().
  void serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace biomech::service
