#pragma once

#include "biomech/llm/http.hpp"
#include "biomech/llm/prompt.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace biomech::llm {

struct CompletionRequest {
  TemplateId template_id = TemplateId::taxonomy;
  Bindings bindings;
  std::string model;
  std::optional<double> temperature;  // unset: provider default
  int max_tokens = 1024;
};

/// A request after template rendering; what backends actually see.
struct RenderedRequest {
  CompletionRequest request;
  RenderedPrompt prompt;
};

struct CompletionResult {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  std::string backend;
  std::chrono::milliseconds latency{0};
  int attempts = 1;
};

/// Stable key for record/replay: SHA-256 over model, sampling parameters and
/// the rendered prompt text.
std::string request_hash(const RenderedRequest& request);

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual CompletionResult complete(const RenderedRequest& request) = 0;
  virtual std::string id() const = 0;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;

  std::chrono::milliseconds backoff_for(int retry) const;
};

struct LiveConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  RetryPolicy retry;

  /// Reads OPENAI_API_KEY and OPENAI_BASE_URL when set.
  static LiveConfig from_env();
};

/// OpenAI-compatible chat completions over an injectable transport.
class LiveBackend final : public CompletionBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  LiveBackend(LiveConfig config, std::shared_ptr<HttpTransport> transport,
              Sleeper sleeper = nullptr);

  CompletionResult complete(const RenderedRequest& request) override;
  std::string id() const override { return "live"; }

 private:
  LiveConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleep_;
};

/// Deterministic responses from a fixture table.
///
/// Table format: {"entries": [{"template": "<id>", "match": {binding: value},
/// "response": "..."} | {..., "responses": ["...", ...]}]}. The first entry
/// whose `match` is a subset of the request bindings wins; with `responses`
/// the choice is hash(bindings) modulo the list size.
class MockBackend final : public CompletionBackend {
 public:
  explicit MockBackend(const nlohmann::json& table);
  static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);

  CompletionResult complete(const RenderedRequest& request) override;
  std::string id() const override { return "mock"; }

 private:
  struct Entry {
    TemplateId template_id;
    Bindings match;
    std::vector<std::string> responses;
    bool pick_by_hash = false;
  };
  std::vector<Entry> entries_;
};

/// Serves responses recorded as `<request hash>.json` files.
class ReplayBackend final : public CompletionBackend {
 public:
  explicit ReplayBackend(std::filesystem::path dir);

  CompletionResult complete(const RenderedRequest& request) override;
  std::string id() const override { return "replay"; }

 private:
  std::filesystem::path dir_;
};

/// Passes requests to `inner` and writes each response into a replay directory.
class RecordingBackend final : public CompletionBackend {
 public:
  RecordingBackend(std::shared_ptr<CompletionBackend> inner, std::filesystem::path dir);

  CompletionResult complete(const RenderedRequest& request) override;
  std::string id() const override { return "record:" + inner_->id(); }

 private:
  std::shared_ptr<CompletionBackend> inner_;
  std::filesystem::path dir_;
  std::mutex write_mutex_;
};

void write_replay_entry(const std::filesystem::path& dir, const RenderedRequest& request,
                        const std::string& response);

}  // namespace biomech::llm
