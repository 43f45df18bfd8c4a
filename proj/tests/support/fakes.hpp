#pragma once

#include "biomech/llm/backend.hpp"
#include "biomech/llm/http.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace testsupport {

/// Scripted HTTP transport: replies are consumed in order; the last one
/// repeats. Every request is recorded.
class ScriptedTransport final : public biomech::llm::HttpTransport {
 public:
  struct Call {
    std::string method;
    std::string path;
    std::string body;
    biomech::llm::Headers headers;
  };

  explicit ScriptedTransport(std::vector<biomech::llm::HttpResponse> replies) : replies_(replies.begin(), replies.end()) {}

  biomech::llm::HttpResponse post(const std::string& path, const std::string& body,
                                  const biomech::llm::Headers& headers) override {
    return next({"POST", path, body, headers});
  }
  biomech::llm::HttpResponse get(const std::string& path, const biomech::llm::Headers& headers) override {
    return next({"GET", path, "", headers});
  }

  std::vector<Call> calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
  }

 private:
  biomech::llm::HttpResponse next(Call call) {
    std::lock_guard lock(mutex_);
    calls_.push_back(std::move(call));
    auto r = replies_.front();
    if (replies_.size() > 1) replies_.pop_front();
    return r;
  }

  mutable std::mutex mutex_;
  std::deque<biomech::llm::HttpResponse> replies_;
  std::vector<Call> calls_;
};

inline biomech::llm::HttpResponse chat_reply(const std::string& content) {
  nlohmann::json j;
  j["choices"] = nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}});
  j["usage"] = {{"prompt_tokens", 11}, {"completion_tokens", 7}};
  return {200, j.dump(), ""};
}

/// Backend that answers with a function of the request, optionally slowly,
/// and tracks how many calls overlap.
class FunctionBackend final : public biomech::llm::CompletionBackend {
 public:
  using Fn = std::function<std::string(const biomech::llm::RenderedRequest&)>;
  explicit FunctionBackend(Fn fn, std::chrono::milliseconds delay = std::chrono::milliseconds(0))
      : fn_(std::move(fn)), delay_(delay) {}

  biomech::llm::CompletionResult complete(const biomech::llm::RenderedRequest& request) override {
    const auto now = ++active_;
    std::size_t seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    ++calls_;
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    std::string text;
    try {
      text = fn_(request);
    } catch (...) {
      --active_;
      throw;
    }
    --active_;
    biomech::llm::CompletionResult r;
    r.text = text;
    r.backend = "function";
    return r;
  }
  std::string id() const override { return "function"; }

  std::size_t calls() const { return calls_.load(); }
  std::size_t peak() const { return peak_.load(); }

 private:
  Fn fn_;
  std::chrono::milliseconds delay_;
  std::atomic<std::size_t> active_{0};
  std::atomic<std::size_t> peak_{0};
  std::atomic<std::size_t> calls_{0};
};

}  // namespace testsupport
