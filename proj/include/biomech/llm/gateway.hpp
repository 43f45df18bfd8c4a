#pragma once

#include "biomech/llm/backend.hpp"
#include "biomech/llm/embedding.hpp"
#include "biomech/llm/prompt.hpp"

#include <atomic>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

namespace biomech::llm {

/// Expansion, distillation and the interactive features use the stronger
/// model; taxonomy lookups use the cheaper one.
struct ModelDefaults {
  std::string main_model = "gpt-4";
  std::string taxonomy_model = "gpt-3.5-turbo";
  int max_tokens = 1024;
};

/// Bounded counting semaphore with an RAII permit.
class RequestLimiter {
 public:
  explicit RequestLimiter(std::size_t permits);

  class Permit {
   public:
    explicit Permit(RequestLimiter& limiter);
    ~Permit();
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    RequestLimiter& limiter_;
  };

  std::size_t peak_in_flight() const { return peak_.load(); }

 private:
  static constexpr std::ptrdiff_t kMaxPermits = 4096;
  std::counting_semaphore<kMaxPermits> sem_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_{0};
};

/// The single entry point to completion and embedding providers. Safe to call
/// from several threads; in-flight requests are bounded by `max_in_flight`.
class Gateway {
 public:
  Gateway(std::shared_ptr<CompletionBackend> backend, std::shared_ptr<Embedder> embedder,
          ModelDefaults models = {}, std::size_t max_in_flight = 10);

  /// Request with per-template model and temperature defaults applied.
  CompletionRequest make_request(TemplateId id, Bindings bindings) const;

  /// Renders the template (throws UnboundPlaceholderError) and calls the backend.
  CompletionResult complete(const CompletionRequest& request);
  CompletionResult complete(TemplateId id, Bindings bindings);

  std::vector<EmbeddingResult> embed(const std::vector<std::string>& texts);

  std::size_t completions_issued() const { return completions_.load(); }
  std::size_t peak_in_flight() const { return limiter_.peak_in_flight(); }
  const ModelDefaults& models() const { return models_; }
  CompletionBackend& backend() { return *backend_; }

 private:
  std::shared_ptr<CompletionBackend> backend_;
  std::shared_ptr<Embedder> embedder_;
  ModelDefaults models_;
  RequestLimiter limiter_;
  std::atomic<std::size_t> completions_{0};
};

}  // namespace biomech::llm
