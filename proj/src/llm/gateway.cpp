#include "biomech/llm/gateway.hpp"

#include "biomech/core/error.hpp"

namespace biomech::llm {

RequestLimiter::RequestLimiter(std::size_t permits)
    : sem_(static_cast<std::ptrdiff_t>(permits == 0 ? 1 : std::min<std::size_t>(permits, kMaxPermits))) {}

RequestLimiter::Permit::Permit(RequestLimiter& limiter) : limiter_(limiter) {
  limiter_.sem_.acquire();
  const auto now = ++limiter_.in_flight_;
  auto peak = limiter_.peak_.load();
  while (now > peak && !limiter_.peak_.compare_exchange_weak(peak, now)) {
  }
}

RequestLimiter::Permit::~Permit() {
  --limiter_.in_flight_;
  limiter_.sem_.release();
}

Gateway::Gateway(std::shared_ptr<CompletionBackend> backend, std::shared_ptr<Embedder> embedder,
                 ModelDefaults models, std::size_t max_in_flight)
    : backend_(std::move(backend)),
      embedder_(std::move(embedder)),
      models_(std::move(models)),
      limiter_(max_in_flight) {
  if (!backend_) throw Error("gateway requires a completion backend");
}

CompletionRequest Gateway::make_request(TemplateId id, Bindings bindings) const {
  CompletionRequest req;
  req.template_id = id;
  req.bindings = std::move(bindings);
  req.max_tokens = models_.max_tokens;
  switch (id) {
    case TemplateId::taxonomy:
      req.model = models_.taxonomy_model;
      req.temperature = 0.0;
      break;
    case TemplateId::structure_output:
      req.model = models_.main_model;
      req.temperature = 0.0;
      break;
    default:
      req.model = models_.main_model;
      break;
  }
  return req;
}

CompletionResult Gateway::complete(const CompletionRequest& request) {
  RenderedRequest rendered{request, render_prompt(request.template_id, request.bindings)};
  RequestLimiter::Permit permit(limiter_);
  ++completions_;
  return backend_->complete(rendered);
}

CompletionResult Gateway::complete(TemplateId id, Bindings bindings) {
  return complete(make_request(id, std::move(bindings)));
}

std::vector<EmbeddingResult> Gateway::embed(const std::vector<std::string>& texts) {
  if (!embedder_) throw Error("gateway has no embedder configured");
  RequestLimiter::Permit permit(limiter_);
  return embedder_->embed(texts);
}

}  // namespace biomech::llm
