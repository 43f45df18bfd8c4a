#include "biomech/llm/factory.hpp"

#include "biomech/core/error.hpp"

namespace biomech::llm {

std::optional<BackendKind> parse_backend_kind(std::string_view name) {
  if (name == "mock") return BackendKind::mock;
  if (name == "replay") return BackendKind::replay;
  if (name == "live") return BackendKind::live;
  if (name == "record") return BackendKind::record;
  return std::nullopt;
}

namespace {

std::shared_ptr<CompletionBackend> make_simple(BackendKind kind, const BackendOptions& o) {
  switch (kind) {
    case BackendKind::mock:
      if (o.mock_table.empty()) throw Error("mock backend needs a mock table (--mock-table)");
      return MockBackend::from_file(o.mock_table);
    case BackendKind::replay:
      if (o.replay_dir.empty()) throw Error("replay backend needs a replay directory (--replay-dir)");
      if (!std::filesystem::is_directory(o.replay_dir)) {
        throw Error("replay directory '" + o.replay_dir.string() + "' does not exist");
      }
      return std::make_shared<ReplayBackend>(o.replay_dir);
    case BackendKind::live: {
      auto cfg = LiveConfig::from_env();
      if (cfg.api_key.empty()) throw Error("live backend needs OPENAI_API_KEY");
      std::shared_ptr<HttpTransport> transport = make_http_transport(cfg.base_url);
      return std::make_shared<LiveBackend>(std::move(cfg), std::move(transport));
    }
    case BackendKind::record:
      break;
  }
  throw Error("record backend cannot wrap itself");
}

}  // namespace

std::shared_ptr<CompletionBackend> make_backend(const BackendOptions& options) {
  if (options.kind != BackendKind::record) return make_simple(options.kind, options);
  if (options.record_dir.empty()) throw Error("record backend needs a record directory (--record-dir)");
  return std::make_shared<RecordingBackend>(make_simple(options.record_inner, options), options.record_dir);
}

std::shared_ptr<Embedder> make_embedder(const BackendOptions& options) {
  if (!options.live_embeddings) return std::make_shared<MockEmbedder>();
  auto cfg = LiveConfig::from_env();
  if (cfg.api_key.empty()) throw Error("live embeddings need OPENAI_API_KEY");
  std::shared_ptr<HttpTransport> transport = make_http_transport(cfg.base_url);
  return std::make_shared<LiveEmbedder>(std::move(cfg), std::move(transport));
}

std::unique_ptr<Gateway> make_gateway(const BackendOptions& options) {
  return std::make_unique<Gateway>(make_backend(options), make_embedder(options), options.models,
                                   options.max_in_flight);
}

}  // namespace biomech::llm
