#pragma once

#include "biomech/llm/backend.hpp"
#include "biomech/llm/embedding.hpp"
#include "biomech/llm/gateway.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace biomech::llm {

enum class BackendKind { mock, replay, live, record };

std::optional<BackendKind> parse_backend_kind(std::string_view name);

struct BackendOptions {
  BackendKind kind = BackendKind::mock;
  std::filesystem::path mock_table;
  std::filesystem::path replay_dir;
  std::filesystem::path record_dir;
  BackendKind record_inner = BackendKind::live;  // what `record` wraps: mock or live
  ModelDefaults models;
  std::size_t max_in_flight = 10;
  bool live_embeddings = false;
};

/// Throws Error for missing paths or credentials the chosen backend needs.
std::shared_ptr<CompletionBackend> make_backend(const BackendOptions& options);
std::shared_ptr<Embedder> make_embedder(const BackendOptions& options);
std::unique_ptr<Gateway> make_gateway(const BackendOptions& options);

}  // namespace biomech::llm
