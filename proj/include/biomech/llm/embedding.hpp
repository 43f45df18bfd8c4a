#pragma once

#include "biomech/llm/backend.hpp"
#include "biomech/llm/http.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace biomech::llm {

struct EmbeddingResult {
  std::vector<double> vector;
  std::string model;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// One vector per input, in input order. Throws Error when `texts` is empty.
  virtual std::vector<EmbeddingResult> embed(const std::vector<std::string>& texts) = 0;
  virtual std::size_t dimension() const = 0;
};

/// Bag-of-words hashing embedder: every lowercase word maps to a seeded
/// pseudo-random direction; a text is the normalized sum of its words.
/// Texts sharing words therefore land close together.
class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(std::size_t dimension = 64, std::uint64_t seed = 0);

  std::vector<EmbeddingResult> embed(const std::vector<std::string>& texts) override;
  std::size_t dimension() const override { return dimension_; }

 private:
  std::vector<double> embed_one(const std::string& text) const;

  std::size_t dimension_;
  std::uint64_t seed_;
};

/// OpenAI-compatible /embeddings client.
class LiveEmbedder final : public Embedder {
 public:
  LiveEmbedder(LiveConfig config, std::shared_ptr<HttpTransport> transport,
               std::string model = "text-embedding-ada-002", std::size_t batch_size = 256);

  std::vector<EmbeddingResult> embed(const std::vector<std::string>& texts) override;
  std::size_t dimension() const override { return dimension_; }

 private:
  LiveConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::string model_;
  std::size_t batch_size_;
  std::size_t dimension_ = 0;
};

}  // namespace biomech::llm
