#include "biomech/llm/embedding.hpp"

#include "biomech/core/text.hpp"
#include "biomech/llm/errors.hpp"

#include <cctype>
#include <cmath>
#include <random>
#include <thread>

namespace biomech::llm {

using nlohmann::json;

MockEmbedder::MockEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension_ == 0) throw Error("embedding dimension must be positive");
}

std::vector<double> MockEmbedder::embed_one(const std::string& input) const {
  std::vector<std::string> words;
  std::string current;
  for (char c : input) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) != 0 || uc >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  if (words.empty()) words.push_back(input);

  std::vector<double> v(dimension_, 0.0);
  for (const auto& w : words) {
    const auto hex = text::sha256_hex(std::to_string(seed_) + ":" + w);
    std::mt19937_64 rng(std::stoull(hex.substr(0, 16), nullptr, 16));
    for (auto& x : v) {
      // Uniform in [-1, 1) from the top 53 bits; avoids distribution objects
      // whose output differs between standard libraries.
      x += static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& x : v) x /= norm;
  }
  return v;
}

std::vector<EmbeddingResult> MockEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error("embed: no texts");
  std::vector<EmbeddingResult> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back({embed_one(t), "mock-embedding-" + std::to_string(dimension_)});
  return out;
}

LiveEmbedder::LiveEmbedder(LiveConfig config, std::shared_ptr<HttpTransport> transport,
                           std::string model, std::size_t batch_size)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      model_(std::move(model)),
      batch_size_(batch_size == 0 ? 1 : batch_size) {}

std::vector<EmbeddingResult> LiveEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error("embed: no texts");
  std::vector<EmbeddingResult> out;
  out.reserve(texts.size());
  const Headers headers{{"Authorization", "Bearer " + config_.api_key}};

  for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
    const std::size_t end = std::min(texts.size(), start + batch_size_);
    json body;
    body["model"] = model_;
    body["input"] = std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                             texts.begin() + static_cast<std::ptrdiff_t>(end));
    const std::string payload = body.dump();

    HttpResponse res;
    const int max_attempts = config_.retry.max_retries + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      res = transport_->post("/embeddings", payload, headers);
      if (res.status == 200 || !is_transient_status(res.status)) break;
      if (attempt < max_attempts) std::this_thread::sleep_for(config_.retry.backoff_for(attempt - 1));
    }
    if (res.status != 200) {
      throw GatewayError(is_transient_status(res.status) ? GatewayError::Kind::retries_exhausted
                                                         : GatewayError::Kind::http_error,
                         "embeddings: HTTP " + std::to_string(res.status) + " " + res.error + res.body);
    }
    try {
      const json j = json::parse(res.body);
      std::vector<std::vector<double>> batch(end - start);
      for (const auto& item : j.at("data")) {
        const auto index = item.at("index").get<std::size_t>();
        if (index >= batch.size()) throw GatewayError(GatewayError::Kind::bad_response, "embeddings: index out of range");
        batch[index] = item.at("embedding").get<std::vector<double>>();
      }
      for (auto& v : batch) {
        if (v.empty()) throw GatewayError(GatewayError::Kind::bad_response, "embeddings: missing vector");
        if (dimension_ == 0) dimension_ = v.size();
        if (v.size() != dimension_) throw GatewayError(GatewayError::Kind::bad_response, "embeddings: dimension changed");
        out.push_back({std::move(v), model_});
      }
    } catch (const json::exception& e) {
      throw GatewayError(GatewayError::Kind::bad_response, std::string("embeddings: ") + e.what());
    }
  }
  return out;
}

}  // namespace biomech::llm
