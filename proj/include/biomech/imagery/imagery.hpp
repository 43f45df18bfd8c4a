#pragma once

#include "biomech/core/dataset.hpp"
#include "biomech/llm/backend.hpp"
#include "biomech/llm/gateway.hpp"
#include "biomech/llm/http.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace biomech::imagery {

enum class ImageStatus : std::uint8_t { ok, none_found, error };

std::string_view status_name(ImageStatus s);
std::optional<ImageStatus> parse_status(std::string_view name);

struct ImageResult {
  std::string record_id;
  std::string query;
  std::string url;         // non-empty iff status is ok
  std::string fetched_at;  // ISO-8601 UTC
  ImageStatus status = ImageStatus::none_found;
  std::string error;

  bool operator==(const ImageResult&) const = default;
};

nlohmann::ordered_json to_json(const ImageResult& r);
ImageResult result_from_json(const nlohmann::json& j);

/// "<organism display name>:<mechanism>", untouched otherwise.
std::string build_image_query(const std::string& organism_display_name, const std::string& mechanism);

/// First image hit for a query, nullopt when there is none. Throws Error when
/// the provider fails.
class ImageSearch {
 public:
  virtual ~ImageSearch() = default;
  virtual std::optional<std::string> first_image(const std::string& query) = 0;
};

/// Serves a fixed query -> URL map.
class StubImageSearch final : public ImageSearch {
 public:
  explicit StubImageSearch(std::map<std::string, std::string> table) : table_(std::move(table)) {}
  /// JSON object of query -> URL.
  static std::shared_ptr<StubImageSearch> from_file(const std::filesystem::path& path);

  std::optional<std::string> first_image(const std::string& query) override;

 private:
  std::map<std::string, std::string> table_;
};

struct CustomSearchConfig {
  std::string base_url = "https://www.googleapis.com";
  std::string api_key;
  std::string engine_id;
  llm::RetryPolicy retry;

  /// GOOGLE_API_KEY and GOOGLE_CSE_ID.
  static CustomSearchConfig from_env();
};

/// Custom Search JSON API with image results and safe search on.
class CustomSearch final : public ImageSearch {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  CustomSearch(CustomSearchConfig config, std::shared_ptr<llm::HttpTransport> transport,
               Sleeper sleeper = nullptr);

  std::optional<std::string> first_image(const std::string& query) override;
  /// Path and query string for a search, exposed for tests.
  std::string request_path(const std::string& query) const;

 private:
  CustomSearchConfig config_;
  std::shared_ptr<llm::HttpTransport> transport_;
  Sleeper sleeper_;
};

using Clock = std::function<std::string()>;
std::string utc_now_iso8601();

/// Cache-first lookups. Cache files live at <dir>/<sha256(query)>.json; errors
/// are not cached. Concurrent provider calls are bounded separately from the
/// LLM gateway.
class ImageFetcher {
 public:
  ImageFetcher(std::shared_ptr<ImageSearch> search, std::filesystem::path cache_dir,
               std::size_t max_in_flight = 4, Clock clock = nullptr);

  ImageResult fetch(const std::string& query);
  std::size_t provider_calls() const { return calls_.load(); }
  std::size_t peak_in_flight() const { return limiter_.peak_in_flight(); }
  std::filesystem::path cache_path(const std::string& query) const;

 private:
  std::shared_ptr<ImageSearch> search_;
  std::filesystem::path cache_dir_;
  llm::RequestLimiter limiter_;
  Clock clock_;
  std::atomic<std::size_t> calls_{0};
};

struct ImageRunSummary {
  std::size_t ok = 0;
  std::size_t none_found = 0;
  std::size_t errors = 0;
  std::vector<ImageResult> results;  // in dataset order
};

/// Fetches an image for each record (optionally of one problem) and stores
/// the URL on records whose lookup succeeded.
ImageRunSummary fetch_images(Dataset& dataset, std::optional<std::string> problem, ImageFetcher& fetcher);

}  // namespace biomech::imagery
