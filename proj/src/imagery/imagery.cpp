#include "biomech/imagery/imagery.hpp"

#include "biomech/core/parallel.hpp"
#include "biomech/core/text.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

namespace biomech::imagery {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view status_name(ImageStatus s) {
  switch (s) {
    case ImageStatus::ok: return "ok";
    case ImageStatus::none_found: return "none-found";
    case ImageStatus::error: return "error";
  }
  return "error";
}

std::optional<ImageStatus> parse_status(std::string_view name) {
  for (auto s : {ImageStatus::ok, ImageStatus::none_found, ImageStatus::error}) {
    if (status_name(s) == name) return s;
  }
  return std::nullopt;
}

ordered_json to_json(const ImageResult& r) {
  ordered_json j;
  if (!r.record_id.empty()) j["record_id"] = r.record_id;
  j["query"] = r.query;
  j["url"] = r.url;
  j["fetched_at"] = r.fetched_at;
  j["status"] = status_name(r.status);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

ImageResult result_from_json(const json& j) {
  ImageResult r;
  r.record_id = j.value("record_id", "");
  r.query = j.at("query").get<std::string>();
  r.url = j.value("url", "");
  r.fetched_at = j.value("fetched_at", "");
  const auto status = parse_status(j.at("status").get<std::string>());
  if (!status) throw ParseError("image result: unknown status");
  r.status = *status;
  r.error = j.value("error", "");
  if (r.status == ImageStatus::ok && r.url.empty()) throw ParseError("image result: ok without url");
  return r;
}

std::string build_image_query(const std::string& organism_display_name, const std::string& mechanism) {
  return organism_display_name + ":" + mechanism;
}

std::shared_ptr<StubImageSearch> StubImageSearch::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open image stub '" + path.string() + "'");
  try {
    return std::make_shared<StubImageSearch>(json::parse(in).get<std::map<std::string, std::string>>());
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::optional<std::string> StubImageSearch::first_image(const std::string& query) {
  const auto it = table_.find(query);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

CustomSearchConfig CustomSearchConfig::from_env() {
  CustomSearchConfig c;
  if (const char* k = std::getenv("GOOGLE_API_KEY")) c.api_key = k;
  if (const char* id = std::getenv("GOOGLE_CSE_ID")) c.engine_id = id;
  return c;
}

CustomSearch::CustomSearch(CustomSearchConfig config, std::shared_ptr<llm::HttpTransport> transport,
                           Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (config_.api_key.empty() || config_.engine_id.empty()) {
    throw Error("image search needs GOOGLE_API_KEY and GOOGLE_CSE_ID");
  }
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string CustomSearch::request_path(const std::string& query) const {
  return "/customsearch/v1?key=" + llm::url_encode(config_.api_key) + "&cx=" + llm::url_encode(config_.engine_id) +
         "&q=" + llm::url_encode(query) + "&searchType=image&safe=active&num=1";
}

std::optional<std::string> CustomSearch::first_image(const std::string& query) {
  const auto path = request_path(query);
  for (int attempt = 0;; ++attempt) {
    const auto res = transport_->get(path, {{"Accept", "application/json"}});
    if (res.status == 200) {
      try {
        const auto j = json::parse(res.body);
        const auto items = j.find("items");
        if (items == j.end() || !items->is_array() || items->empty()) return std::nullopt;
        return items->front().at("link").get<std::string>();
      } catch (const json::exception& e) {
        throw Error(std::string("image search: malformed response: ") + e.what());
      }
    }
    if (!llm::is_transient_status(res.status) || attempt >= config_.retry.max_retries) {
      throw Error("image search: HTTP " + std::to_string(res.status) + " " + res.error);
    }
    sleeper_(config_.retry.backoff_for(attempt));
  }
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ImageFetcher::ImageFetcher(std::shared_ptr<ImageSearch> search, std::filesystem::path cache_dir,
                           std::size_t max_in_flight, Clock clock)
    : search_(std::move(search)), cache_dir_(std::move(cache_dir)), limiter_(max_in_flight),
      clock_(clock ? std::move(clock) : Clock(utc_now_iso8601)) {}

std::filesystem::path ImageFetcher::cache_path(const std::string& query) const {
  return cache_dir_ / (text::sha256_hex(query) + ".json");
}

ImageResult ImageFetcher::fetch(const std::string& query) {
  const auto path = cache_path(query);
  if (std::ifstream in(path, std::ios::binary); in) {
    try {
      auto cached = result_from_json(json::parse(in));
      if (cached.query == query) return cached;
    } catch (const std::exception& e) {
      spdlog::warn("image cache: ignoring unreadable {}: {}", path.string(), e.what());
    }
  }

  ImageResult r;
  r.query = query;
  {
    llm::RequestLimiter::Permit permit(limiter_);
    ++calls_;
    try {
      if (auto url = search_->first_image(query)) {
        r.url = *url;
        r.status = ImageStatus::ok;
      } else {
        r.status = ImageStatus::none_found;
      }
    } catch (const std::exception& e) {
      r.status = ImageStatus::error;
      r.error = e.what();
    }
  }
  r.fetched_at = clock_();
  if (r.status != ImageStatus::error) {
    std::filesystem::create_directories(cache_dir_);
    // Per-thread temp name: two workers may race on the same query.
    auto tmp = path;
    tmp += "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << to_json(r).dump() << "\n";
    }
    std::filesystem::rename(tmp, path);
  }
  return r;
}

ImageRunSummary fetch_images(Dataset& dataset, std::optional<std::string> problem, ImageFetcher& fetcher) {
  std::vector<const MechanismRecord*> targets;
  for (const auto& r : dataset.records()) {
    if (!problem || r.problem == *problem) targets.push_back(&r);
  }
  auto results = parallel_map<ImageResult>(targets.size(), 16, [&](std::size_t i) {
    return fetcher.fetch(build_image_query(targets[i]->organism.display_name(), targets[i]->mechanism));
  });

  ImageRunSummary summary;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto result = std::move(results[i]);
    result.record_id = targets[i]->id;
    switch (result.status) {
      case ImageStatus::ok:
        ++summary.ok;
        break;
      case ImageStatus::none_found:
        ++summary.none_found;
        break;
      case ImageStatus::error:
        ++summary.errors;
        spdlog::warn("image lookup for {} failed: {}", result.record_id, result.error);
        break;
    }
    summary.results.push_back(std::move(result));
  }
  for (const auto& r : summary.results) {
    if (r.status == ImageStatus::ok) dataset.set_image_url(r.record_id, r.url);
  }
  return summary;
}

}  // namespace biomech::imagery
