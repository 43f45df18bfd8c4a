#include "biomech/ingest/fetcher.hpp"

#include "biomech/core/record.hpp"
#include "biomech/ingest/asknature.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <map>
#include <regex>

namespace biomech::ingest {

namespace {

struct SplitUrl {
  std::string origin;
  std::string path;
};

SplitUrl split_url(const std::string& url, const std::string& base_origin) {
  static const std::regex kAbs(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (std::regex_match(url, m, kAbs)) return {m[1].str(), m[2].matched ? m[2].str() : "/"};
  if (!url.empty() && url.front() == '/') return {base_origin, url};
  throw Error("cannot resolve URL '" + url + "'");
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

}  // namespace

FetchReport fetch_problem_pages(const std::string& group_url, const std::string& problem_slug,
                                const std::filesystem::path& corpus_root,
                                const TransportFactory& transports) {
  if (!is_valid_problem_id(problem_slug)) throw Error("invalid problem slug '" + problem_slug + "'");
  const TransportFactory factory =
      transports ? transports : [](const std::string& origin) { return llm::make_http_transport(origin); };

  std::map<std::string, std::unique_ptr<llm::HttpTransport>> clients;
  auto fetch = [&](const SplitUrl& u) {
    auto& client = clients[u.origin];
    if (!client) client = factory(u.origin);
    return client->get(u.path, {{"User-Agent", "biomech-fetcher/1.0"}});
  };

  const auto group_loc = split_url(group_url, "");
  const auto group = fetch(group_loc);
  if (group.status != 200) {
    throw Error("group page fetch failed: HTTP " + std::to_string(group.status) + " " + group.error);
  }
  const auto parsed = parse_group_page(group.body);
  const auto dir = corpus_root / "problems" / problem_slug;
  write_file(dir / "group.html", group.body);

  FetchReport report;
  for (std::size_t i = 0; i < parsed.entries.size(); ++i) {
    const auto& entry = parsed.entries[i];
    const auto res = fetch(split_url(entry.strategy_url, group_loc.origin));
    if (res.status != 200) {
      spdlog::warn("fetch: {} -> HTTP {} {}", entry.strategy_url, res.status, res.error);
      ++report.strategies_failed;
      continue;
    }
    write_file(dir / "strategies" / (std::to_string(i + 1) + ".html"), res.body);
    ++report.strategies_saved;
  }
  return report;
}

}  // namespace biomech::ingest
