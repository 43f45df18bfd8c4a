#pragma once

#include "biomech/core/error.hpp"
#include "biomech/llm/http.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

namespace biomech::ingest {

/// Builds a transport for an origin such as "https://asknature.org".
using TransportFactory = std::function<std::unique_ptr<llm::HttpTransport>(const std::string& origin)>;

struct FetchReport {
  std::size_t strategies_saved = 0;
  std::size_t strategies_failed = 0;
};

/// Downloads a group-by-function page and each linked strategy page into the
/// corpus layout under `corpus_root`. Relative links resolve against the group
/// page origin. Throws when the group page itself cannot be fetched or parsed.
FetchReport fetch_problem_pages(const std::string& group_url, const std::string& problem_slug,
                                const std::filesystem::path& corpus_root,
                                const TransportFactory& transports = nullptr);

}  // namespace biomech::ingest
