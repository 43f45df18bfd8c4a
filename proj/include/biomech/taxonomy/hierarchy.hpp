#pragma once

#include "biomech/core/record.hpp"
#include "biomech/llm/gateway.hpp"

#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace biomech::taxonomy {

class IncompleteHierarchyError : public ParseError {
 public:
  IncompleteHierarchyError(const std::string& organism, std::vector<Rank> missing);
  const std::vector<Rank>& missing() const { return missing_; }

 private:
  std::vector<Rank> missing_;
};

/// Parses a dictionary-like reply ({"domain": "Eukarya", ...}), tolerant of
/// code fences, single quotes and `key: value` lines. Names are lowercased.
/// Throws IncompleteHierarchyError listing the ranks it could not find.
TaxonomicHierarchy parse_hierarchy_reply(std::string_view raw, const std::string& organism = {});

/// Organism name -> hierarchy. Concurrent reads, serialized writes.
class HierarchyCache {
 public:
  std::optional<TaxonomicHierarchy> get(const std::string& organism_name) const;
  void put(const std::string& organism_name, const TaxonomicHierarchy& hierarchy);
  std::size_t size() const;

  /// Merges a JSONL file of {"organism": ..., "hierarchy": {...}}. A missing
  /// file adds nothing.
  void load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, TaxonomicHierarchy> entries_;
};

/// Looks organisms up through the taxonomy prompt, caching by organism name.
/// Concurrent lookups of the same organism share a single request.
class HierarchyFetcher {
 public:
  HierarchyFetcher(llm::Gateway& gateway, HierarchyCache& cache);

  /// Throws IncompleteHierarchyError or GatewayError. Failures are not cached.
  TaxonomicHierarchy fetch(const std::string& organism);

 private:
  llm::Gateway& gateway_;
  HierarchyCache& cache_;
  std::mutex inflight_mutex_;
  std::map<std::string, std::shared_future<TaxonomicHierarchy>> inflight_;
};

}  // namespace biomech::taxonomy
