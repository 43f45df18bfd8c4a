#pragma once

#include "biomech/core/dataset.hpp"
#include "biomech/ingest/asknature.hpp"
#include "biomech/llm/gateway.hpp"
#include "biomech/taxonomy/hierarchy.hpp"

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace biomech::ingest {

struct SeedReport {
  std::size_t problems = 0;
  std::size_t entries = 0;
  std::size_t missing_body = 0;
  std::size_t distill_failures = 0;
  std::size_t word_limit_warnings = 0;
  std::size_t taxonomy_failures = 0;
  std::size_t appended = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> errors;

  nlohmann::ordered_json to_json() const;
};

/// Distills every corpus entry into a seed record, classifies its organism
/// and appends the records problem by problem in card order. A missing
/// strategy page is treated as a post without body. Failed distillations
/// are reported and skipped; failed classifications keep the record with no
/// taxonomy.
SeedReport seed_dataset(const std::vector<CorpusProblem>& corpus, llm::Gateway& gateway,
                        taxonomy::HierarchyCache& cache, Dataset& dataset, std::size_t word_limit = 12);

}  // namespace biomech::ingest
