#include "biomech/ingest/seeding.hpp"

#include "biomech/core/parallel.hpp"
#include "biomech/core/text.hpp"

#include <spdlog/spdlog.h>

#include <map>

namespace biomech::ingest {

namespace {

constexpr std::size_t kWorkers = 10;

}  // namespace

nlohmann::ordered_json SeedReport::to_json() const {
  nlohmann::ordered_json j;
  j["problems"] = problems;
  j["entries"] = entries;
  j["missing_body"] = missing_body;
  j["distill_failures"] = distill_failures;
  j["word_limit_warnings"] = word_limit_warnings;
  j["taxonomy_failures"] = taxonomy_failures;
  j["appended"] = appended;
  j["duplicates"] = duplicates;
  j["errors"] = errors;
  return j;
}

SeedReport seed_dataset(const std::vector<CorpusProblem>& corpus, llm::Gateway& gateway,
                        taxonomy::HierarchyCache& cache, Dataset& dataset, std::size_t word_limit) {
  SeedReport report;
  WordLimits limits;
  limits.seed = word_limit;

  struct Job {
    const Problem* problem;
    std::string organism;
    StrategyPage page;
  };
  std::vector<Job> jobs;
  for (const auto& cp : corpus) {
    ++report.problems;
    dataset.add_problem(cp.problem);
    for (std::size_t i = 0; i < cp.entries.size(); ++i) {
      StrategyPage page = cp.pages[i].value_or(StrategyPage{});
      std::string organism = text::trim(page.organism);
      if (organism.empty()) organism = text::trim(cp.entries[i].organism_name);
      if (organism.empty()) {
        report.errors.push_back(cp.problem.id + " card " + std::to_string(i + 1) + ": no organism name");
        ++report.distill_failures;
        continue;
      }
      if (text::trim(page.body_text).empty()) ++report.missing_body;
      jobs.push_back({&cp.problem, std::move(organism), std::move(page)});
    }
  }
  report.entries = jobs.size() + report.distill_failures;

  struct Distilled {
    std::optional<MechanismRecord> record;
    bool warned = false;
    std::string error;
  };
  auto distilled = parallel_map<Distilled>(jobs.size(), kWorkers, [&](std::size_t i) {
    Distilled d;
    try {
      auto out = distill_seed(gateway, *jobs[i].problem, jobs[i].organism, jobs[i].page, word_limit);
      d.warned = !out.report.empty();
      d.record = std::move(out.record);
    } catch (const std::exception& e) {
      d.error = jobs[i].problem->id + " / " + jobs[i].organism + ": " + e.what();
    }
    return d;
  });

  std::map<std::string, std::string> organisms;
  for (const auto& d : distilled) {
    if (d.record) organisms.emplace(d.record->organism.name(), d.record->organism.display_name());
  }
  taxonomy::HierarchyFetcher fetcher(gateway, cache);
  const std::vector<std::pair<std::string, std::string>> wanted(organisms.begin(), organisms.end());
  const auto hierarchies = parallel_map<std::optional<TaxonomicHierarchy>>(
      wanted.size(), kWorkers, [&](std::size_t i) -> std::optional<TaxonomicHierarchy> {
        try {
          return fetcher.fetch(wanted[i].second);
        } catch (const std::exception& e) {
          spdlog::warn("seed: taxonomy lookup for '{}' failed: {}", wanted[i].first, e.what());
          return std::nullopt;
        }
      });
  std::map<std::string, std::optional<TaxonomicHierarchy>> resolved;
  for (std::size_t i = 0; i < wanted.size(); ++i) resolved[wanted[i].first] = hierarchies[i];

  std::vector<MechanismRecord> batch;
  for (auto& d : distilled) {
    if (!d.record) {
      ++report.distill_failures;
      report.errors.push_back(d.error);
      spdlog::warn("seed: {}", d.error);
      continue;
    }
    if (d.warned) ++report.word_limit_warnings;
    if (const auto& h = resolved[d.record->organism.name()]) {
      d.record->taxonomy = *h;
    } else {
      ++report.taxonomy_failures;
    }
    batch.push_back(std::move(*d.record));
  }
  const auto appended = dataset.append(batch, limits);
  report.appended = appended.accepted;
  report.duplicates = appended.rejected_duplicates;
  return report;
}

}  // namespace biomech::ingest
