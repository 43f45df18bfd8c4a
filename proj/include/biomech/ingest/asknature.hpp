#pragma once

#include "biomech/core/dataset.hpp"
#include "biomech/core/error.hpp"
#include "biomech/core/record.hpp"
#include "biomech/llm/gateway.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace biomech::ingest {

/// Page layout drifted away from what the parsers expect.
class LayoutError : public ParseError {
 public:
  using ParseError::ParseError;
};

struct GroupEntry {
  std::string organism_name;
  std::string strategy_url;

  bool operator==(const GroupEntry&) const = default;
};

struct GroupPage {
  std::string problem_title;  // empty when the page has no heading
  std::vector<GroupEntry> entries;
};

struct StrategyPage {
  std::string organism;  // display name, may be empty
  std::string title;
  std::string body_text;  // "" when the post has no body
  std::vector<std::string> references;
  std::string url;
};

/// Strategy cards of a group-by-function page, in page order. Duplicates are
/// kept. Throws LayoutError when no card links are found.
GroupPage parse_group_page(std::string_view html);

/// Throws LayoutError when the page has no title.
StrategyPage parse_strategy_page(std::string_view html);

struct DistillOutcome {
  MechanismRecord record;
  ValidationReport report;  // word-limit warnings end up here
};

/// Distills a strategy post into a seed record via the distill-seed template,
/// or distill-seed-no-body when the post has no body text. The record has no
/// taxonomy yet.
DistillOutcome distill_seed(llm::Gateway& gateway, const Problem& problem,
                            const std::string& organism, const StrategyPage& page,
                            std::size_t word_limit = 12);

/// Problems skipped during seeding, matched by slug ("Adapt Behaviors" and
/// "adapt-behaviors" are the same entry).
class ProblemExclusions {
 public:
  ProblemExclusions() = default;
  explicit ProblemExclusions(std::vector<std::string> titles_or_slugs);
  static ProblemExclusions defaults();
  /// One title or slug per line; blank lines and '#' comments ignored.
  static ProblemExclusions from_file(const std::filesystem::path& path);

  bool excluded(std::string_view problem_id) const;
  const std::vector<std::string>& slugs() const { return slugs_; }

 private:
  std::vector<std::string> slugs_;
};

/// One problem directory of a corpus: problems/<slug>/group.html and
/// problems/<slug>/strategies/<n>.html, n being the 1-based card position.
struct CorpusProblem {
  Problem problem;
  std::vector<GroupEntry> entries;
  std::vector<std::optional<StrategyPage>> pages;  // parallel to entries; nullopt if missing
};

/// Reads every non-excluded problem under `<root>/problems`, sorted by slug.
std::vector<CorpusProblem> load_corpus(const std::filesystem::path& root,
                                       const ProblemExclusions& exclusions);

std::string read_file(const std::filesystem::path& path);

}  // namespace biomech::ingest
