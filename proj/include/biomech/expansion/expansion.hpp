#pragma once

#include "biomech/core/dataset.hpp"
#include "biomech/llm/gateway.hpp"
#include "biomech/taxonomy/hierarchy.hpp"
#include "biomech/taxonomy/tree.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace biomech::expansion {

enum class Strategy : std::uint8_t { breadth, depth };

std::string_view strategy_name(Strategy s);
RecordSource source_for(Strategy s);

/// Which rank the tree is cut at for a given batch. The default rotates
/// class, order, family; genus is rejected since depth items need a child rank.
class RankPolicy {
 public:
  static RankPolicy rotate() { return RankPolicy(std::nullopt); }
  static RankPolicy fixed(Rank rank);
  /// "rotate" or "fixed:<rank>".
  static RankPolicy parse(std::string_view text);

  Rank for_batch(std::size_t batch_number) const;
  std::string describe() const;

 private:
  explicit RankPolicy(std::optional<Rank> fixed) : fixed_(fixed) {}
  std::optional<Rank> fixed_;
};

struct ExpansionConfig {
  std::size_t batches_per_run = 10;
  RankPolicy rank_policy = RankPolicy::rotate();
  std::size_t word_limit = 14;
  std::size_t max_exclusions = 50;
  std::size_t max_entries_per_reply = 10;
  taxonomy::SortKey sort_key = taxonomy::SortKey::immediate_children;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kItemsPerBatch = 10;
inline constexpr std::size_t kDepthItemsPerBatch = 5;

struct ExpansionItem {
  Strategy strategy = Strategy::breadth;
  Rank rank = Rank::klass;              // breadth: rank asked for; depth: parent rank
  std::string target;                   // depth only: parent node name
  std::string target_path;              // depth only
  std::vector<std::string> excluded;
  llm::TemplateId template_id = llm::TemplateId::expand_breadth;
  llm::Bindings bindings;
  llm::RenderedPrompt prompt;
};

struct ExpansionPlan {
  std::string batch_id;
  std::string problem;
  Rank reference_rank = Rank::klass;
  std::vector<ExpansionItem> items;
};

/// Text shared by both expansion templates.
struct PromptContext {
  std::string problem_title;
  std::string example_mechanism;
  std::string example_organism;
  std::size_t word_limit = 14;
};

/// "insecta, aves"; the template wraps it in braces.
std::string format_exclusions(const std::vector<std::string>& names);

llm::Bindings breadth_bindings(const PromptContext& ctx, Rank rank, const std::vector<std::string>& excluded);
/// Throws Error when `parent_rank` is genus (there is no child rank to ask for).
llm::Bindings depth_bindings(const PromptContext& ctx, Rank parent_rank, const std::string& parent_name,
                             const std::vector<std::string>& excluded_children);

llm::RenderedPrompt build_breadth_prompt(const PromptContext& ctx, Rank rank,
                                         const std::vector<std::string>& excluded);
llm::RenderedPrompt build_depth_prompt(const PromptContext& ctx, Rank parent_rank, const std::string& parent_name,
                                       const std::vector<std::string>& excluded_children);

std::string batch_id(std::string_view problem, std::size_t batch_number);

/// Five depth items on the least populated nodes at the reference rank
/// (cycling when fewer exist) and five breadth items excluding the most
/// populated ones. `examples` supplies the example mechanism, cycled by item.
/// Throws Error on an empty tree or empty examples.
ExpansionPlan plan_batch(const taxonomy::TaxonomicTree& tree, const Problem& problem,
                         std::span<const MechanismRecord> examples, const ExpansionConfig& config,
                         std::size_t batch_number, std::mt19937_64& rng);

struct ItemOutcome {
  std::size_t entries = 0;
  std::size_t dropped_entries = 0;
  std::optional<std::string> completion_error;
  std::optional<std::string> parse_error;
};

struct IterationReport {
  std::string batch_id;
  Rank reference_rank = Rank::klass;
  std::size_t new_records = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t invalid_dropped = 0;
  std::size_t word_limit_warnings = 0;
  std::size_t taxonomy_failures = 0;
  std::size_t completion_failures = 0;
  std::size_t parse_failures = 0;
  std::vector<ItemOutcome> items;
  ExpansionPlan plan;

  nlohmann::ordered_json to_json() const;
};

/// Everything an iteration talks to.
struct Services {
  llm::Gateway& gateway;
  taxonomy::HierarchyCache& cache;
};

/// One batch: tree, plan, completions, structuring, taxonomy, append. Results
/// are merged in (item, entry) order so arrival order never matters.
/// Throws Error when no record of the problem has a taxonomy, and when every
/// expansion completion fails.
IterationReport run_iteration(Dataset& dataset, const Problem& problem, const ExpansionConfig& config,
                              Services services, std::size_t batch_number);

/// Highest "<problem>:batch-<k>" seen in the dataset plus one; 0 when none.
std::size_t next_batch_number(const Dataset& dataset, std::string_view problem);

using IterationCallback = std::function<void(const Dataset&, const IterationReport&)>;

/// `config.batches_per_run` sequential iterations, numbered from
/// next_batch_number. `after_each` runs after every iteration (persistence).
std::vector<IterationReport> run_pipeline(Dataset& dataset, const Problem& problem, const ExpansionConfig& config,
                                          Services services, const IterationCallback& after_each = nullptr);

}  // namespace biomech::expansion
