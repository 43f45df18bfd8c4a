#include "biomech/expansion/expansion.hpp"

#include "biomech/core/parallel.hpp"
#include "biomech/core/text.hpp"
#include "biomech/llm/errors.hpp"
#include "biomech/llm/structured.hpp"

#include <spdlog/spdlog.h>

#include <map>
#include <regex>
#include <set>

namespace biomech::expansion {

namespace {

constexpr Rank kRotation[] = {Rank::klass, Rank::order, Rank::family};
constexpr std::size_t kTaxonomyWorkers = 16;

}  // namespace

std::string_view strategy_name(Strategy s) { return s == Strategy::breadth ? "breadth" : "depth"; }

RecordSource source_for(Strategy s) {
  return s == Strategy::breadth ? RecordSource::expansion_breadth : RecordSource::expansion_depth;
}

RankPolicy RankPolicy::fixed(Rank rank) {
  if (rank == Rank::genus) throw ValidationError("rank policy: genus has no child rank for depth expansion");
  return RankPolicy(rank);
}

RankPolicy RankPolicy::parse(std::string_view text) {
  if (text == "rotate") return rotate();
  constexpr std::string_view kFixed = "fixed:";
  if (text.substr(0, kFixed.size()) == kFixed) {
    const auto rank = parse_rank(text.substr(kFixed.size()));
    if (!rank) throw ValidationError("rank policy: unknown rank '" + std::string(text.substr(kFixed.size())) + "'");
    return fixed(*rank);
  }
  throw ValidationError("rank policy must be 'rotate' or 'fixed:<rank>', got '" + std::string(text) + "'");
}

Rank RankPolicy::for_batch(std::size_t batch_number) const {
  if (fixed_) return *fixed_;
  return kRotation[batch_number % std::size(kRotation)];
}

std::string RankPolicy::describe() const {
  return fixed_ ? "fixed:" + std::string(rank_name(*fixed_)) : "rotate";
}

std::string format_exclusions(const std::vector<std::string>& names) { return text::join(names, ", "); }

llm::Bindings breadth_bindings(const PromptContext& ctx, Rank rank, const std::vector<std::string>& excluded) {
  return {{"problem", ctx.problem_title},
          {"example_mechanism", ctx.example_mechanism},
          {"example_organism", ctx.example_organism},
          {"rank_plural", std::string(rank_plural(rank))},
          {"excluded", format_exclusions(excluded)},
          {"word_limit", std::to_string(ctx.word_limit)}};
}

llm::Bindings depth_bindings(const PromptContext& ctx, Rank parent_rank, const std::string& parent_name,
                             const std::vector<std::string>& excluded_children) {
  const auto child = child_rank(parent_rank);
  if (!child) throw Error("depth expansion: " + std::string(rank_name(parent_rank)) + " has no child rank");
  return {{"problem", ctx.problem_title},
          {"example_mechanism", ctx.example_mechanism},
          {"example_organism", ctx.example_organism},
          {"child_rank_plural", std::string(rank_plural(*child))},
          {"parent_rank", std::string(rank_name(parent_rank))},
          {"parent_name", parent_name},
          {"excluded", format_exclusions(excluded_children)},
          {"word_limit", std::to_string(ctx.word_limit)}};
}

llm::RenderedPrompt build_breadth_prompt(const PromptContext& ctx, Rank rank,
                                         const std::vector<std::string>& excluded) {
  return llm::render_prompt(llm::TemplateId::expand_breadth, breadth_bindings(ctx, rank, excluded));
}

llm::RenderedPrompt build_depth_prompt(const PromptContext& ctx, Rank parent_rank, const std::string& parent_name,
                                       const std::vector<std::string>& excluded_children) {
  return llm::render_prompt(llm::TemplateId::expand_depth,
                            depth_bindings(ctx, parent_rank, parent_name, excluded_children));
}

std::string batch_id(std::string_view problem, std::size_t batch_number) {
  return std::string(problem) + ":batch-" + std::to_string(batch_number);
}

ExpansionPlan plan_batch(const taxonomy::TaxonomicTree& tree, const Problem& problem,
                         std::span<const MechanismRecord> examples, const ExpansionConfig& config,
                         std::size_t batch_number, std::mt19937_64& rng) {
  const Rank rank = config.rank_policy.for_batch(batch_number);
  const auto ranked = taxonomy::cut_and_rank(tree, rank, config.sort_key);
  if (ranked.empty()) {
    throw Error("problem '" + problem.id + "' has no classified records to expand from; run seeding first");
  }
  if (examples.empty()) throw Error("problem '" + problem.id + "' has no example mechanisms");

  ExpansionPlan plan;
  plan.batch_id = batch_id(problem.id, batch_number);
  plan.problem = problem.id;
  plan.reference_rank = rank;

  const auto crowded = taxonomy::most_populated(tree, rank, config.max_exclusions, config.sort_key);
  auto context_for = [&](std::size_t item) {
    const auto& ex = examples[item % examples.size()];
    return PromptContext{problem.title, ex.mechanism, ex.organism.display_name(), config.word_limit};
  };

  // Depth first, so items 0..4 are depth and 5..9 breadth.
  for (std::size_t i = 0; i < kDepthItemsPerBatch; ++i) {
    const taxonomy::TreeNode& node = *ranked[i % ranked.size()];
    ExpansionItem item;
    item.strategy = Strategy::depth;
    item.rank = rank;
    item.target = node.name;
    item.target_path = node.path();
    item.excluded = taxonomy::sample_children(node, config.max_exclusions, rng());
    item.template_id = llm::TemplateId::expand_depth;
    item.bindings = depth_bindings(context_for(i), rank, node.name, item.excluded);
    item.prompt = llm::render_prompt(item.template_id, item.bindings);
    plan.items.push_back(std::move(item));
  }
  for (std::size_t i = kDepthItemsPerBatch; i < kItemsPerBatch; ++i) {
    ExpansionItem item;
    item.strategy = Strategy::breadth;
    item.rank = rank;
    item.excluded = crowded;
    item.template_id = llm::TemplateId::expand_breadth;
    item.bindings = breadth_bindings(context_for(i), rank, item.excluded);
    item.prompt = llm::render_prompt(item.template_id, item.bindings);
    plan.items.push_back(std::move(item));
  }
  return plan;
}

nlohmann::ordered_json IterationReport::to_json() const {
  nlohmann::ordered_json j;
  j["batch_id"] = batch_id;
  j["reference_rank"] = rank_name(reference_rank);
  j["new_records"] = new_records;
  j["duplicates_dropped"] = duplicates_dropped;
  j["invalid_dropped"] = invalid_dropped;
  j["word_limit_warnings"] = word_limit_warnings;
  j["taxonomy_failures"] = taxonomy_failures;
  j["completion_failures"] = completion_failures;
  j["parse_failures"] = parse_failures;
  auto items_json = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < plan.items.size(); ++i) {
    const auto& item = plan.items[i];
    nlohmann::ordered_json ij;
    ij["strategy"] = strategy_name(item.strategy);
    ij["rank"] = rank_name(item.rank);
    if (item.strategy == Strategy::depth) ij["target"] = item.target_path;
    ij["excluded"] = item.excluded;
    if (i < items.size()) {
      ij["entries"] = items[i].entries;
      ij["dropped_entries"] = items[i].dropped_entries;
      if (items[i].completion_error) ij["completion_error"] = *items[i].completion_error;
      if (items[i].parse_error) ij["parse_error"] = *items[i].parse_error;
    }
    items_json.push_back(std::move(ij));
  }
  j["items"] = std::move(items_json);
  return j;
}

namespace {

struct ItemResult {
  ItemOutcome outcome;
  std::vector<llm::MechanismPair> pairs;
};

ItemResult run_item(llm::Gateway& gateway, const ExpansionItem& item, std::size_t cap) {
  ItemResult result;
  std::string raw;
  try {
    raw = gateway.complete(item.template_id, item.bindings).text;
  } catch (const std::exception& e) {
    result.outcome.completion_error = e.what();
    return result;
  }
  try {
    const auto structured = gateway.complete(llm::TemplateId::structure_output, {{"raw", raw}}).text;
    auto list = llm::parse_structured_list(structured);
    result.outcome.dropped_entries = list.dropped;
    if (list.pairs.size() > cap) {
      result.outcome.dropped_entries += list.pairs.size() - cap;
      list.pairs.resize(cap);
    }
    result.pairs = std::move(list.pairs);
    result.outcome.entries = result.pairs.size();
  } catch (const std::exception& e) {
    result.outcome.parse_error = e.what();
  }
  return result;
}

}  // namespace

IterationReport run_iteration(Dataset& dataset, const Problem& problem, const ExpansionConfig& config,
                              Services services, std::size_t batch_number) {
  std::vector<MechanismRecord> existing;
  std::vector<MechanismRecord> examples;
  for (const MechanismRecord* r : dataset.records_for(problem.id)) {
    existing.push_back(*r);
    if (is_seed(r->source)) examples.push_back(*r);
  }
  if (examples.empty()) examples = existing;
  const auto tree = taxonomy::TaxonomicTree::build(existing);

  std::mt19937_64 rng(config.seed ^ (0x9e3779b97f4a7c15ULL * (batch_number + 1)));
  IterationReport report;
  report.plan = plan_batch(tree, problem, examples, config, batch_number, rng);
  report.batch_id = report.plan.batch_id;
  report.reference_rank = report.plan.reference_rank;

  const auto results = parallel_map<ItemResult>(report.plan.items.size(), kItemsPerBatch, [&](std::size_t i) {
    return run_item(services.gateway, report.plan.items[i], config.max_entries_per_reply);
  });

  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& o = results[i].outcome;
    if (o.completion_error) {
      ++report.completion_failures;
      spdlog::warn("{} item {}: completion failed: {}", report.batch_id, i, *o.completion_error);
    } else if (o.parse_error) {
      ++report.parse_failures;
      spdlog::warn("{} item {}: unparseable reply: {}", report.batch_id, i, *o.parse_error);
    }
    report.items.push_back(o);
  }
  if (report.completion_failures == results.size()) {
    throw Error(report.batch_id + ": all " + std::to_string(results.size()) + " expansion completions failed");
  }

  // Merge in (item, entry) order.
  std::vector<MechanismRecord> candidates;
  std::set<std::string> batch_keys;
  WordLimits limits;
  limits.expansion = config.word_limit;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto source = source_for(report.plan.items[i].strategy);
    for (const auto& pair : results[i].pairs) {
      auto record = make_record(problem.id, pair.mechanism, pair.organism, source);
      record.parent_batch = report.batch_id;
      const auto validation = validate_record(record, limits);
      if (validation.has_errors()) {
        ++report.invalid_dropped;
        spdlog::warn("{}: dropping invalid entry: {}", report.batch_id, validation.summary());
        continue;
      }
      if (!validation.empty()) ++report.word_limit_warnings;
      const auto key = dedup_key(record);
      if (dataset.contains_key(key) || !batch_keys.insert(key).second) {
        ++report.duplicates_dropped;
        continue;
      }
      candidates.push_back(std::move(record));
    }
  }

  // Organisms classified anywhere in the dataset are reused.
  for (const auto& r : dataset.records()) {
    if (r.taxonomy && !services.cache.get(r.organism.name())) services.cache.put(r.organism.name(), *r.taxonomy);
  }
  std::map<std::string, std::string> organisms;  // name -> display name of first mention
  for (const auto& c : candidates) organisms.emplace(c.organism.name(), c.organism.display_name());

  taxonomy::HierarchyFetcher fetcher(services.gateway, services.cache);
  const std::vector<std::pair<std::string, std::string>> wanted(organisms.begin(), organisms.end());
  const auto lookups = parallel_map<std::optional<TaxonomicHierarchy>>(
      wanted.size(), kTaxonomyWorkers, [&](std::size_t i) -> std::optional<TaxonomicHierarchy> {
        try {
          return fetcher.fetch(wanted[i].second);
        } catch (const std::exception& e) {
          spdlog::warn("{}: taxonomy lookup for '{}' failed: {}", report.batch_id, wanted[i].first, e.what());
          return std::nullopt;
        }
      });
  std::map<std::string, std::optional<TaxonomicHierarchy>> resolved;
  for (std::size_t i = 0; i < wanted.size(); ++i) resolved[wanted[i].first] = lookups[i];
  for (auto& c : candidates) {
    const auto& h = resolved[c.organism.name()];
    if (h) {
      c.taxonomy = *h;
    } else {
      ++report.taxonomy_failures;
    }
  }

  const auto appended = dataset.append(candidates, limits);
  report.new_records = appended.accepted;
  report.duplicates_dropped += appended.rejected_duplicates;
  return report;
}

std::size_t next_batch_number(const Dataset& dataset, std::string_view problem) {
  const std::string prefix = std::string(problem) + ":batch-";
  std::size_t next = 0;
  for (const MechanismRecord* r : dataset.records_for(problem)) {
    if (!r->parent_batch || r->parent_batch->rfind(prefix, 0) != 0) continue;
    const auto digits = r->parent_batch->substr(prefix.size());
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) continue;
    next = std::max<std::size_t>(next, std::stoull(digits) + 1);
  }
  return next;
}

std::vector<IterationReport> run_pipeline(Dataset& dataset, const Problem& problem, const ExpansionConfig& config,
                                          Services services, const IterationCallback& after_each) {
  std::vector<IterationReport> reports;
  const std::size_t first = next_batch_number(dataset, problem.id);
  for (std::size_t i = 0; i < config.batches_per_run; ++i) {
    reports.push_back(run_iteration(dataset, problem, config, services, first + i));
    const auto& r = reports.back();
    spdlog::info("{}: {} new, {} duplicates, {} taxonomy failures", r.batch_id, r.new_records,
                 r.duplicates_dropped, r.taxonomy_failures);
    if (after_each) after_each(dataset, r);
  }
  return reports;
}

}  // namespace biomech::expansion
