#pragma once

#include "biomech/core/dataset.hpp"
#include "biomech/llm/gateway.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace biomech::eval {

struct GoldEntry {
  std::string organism;  // lowercase name
  TaxonomicHierarchy hierarchy;
};

struct GoldTaxonomySet {
  std::string source_note;
  std::vector<GoldEntry> entries;

  /// {"source": ..., "entries": [{"organism": ..., "hierarchy": {...}}]}.
  /// Throws ParseError on duplicates, incomplete hierarchies or an empty set.
  static GoldTaxonomySet from_json(const nlohmann::json& j);
  static GoldTaxonomySet load(const std::filesystem::path& path);
};

struct RankAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double percentage = 0.0;  // 100 * correct / total, one decimal

  /// "96.7% (87/90)"
  std::string describe() const;
};

struct AccuracyTable {
  std::array<RankAccuracy, kRankCount> ranks{};

  const RankAccuracy& at(Rank r) const { return ranks[rank_index(r)]; }
  nlohmann::ordered_json to_json() const;
  /// Two-line markdown table, ranks as columns.
  std::string to_markdown(const std::string& row_label) const;
};

double round_to_tenth(double value);

/// Predictions keyed by lowercase organism name; nullopt or absent counts as
/// wrong at every rank. Throws Error on an empty gold set.
using Predictions = std::map<std::string, std::optional<TaxonomicHierarchy>>;
AccuracyTable score_taxonomy(const Predictions& predictions, const GoldTaxonomySet& gold);

struct Mismatch {
  std::string organism;
  Rank rank = Rank::domain;
  std::string expected;
  std::string predicted;  // empty when there was no prediction
};

struct TaxonomyEvalResult {
  AccuracyTable table;
  Predictions predictions;
  std::vector<Mismatch> mismatches;                         // gold order, then rank order
  std::vector<std::pair<std::string, std::string>> failures;  // organism, error

  nlohmann::ordered_json to_json() const;
};

std::vector<Mismatch> diff_predictions(const Predictions& predictions, const GoldTaxonomySet& gold);

/// One zero-shot taxonomy lookup per gold organism (no shared cache), then
/// scoring. Lookup failures are recorded and scored as misses.
TaxonomyEvalResult run_taxonomy_eval(const GoldTaxonomySet& gold, llm::Gateway& gateway,
                                     std::size_t workers = 10);

/// nullopt selects the organism level.
struct DiversityLevel {
  std::optional<Rank> rank;

  /// A rank name, or "organism" / "species".
  static DiversityLevel parse(std::string_view name);
  std::string name() const;
};

struct DiversityPoint {
  std::size_t index = 0;
  double mean_unique = 0.0;
};

struct DiversityCurve {
  DiversityLevel level;
  std::vector<std::string> problems;
  std::vector<DiversityPoint> points;

  /// "index,mean_unique" header, one row per point.
  std::string to_csv() const;
};

/// Cumulative distinct names at the level within each problem, averaged
/// across problems at every generation index, truncated at the shortest
/// problem. Records without a taxonomy add no name at rank levels.
/// Throws Error when a problem has no records or the list is empty.
DiversityCurve diversity_curve(const Dataset& dataset, const std::vector<std::string>& problems,
                               DiversityLevel level);

/// The five problems used for the diversity evaluation.
const std::vector<std::string>& default_eval_problems();

}  // namespace biomech::eval
