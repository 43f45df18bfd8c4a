#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "biomech/core/error.hpp"

namespace biomech {

/// A functional design problem, e.g. {"manage-turbulence", "Manage Turbulence"}.
struct Problem {
  std::string id;
  std::string title;

  static Problem from_slug(std::string_view slug);
  bool operator==(const Problem&) const = default;
};

bool is_valid_problem_id(std::string_view id);

/// Organism identity is the lowercased, trimmed display name.
class Organism {
 public:
  Organism() = default;
  explicit Organism(std::string display_name);

  const std::string& name() const { return name_; }
  const std::string& display_name() const { return display_name_; }

  bool operator==(const Organism& other) const { return display_name_ == other.display_name_; }

 private:
  std::string display_name_;
  std::string name_;
};

/// Linnaean ranks used for trees, ordered from the highest to the lowest level.
enum class Rank : std::uint8_t { domain, kingdom, phylum, klass, order, family, genus };

inline constexpr std::size_t kRankCount = 7;
inline constexpr std::array<Rank, kRankCount> kAllRanks = {
    Rank::domain, Rank::kingdom, Rank::phylum, Rank::klass,
    Rank::order,  Rank::family,  Rank::genus};

std::string_view rank_name(Rank rank);
/// "classes", "families", "genera", ...
std::string_view rank_plural(Rank rank);
std::optional<Rank> parse_rank(std::string_view name);
std::optional<Rank> child_rank(Rank rank);
inline std::size_t rank_index(Rank rank) { return static_cast<std::size_t>(rank); }

/// One organism's seven-rank classification. Names are stored lowercase.
class TaxonomicHierarchy {
 public:
  TaxonomicHierarchy() = default;
  /// Throws ValidationError when any name is empty.
  explicit TaxonomicHierarchy(std::array<std::string, kRankCount> names);

  const std::string& at(Rank rank) const { return names_[rank_index(rank)]; }
  const std::array<std::string, kRankCount>& names() const { return names_; }
  bool complete() const;

  bool operator==(const TaxonomicHierarchy&) const = default;

 private:
  std::array<std::string, kRankCount> names_;
};

enum class RecordSource : std::uint8_t {
  seed_asknature,
  seed_missing_body,
  expansion_breadth,
  expansion_depth
};

std::string_view source_name(RecordSource source);
std::optional<RecordSource> parse_source(std::string_view name);
bool is_seed(RecordSource source);

/// One (problem, mechanism, organism) triple plus provenance.
struct MechanismRecord {
  std::string id;
  std::string problem;
  std::string mechanism;
  Organism organism;
  std::optional<TaxonomicHierarchy> taxonomy;
  std::uint64_t generation_index = 0;
  RecordSource source = RecordSource::seed_asknature;
  std::optional<std::string> parent_batch;
  std::uint64_t word_count = 0;
  std::optional<std::string> image_url;
  std::optional<int> cluster_id;

  bool operator==(const MechanismRecord&) const = default;
};

/// Builds a record with word_count computed and id derived from the dedup key.
MechanismRecord make_record(std::string problem, std::string mechanism, std::string organism,
                            RecordSource source);

/// problem + organism name + normalized mechanism, separated by U+001F.
std::string dedup_key(const MechanismRecord& record);
/// First 16 hex digits of SHA-256 over the dedup key.
std::string record_id_for(const MechanismRecord& record);

nlohmann::ordered_json taxonomy_to_json(const TaxonomicHierarchy& hierarchy);
/// Throws ParseError on missing or non-string ranks.
TaxonomicHierarchy taxonomy_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const MechanismRecord& record);
/// Throws ParseError on missing required fields or bad enum values.
MechanismRecord record_from_json(const nlohmann::json& j);

}  // namespace biomech
