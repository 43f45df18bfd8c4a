#include "biomech/core/record.hpp"

#include "biomech/core/error.hpp"
#include "biomech/core/text.hpp"

#include <algorithm>
#include <cctype>

namespace biomech {

using nlohmann::json;
using nlohmann::ordered_json;

Problem Problem::from_slug(std::string_view slug) {
  return Problem{std::string(slug), text::title_from_slug(slug)};
}

bool is_valid_problem_id(std::string_view id) {
  if (id.empty() || id.front() == '-' || id.back() == '-') return false;
  char prev = '\0';
  for (char c : id) {
    const auto uc = static_cast<unsigned char>(c);
    const bool ok = (std::islower(uc) != 0) || (std::isdigit(uc) != 0) || c == '-';
    if (!ok || (c == '-' && prev == '-')) return false;
    prev = c;
  }
  return true;
}

Organism::Organism(std::string display_name)
    : display_name_(std::move(display_name)), name_(text::to_lower(text::trim(display_name_))) {}

namespace {

constexpr std::array<std::string_view, kRankCount> kRankNames = {
    "domain", "kingdom", "phylum", "class", "order", "family", "genus"};
constexpr std::array<std::string_view, kRankCount> kRankPlurals = {
    "domains", "kingdoms", "phyla", "classes", "orders", "families", "genera"};
constexpr std::array<std::string_view, 4> kSourceNames = {
    "seed-asknature", "seed-missing-body", "expansion-breadth", "expansion-depth"};

}  // namespace

std::string_view rank_name(Rank rank) { return kRankNames[rank_index(rank)]; }
std::string_view rank_plural(Rank rank) { return kRankPlurals[rank_index(rank)]; }

std::optional<Rank> parse_rank(std::string_view name) {
  const std::string lower = text::to_lower(text::trim(name));
  for (Rank r : kAllRanks) {
    if (rank_name(r) == lower) return r;
  }
  return std::nullopt;
}

std::optional<Rank> child_rank(Rank rank) {
  if (rank == Rank::genus) return std::nullopt;
  return static_cast<Rank>(rank_index(rank) + 1);
}

TaxonomicHierarchy::TaxonomicHierarchy(std::array<std::string, kRankCount> names) {
  for (std::size_t i = 0; i < kRankCount; ++i) {
    names_[i] = text::to_lower(text::trim(names[i]));
    if (names_[i].empty()) {
      throw ValidationError("taxonomy rank '" + std::string(kRankNames[i]) + "' is empty");
    }
  }
}

bool TaxonomicHierarchy::complete() const {
  return std::none_of(names_.begin(), names_.end(), [](const auto& n) { return n.empty(); });
}

std::string_view source_name(RecordSource source) {
  return kSourceNames[static_cast<std::size_t>(source)];
}

std::optional<RecordSource> parse_source(std::string_view name) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i) {
    if (kSourceNames[i] == name) return static_cast<RecordSource>(i);
  }
  return std::nullopt;
}

bool is_seed(RecordSource source) {
  return source == RecordSource::seed_asknature || source == RecordSource::seed_missing_body;
}

MechanismRecord make_record(std::string problem, std::string mechanism, std::string organism,
                            RecordSource source) {
  MechanismRecord r;
  r.problem = std::move(problem);
  r.mechanism = text::trim(mechanism);
  r.organism = Organism(text::trim(organism));
  r.source = source;
  r.word_count = text::word_count(r.mechanism);
  r.id = record_id_for(r);
  return r;
}

std::string dedup_key(const MechanismRecord& record) {
  std::string key = record.problem;
  key.push_back('\x1f');
  key += record.organism.name();
  key.push_back('\x1f');
  key += text::normalize_for_dedup(record.mechanism);
  return key;
}

std::string record_id_for(const MechanismRecord& record) {
  return text::sha256_hex(dedup_key(record)).substr(0, 16);
}

ordered_json taxonomy_to_json(const TaxonomicHierarchy& hierarchy) {
  ordered_json j = ordered_json::object();
  for (Rank r : kAllRanks) j[std::string(rank_name(r))] = hierarchy.at(r);
  return j;
}

TaxonomicHierarchy taxonomy_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("taxonomy must be an object");
  std::array<std::string, kRankCount> names;
  for (Rank r : kAllRanks) {
    const auto it = j.find(std::string(rank_name(r)));
    if (it == j.end() || !it->is_string()) {
      throw ParseError("taxonomy missing rank '" + std::string(rank_name(r)) + "'");
    }
    names[rank_index(r)] = it->get<std::string>();
  }
  try {
    return TaxonomicHierarchy(std::move(names));
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
}

ordered_json to_json(const MechanismRecord& record) {
  ordered_json j;
  j["id"] = record.id;
  j["problem"] = record.problem;
  j["mechanism"] = record.mechanism;
  j["organism"] = record.organism.display_name();
  if (record.taxonomy) j["taxonomy"] = taxonomy_to_json(*record.taxonomy);
  j["generation_index"] = record.generation_index;
  j["source"] = source_name(record.source);
  if (record.parent_batch) j["parent_batch"] = *record.parent_batch;
  j["word_count"] = record.word_count;
  if (record.image_url) j["image_url"] = *record.image_url;
  if (record.cluster_id) j["cluster_id"] = *record.cluster_id;
  return j;
}

namespace {

template <typename T>
T required(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end()) throw ParseError(std::string("missing field '") + field + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("field '") + field + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("field '") + field + "' has the wrong type");
  }
}

}  // namespace

MechanismRecord record_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("record must be a JSON object");
  MechanismRecord r;
  r.id = required<std::string>(j, "id");
  r.problem = required<std::string>(j, "problem");
  r.mechanism = required<std::string>(j, "mechanism");
  r.organism = Organism(required<std::string>(j, "organism"));
  if (const auto it = j.find("taxonomy"); it != j.end()) r.taxonomy = taxonomy_from_json(*it);
  r.generation_index = required<std::uint64_t>(j, "generation_index");
  const auto source = required<std::string>(j, "source");
  const auto parsed = parse_source(source);
  if (!parsed) throw ParseError("unknown source '" + source + "'");
  r.source = *parsed;
  r.parent_batch = optional_field<std::string>(j, "parent_batch");
  r.word_count = required<std::uint64_t>(j, "word_count");
  r.image_url = optional_field<std::string>(j, "image_url");
  r.cluster_id = optional_field<int>(j, "cluster_id");
  return r;
}

}  // namespace biomech
