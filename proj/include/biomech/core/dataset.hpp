#pragma once

#include "biomech/core/record.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace biomech {

/// Prompted word budgets. Exceeding them is reported as a warning only.
struct WordLimits {
  std::size_t seed = 12;
  std::size_t expansion = 14;

  std::size_t for_source(RecordSource source) const { return is_seed(source) ? seed : expansion; }
};

enum class Severity { error, warning };

struct ValidationIssue {
  std::string field;
  Severity severity = Severity::error;
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool empty() const { return issues.empty(); }
  bool has_errors() const;
  std::string summary() const;
};

ValidationReport validate_record(const MechanismRecord& record, const WordLimits& limits = {});

struct AppendResult {
  std::size_t accepted = 0;
  std::size_t rejected_duplicates = 0;
};

/// Append-only store of mechanism records for any number of problems.
///
/// Invariants: no two records share a dedup key or an id, and for each problem
/// the records carry generation_index 0..n-1 in insertion order. `append` is
/// the only way records enter; callers serialize writes.
class Dataset {
 public:
  const std::vector<Problem>& problems() const { return problems_; }
  const std::vector<MechanismRecord>& records() const { return records_; }

  /// Registers a problem (no-op when the id is already known).
  void add_problem(const Problem& problem);
  const Problem* find_problem(std::string_view id) const;

  /// Validates every record first; if any has errors nothing is appended and
  /// ValidationError is thrown. Accepted records get consecutive
  /// generation_index values per problem, in the order of `batch`.
  AppendResult append(std::span<const MechanismRecord> batch, const WordLimits& limits = {});

  bool contains_key(const std::string& key) const { return dedup_index_.count(key) != 0; }
  const MechanismRecord* find(std::string_view id) const;
  std::vector<const MechanismRecord*> records_for(std::string_view problem) const;
  std::size_t count_for(std::string_view problem) const;

  // Annotation setters. They never touch identity fields.
  void set_taxonomy(std::string_view id, const TaxonomicHierarchy& taxonomy);
  void set_cluster_id(std::string_view id, std::optional<int> cluster_id);
  void set_image_url(std::string_view id, std::optional<std::string> url);

  bool operator==(const Dataset& other) const {
    return problems_ == other.problems_ && records_ == other.records_;
  }

 private:
  friend Dataset load_dataset(const std::filesystem::path& path);

  MechanismRecord& mutable_record(std::string_view id);
  void insert_unchecked(MechanismRecord record);

  std::vector<Problem> problems_;
  std::vector<MechanismRecord> records_;
  std::unordered_set<std::string> dedup_index_;
  std::unordered_map<std::string, std::size_t> id_index_;
  std::map<std::string, std::uint64_t, std::less<>> next_index_;
};

/// Reads a JSONL dataset plus its optional `<path>.problems.json` sidecar.
/// Throws ParseError naming the 1-based line for malformed lines, duplicate
/// dedup keys or ids, and out-of-sequence generation indices.
Dataset load_dataset(const std::filesystem::path& path);

/// Writes the JSONL file atomically (temp file + rename) and the problems sidecar.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

std::filesystem::path problems_sidecar_path(const std::filesystem::path& dataset_path);

}  // namespace biomech
