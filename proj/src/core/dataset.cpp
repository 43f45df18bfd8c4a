#include "biomech/core/dataset.hpp"

#include "biomech/core/error.hpp"
#include "biomech/core/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace biomech {

using nlohmann::json;
using nlohmann::ordered_json;

bool ValidationReport::has_errors() const {
  return std::any_of(issues.begin(), issues.end(),
                     [](const ValidationIssue& i) { return i.severity == Severity::error; });
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < issues.size(); ++i) {
    if (i > 0) out << "; ";
    out << (issues[i].severity == Severity::error ? "error" : "warning") << " ["
        << issues[i].field << "] " << issues[i].message;
  }
  return out.str();
}

ValidationReport validate_record(const MechanismRecord& record, const WordLimits& limits) {
  ValidationReport report;
  auto error = [&](std::string field, std::string message) {
    report.issues.push_back({std::move(field), Severity::error, std::move(message)});
  };

  if (record.id.empty()) error("id", "id is empty");
  if (!is_valid_problem_id(record.problem)) {
    error("problem", "problem id '" + record.problem + "' is not a lowercase hyphenated slug");
  }
  if (text::trim(record.mechanism).empty()) error("mechanism", "mechanism is empty");
  if (record.organism.name().empty()) error("organism", "organism name is empty");
  if (record.taxonomy && !record.taxonomy->complete()) error("taxonomy", "taxonomy is incomplete");

  const std::size_t actual = text::word_count(record.mechanism);
  if (record.word_count != actual) {
    error("word_count", "word_count " + std::to_string(record.word_count) +
                            " != recomputed " + std::to_string(actual));
  }
  const std::size_t limit = limits.for_source(record.source);
  if (actual > limit) {
    report.issues.push_back({"mechanism", Severity::warning,
                             "word_count " + std::to_string(actual) + " > " +
                                 std::to_string(limit)});
  }
  return report;
}

void Dataset::add_problem(const Problem& problem) {
  if (find_problem(problem.id) == nullptr) problems_.push_back(problem);
}

const Problem* Dataset::find_problem(std::string_view id) const {
  const auto it = std::find_if(problems_.begin(), problems_.end(),
                               [&](const Problem& p) { return p.id == id; });
  return it == problems_.end() ? nullptr : &*it;
}

AppendResult Dataset::append(std::span<const MechanismRecord> batch, const WordLimits& limits) {
  std::ostringstream errors;
  bool invalid = false;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto report = validate_record(batch[i], limits);
    if (report.has_errors()) {
      invalid = true;
      errors << "record " << i << ": " << report.summary() << "\n";
    }
  }
  if (invalid) throw ValidationError("batch rejected:\n" + errors.str());

  AppendResult result;
  for (const auto& candidate : batch) {
    if (contains_key(dedup_key(candidate)) || id_index_.count(candidate.id) != 0) {
      ++result.rejected_duplicates;
      continue;
    }
    MechanismRecord record = candidate;
    auto [it, inserted] = next_index_.try_emplace(record.problem, 0);
    record.generation_index = it->second;
    insert_unchecked(std::move(record));
    ++result.accepted;
  }
  return result;
}

void Dataset::insert_unchecked(MechanismRecord record) {
  if (find_problem(record.problem) == nullptr) add_problem(Problem::from_slug(record.problem));
  dedup_index_.insert(dedup_key(record));
  id_index_.emplace(record.id, records_.size());
  next_index_[record.problem] = record.generation_index + 1;
  records_.push_back(std::move(record));
}

const MechanismRecord* Dataset::find(std::string_view id) const {
  const auto it = id_index_.find(std::string(id));
  return it == id_index_.end() ? nullptr : &records_[it->second];
}

MechanismRecord& Dataset::mutable_record(std::string_view id) {
  const auto it = id_index_.find(std::string(id));
  if (it == id_index_.end()) throw NotFoundError("unknown record id '" + std::string(id) + "'");
  return records_[it->second];
}

std::vector<const MechanismRecord*> Dataset::records_for(std::string_view problem) const {
  std::vector<const MechanismRecord*> out;
  for (const auto& r : records_) {
    if (r.problem == problem) out.push_back(&r);
  }
  return out;
}

std::size_t Dataset::count_for(std::string_view problem) const {
  const auto it = next_index_.find(problem);
  return it == next_index_.end() ? 0 : static_cast<std::size_t>(it->second);
}

void Dataset::set_taxonomy(std::string_view id, const TaxonomicHierarchy& taxonomy) {
  if (!taxonomy.complete()) throw ValidationError("refusing to store an incomplete taxonomy");
  mutable_record(id).taxonomy = taxonomy;
}

void Dataset::set_cluster_id(std::string_view id, std::optional<int> cluster_id) {
  mutable_record(id).cluster_id = cluster_id;
}

void Dataset::set_image_url(std::string_view id, std::optional<std::string> url) {
  mutable_record(id).image_url = std::move(url);
}

std::filesystem::path problems_sidecar_path(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p += ".problems.json";
  return p;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");

  Dataset dataset;
  const auto sidecar = problems_sidecar_path(path);
  if (std::filesystem::exists(sidecar)) {
    std::ifstream side(sidecar, std::ios::binary);
    try {
      const json problems = json::parse(side);
      for (const auto& p : problems) {
        dataset.add_problem(Problem{p.at("id").get<std::string>(), p.at("title").get<std::string>()});
      }
    } catch (const json::exception& e) {
      throw ParseError(sidecar.string() + ": " + e.what());
    }
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fail = [&](const std::string& what) -> ParseError {
      return ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    MechanismRecord record;
    try {
      record = record_from_json(json::parse(line));
    } catch (const json::parse_error& e) {
      throw fail(std::string("malformed JSON: ") + e.what());
    } catch (const ParseError& e) {
      throw fail(e.what());
    }
    if (dataset.contains_key(dedup_key(record))) throw fail("duplicate record (dedup key)");
    if (dataset.find(record.id) != nullptr) throw fail("duplicate id '" + record.id + "'");
    const auto expected = dataset.count_for(record.problem);
    if (record.generation_index != expected) {
      throw fail("generation_index " + std::to_string(record.generation_index) +
                 " out of sequence for problem '" + record.problem + "' (expected " +
                 std::to_string(expected) + ")");
    }
    dataset.insert_unchecked(std::move(record));
  }
  return dataset;
}

namespace {

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::string body;
  for (const auto& r : dataset.records()) {
    body += to_json(r).dump();
    body.push_back('\n');
  }
  ordered_json problems = ordered_json::array();
  for (const auto& p : dataset.problems()) problems.push_back({{"id", p.id}, {"title", p.title}});
  write_atomically(problems_sidecar_path(path), problems.dump(2) + "\n");
  write_atomically(path, body);
}

}  // namespace biomech
