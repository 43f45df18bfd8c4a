#include "biomech/evaluation/evaluation.hpp"

#include "biomech/core/parallel.hpp"
#include "biomech/core/text.hpp"
#include "biomech/taxonomy/hierarchy.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <set>

namespace biomech::eval {

using nlohmann::json;
using nlohmann::ordered_json;

GoldTaxonomySet GoldTaxonomySet::from_json(const json& j) {
  GoldTaxonomySet gold;
  try {
    gold.source_note = j.value("source", "");
    std::set<std::string> seen;
    for (const auto& e : j.at("entries")) {
      GoldEntry entry{text::to_lower(text::trim(e.at("organism").get<std::string>())),
                      taxonomy_from_json(e.at("hierarchy"))};
      if (entry.organism.empty()) throw ParseError("gold set: empty organism name");
      if (!seen.insert(entry.organism).second) throw ParseError("gold set: duplicate organism '" + entry.organism + "'");
      gold.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("gold set: ") + e.what());
  }
  if (gold.entries.empty()) throw ParseError("gold set is empty");
  return gold;
}

GoldTaxonomySet GoldTaxonomySet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open gold set '" + path.string() + "'");
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

double round_to_tenth(double value) { return std::round(value * 10.0) / 10.0; }

std::string RankAccuracy::describe() const {
  return fmt::format("{:.1f}% ({}/{})", percentage, correct, total);
}

ordered_json AccuracyTable::to_json() const {
  ordered_json j;
  for (Rank r : kAllRanks) {
    const auto& a = at(r);
    j[std::string(rank_name(r))] = {{"correct", a.correct}, {"total", a.total}, {"percentage", a.percentage}};
  }
  return j;
}

std::string AccuracyTable::to_markdown(const std::string& row_label) const {
  std::string head = "| |";
  std::string rule = "|---|";
  std::string row = "| " + row_label + " |";
  for (Rank r : kAllRanks) {
    head += " " + std::string(rank_name(r)) + " |";
    rule += "---|";
    row += " " + at(r).describe() + " |";
  }
  return head + "\n" + rule + "\n" + row + "\n";
}

AccuracyTable score_taxonomy(const Predictions& predictions, const GoldTaxonomySet& gold) {
  if (gold.entries.empty()) throw Error("score_taxonomy: empty gold set");
  AccuracyTable table;
  for (const auto& entry : gold.entries) {
    const auto it = predictions.find(entry.organism);
    const bool have = it != predictions.end() && it->second.has_value();
    for (Rank r : kAllRanks) {
      auto& cell = table.ranks[rank_index(r)];
      ++cell.total;
      if (have && text::to_lower(it->second->at(r)) == entry.hierarchy.at(r)) ++cell.correct;
    }
  }
  for (auto& cell : table.ranks) {
    cell.percentage = round_to_tenth(100.0 * static_cast<double>(cell.correct) / static_cast<double>(cell.total));
  }
  return table;
}

std::vector<Mismatch> diff_predictions(const Predictions& predictions, const GoldTaxonomySet& gold) {
  std::vector<Mismatch> out;
  for (const auto& entry : gold.entries) {
    const auto it = predictions.find(entry.organism);
    const bool have = it != predictions.end() && it->second.has_value();
    for (Rank r : kAllRanks) {
      const std::string predicted = have ? text::to_lower(it->second->at(r)) : std::string();
      if (predicted != entry.hierarchy.at(r)) out.push_back({entry.organism, r, entry.hierarchy.at(r), predicted});
    }
  }
  return out;
}

ordered_json TaxonomyEvalResult::to_json() const {
  ordered_json j;
  j["accuracy"] = table.to_json();
  auto mm = ordered_json::array();
  for (const auto& m : mismatches) {
    mm.push_back({{"organism", m.organism},
                  {"rank", rank_name(m.rank)},
                  {"expected", m.expected},
                  {"predicted", m.predicted}});
  }
  j["mismatches"] = std::move(mm);
  auto fails = ordered_json::array();
  for (const auto& [org, err] : failures) fails.push_back({{"organism", org}, {"error", err}});
  j["failures"] = std::move(fails);
  return j;
}

TaxonomyEvalResult run_taxonomy_eval(const GoldTaxonomySet& gold, llm::Gateway& gateway, std::size_t workers) {
  taxonomy::HierarchyCache cache;
  taxonomy::HierarchyFetcher fetcher(gateway, cache);
  struct Lookup {
    std::optional<TaxonomicHierarchy> hierarchy;
    std::string error;
  };
  const auto lookups = parallel_map<Lookup>(gold.entries.size(), workers, [&](std::size_t i) {
    Lookup l;
    try {
      l.hierarchy = fetcher.fetch(gold.entries[i].organism);
    } catch (const std::exception& e) {
      l.error = e.what();
    }
    return l;
  });

  TaxonomyEvalResult result;
  for (std::size_t i = 0; i < gold.entries.size(); ++i) {
    result.predictions[gold.entries[i].organism] = lookups[i].hierarchy;
    if (!lookups[i].hierarchy) result.failures.emplace_back(gold.entries[i].organism, lookups[i].error);
  }
  result.table = score_taxonomy(result.predictions, gold);
  result.mismatches = diff_predictions(result.predictions, gold);
  return result;
}

DiversityLevel DiversityLevel::parse(std::string_view name) {
  const auto lower = text::to_lower(text::trim(name));
  if (lower == "organism" || lower == "species") return {std::nullopt};
  if (auto r = parse_rank(lower)) return {*r};
  throw ValidationError("unknown diversity level '" + std::string(name) + "'");
}

std::string DiversityLevel::name() const { return rank ? std::string(rank_name(*rank)) : "organism"; }

std::string DiversityCurve::to_csv() const {
  std::string out = "index,mean_unique\n";
  for (const auto& p : points) out += fmt::format("{},{}\n", p.index, p.mean_unique);
  return out;
}

DiversityCurve diversity_curve(const Dataset& dataset, const std::vector<std::string>& problems,
                               DiversityLevel level) {
  if (problems.empty()) throw Error("diversity: no problems given");
  std::vector<std::vector<std::size_t>> series;
  std::size_t shortest = SIZE_MAX;
  for (const auto& p : problems) {
    const auto records = dataset.records_for(p);
    if (records.empty()) throw Error("diversity: problem '" + p + "' has no records");
    std::set<std::string> seen;
    std::vector<std::size_t> counts;
    counts.reserve(records.size());
    for (const auto* r : records) {
      if (!level.rank) {
        seen.insert(r->organism.name());
      } else if (r->taxonomy) {
        seen.insert(r->taxonomy->at(*level.rank));
      }
      counts.push_back(seen.size());
    }
    shortest = std::min(shortest, counts.size());
    series.push_back(std::move(counts));
  }

  DiversityCurve curve;
  curve.level = level;
  curve.problems = problems;
  for (std::size_t i = 0; i < shortest; ++i) {
    double sum = 0.0;
    for (const auto& s : series) sum += static_cast<double>(s[i]);
    curve.points.push_back({i, sum / static_cast<double>(series.size())});
  }
  return curve;
}

const std::vector<std::string>& default_eval_problems() {
  static const std::vector<std::string> kProblems = {"manage-impact", "manage-tension", "manage-compression",
                                                     "manage-turbulence", "modify-speed"};
  return kProblems;
}

}  // namespace biomech::eval
