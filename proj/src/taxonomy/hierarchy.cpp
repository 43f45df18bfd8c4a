#include "biomech/taxonomy/hierarchy.hpp"

#include "biomech/core/text.hpp"

#include <fstream>
#include <regex>
#include <sstream>

namespace biomech::taxonomy {

using nlohmann::json;

namespace {

std::string describe_missing(const std::string& organism, const std::vector<Rank>& missing) {
  std::string out = "incomplete hierarchy";
  if (!organism.empty()) out += " for '" + organism + "'";
  out += ": missing";
  for (Rank r : missing) out += " " + std::string(rank_name(r));
  return out;
}

std::string strip_value(std::string v) {
  v = text::trim(v);
  while (!v.empty() && (v.back() == ',' || v.back() == '}')) v = text::trim(v.substr(0, v.size() - 1));
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    v = v.substr(1, v.size() - 2);
  }
  return text::trim(v);
}

}  // namespace

IncompleteHierarchyError::IncompleteHierarchyError(const std::string& organism, std::vector<Rank> missing)
    : ParseError(describe_missing(organism, missing)), missing_(std::move(missing)) {}

TaxonomicHierarchy parse_hierarchy_reply(std::string_view raw, const std::string& organism) {
  std::array<std::string, kRankCount> names;
  const std::string body(raw);

  static const std::regex kQuotedPair(R"re(["']([A-Za-z]+)["']\s*:\s*(?:"([^"]*)"|'([^']*)'))re");
  for (auto it = std::sregex_iterator(body.begin(), body.end(), kQuotedPair); it != std::sregex_iterator(); ++it) {
    const auto rank = parse_rank((*it)[1].str());
    if (!rank) continue;
    const std::string value = (*it)[2].matched ? (*it)[2].str() : (*it)[3].str();
    auto& slot = names[rank_index(*rank)];
    if (slot.empty()) slot = text::to_lower(text::trim(value));
  }

  // Unquoted `rank: value` lines.
  static const std::regex kLine(R"(^\s*[-*]?\s*([A-Za-z]+)\s*[:=]\s*(.+)$)");
  std::istringstream lines(body);
  std::string line;
  while (std::getline(lines, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    const auto rank = parse_rank(m[1].str());
    if (!rank) continue;
    auto& slot = names[rank_index(*rank)];
    if (slot.empty()) slot = text::to_lower(strip_value(m[2].str()));
  }

  std::vector<Rank> missing;
  for (Rank r : kAllRanks) {
    if (names[rank_index(r)].empty()) missing.push_back(r);
  }
  if (!missing.empty()) throw IncompleteHierarchyError(organism, std::move(missing));
  return TaxonomicHierarchy(std::move(names));
}

std::optional<TaxonomicHierarchy> HierarchyCache::get(const std::string& organism_name) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(organism_name);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void HierarchyCache::put(const std::string& organism_name, const TaxonomicHierarchy& hierarchy) {
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign(organism_name, hierarchy);
}

std::size_t HierarchyCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void HierarchyCache::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      put(j.at("organism").get<std::string>(), taxonomy_from_json(j.at("hierarchy")));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void HierarchyCache::save(const std::filesystem::path& path) const {
  std::shared_lock lock(mutex_);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    for (const auto& [name, h] : entries_) {
      nlohmann::ordered_json j;
      j["organism"] = name;
      j["hierarchy"] = taxonomy_to_json(h);
      out << j.dump() << "\n";
    }
    if (!out) throw Error("cannot write hierarchy cache '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

HierarchyFetcher::HierarchyFetcher(llm::Gateway& gateway, HierarchyCache& cache)
    : gateway_(gateway), cache_(cache) {}

TaxonomicHierarchy HierarchyFetcher::fetch(const std::string& organism) {
  const std::string key = Organism(organism).name();
  if (auto hit = cache_.get(key)) return *hit;

  std::promise<TaxonomicHierarchy> promise;
  std::shared_future<TaxonomicHierarchy> future;
  bool owner = false;
  {
    std::lock_guard lock(inflight_mutex_);
    if (auto hit = cache_.get(key)) return *hit;
    auto it = inflight_.find(key);
    if (it == inflight_.end()) {
      future = promise.get_future().share();
      inflight_.emplace(key, future);
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (!owner) return future.get();

  try {
    const auto result = gateway_.complete(llm::TemplateId::taxonomy, {{"organism", organism}});
    auto hierarchy = parse_hierarchy_reply(result.text, organism);
    cache_.put(key, hierarchy);
    promise.set_value(hierarchy);
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
  }
  return future.get();
}

}  // namespace biomech::taxonomy
