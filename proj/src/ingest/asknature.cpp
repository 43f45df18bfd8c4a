#include "biomech/ingest/asknature.hpp"

#include "biomech/core/text.hpp"
#include "biomech/ingest/html.hpp"
#include "biomech/llm/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace biomech::ingest {

namespace {

using html::by_class;
using html::by_tag;
using html::Node;

bool has_href(const Node& n) { return n.tag == "a" && !n.attr("href").empty(); }

std::string first_text(const Node& root, const std::function<bool(const Node&)>& pred) {
  const Node* hit = root.find_first(pred);
  return hit == nullptr ? std::string() : hit->text_content();
}

// Models sometimes wrap the answer in quotes or prefix it with a label.
std::string clean_mechanism(std::string s) {
  s = text::trim(s);
  if (const auto nl = s.find('\n'); nl != std::string::npos) s = text::trim(s.substr(0, nl));
  static constexpr std::string_view kLabel = "Mechanism:";
  if (s.rfind(kLabel, 0) == 0) s = text::trim(s.substr(kLabel.size()));
  while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    s = text::trim(s.substr(1, s.size() - 2));
  }
  return s;
}

}  // namespace

GroupPage parse_group_page(std::string_view page) {
  const auto doc = html::parse(page);
  GroupPage out;
  out.problem_title = first_text(*doc, by_class("page-title"));
  if (out.problem_title.empty()) out.problem_title = first_text(*doc, by_tag("h1"));

  for (const Node* card : doc->find_all(by_class("strategy-card"))) {
    const Node* link = card->find_first(has_href);
    if (link == nullptr) continue;
    std::string organism = first_text(*card, by_class("card-living-system"));
    if (organism.empty()) organism = first_text(*card, by_class("card-title"));
    out.entries.push_back({organism, link->attr("href")});
  }
  if (out.entries.empty()) throw LayoutError("group page: no strategy card links found");
  return out;
}

StrategyPage parse_strategy_page(std::string_view page) {
  const auto doc = html::parse(page);
  StrategyPage out;
  out.title = first_text(*doc, by_class("strategy-title"));
  if (out.title.empty()) out.title = first_text(*doc, by_tag("h1"));
  if (out.title.empty()) throw LayoutError("strategy page: missing title");

  out.organism = first_text(*doc, by_class("living-system-name"));
  if (const Node* content = doc->find_first(by_class("strategy-content"))) {
    std::vector<std::string> paragraphs;
    for (const Node* p : content->find_all(by_tag("p"))) {
      auto t = p->text_content();
      if (!t.empty()) paragraphs.push_back(std::move(t));
    }
    out.body_text = text::join(paragraphs, "\n\n");
  }
  if (const Node* refs = doc->find_first(by_class("references"))) {
    for (const Node* li : refs->find_all(by_tag("li"))) {
      auto t = li->text_content();
      if (!t.empty()) out.references.push_back(std::move(t));
    }
  }
  if (const Node* canonical = doc->find_first([](const Node& n) {
        return n.tag == "link" && n.attr("rel") == "canonical";
      })) {
    out.url = canonical->attr("href");
  }
  return out;
}

DistillOutcome distill_seed(llm::Gateway& gateway, const Problem& problem, const std::string& organism,
                            const StrategyPage& page, std::size_t word_limit) {
  const bool has_body = !text::trim(page.body_text).empty();
  llm::Bindings bindings{{"organism", organism},
                         {"problem", problem.title},
                         {"word_limit", std::to_string(word_limit)}};
  if (has_body) {
    std::string article = page.title + "\n\n" + page.body_text;
    if (!page.references.empty()) article += "\n\nReferences:\n- " + text::join(page.references, "\n- ");
    bindings["article"] = std::move(article);
  }
  const auto tid = has_body ? llm::TemplateId::distill_seed : llm::TemplateId::distill_seed_no_body;
  const auto result = gateway.complete(tid, std::move(bindings));
  const std::string mechanism = clean_mechanism(result.text);
  if (mechanism.empty()) {
    throw llm::GatewayError(llm::GatewayError::Kind::empty_completion,
                            "distill: empty mechanism for '" + organism + "'");
  }

  DistillOutcome out{make_record(problem.id, mechanism, organism,
                                 has_body ? RecordSource::seed_asknature : RecordSource::seed_missing_body),
                     {}};
  WordLimits limits;
  limits.seed = word_limit;
  out.report = validate_record(out.record, limits);
  return out;
}

ProblemExclusions::ProblemExclusions(std::vector<std::string> titles_or_slugs) {
  for (const auto& t : titles_or_slugs) {
    auto slug = text::slugify(t);
    if (!slug.empty()) slugs_.push_back(std::move(slug));
  }
}

ProblemExclusions ProblemExclusions::defaults() {
  return ProblemExclusions({"Adapt Behaviors", "Adapt Genotype", "Coevolve", "Maintain Community"});
}

ProblemExclusions ProblemExclusions::from_file(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    entries.push_back(line);
  }
  return ProblemExclusions(std::move(entries));
}

bool ProblemExclusions::excluded(std::string_view problem_id) const {
  const auto slug = text::slugify(problem_id);
  return std::find(slugs_.begin(), slugs_.end(), slug) != slugs_.end();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<CorpusProblem> load_corpus(const std::filesystem::path& root,
                                       const ProblemExclusions& exclusions) {
  const auto problems_dir = root / "problems";
  if (!std::filesystem::is_directory(problems_dir)) {
    throw Error("corpus has no problems/ directory: " + root.string());
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(problems_dir)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());

  std::vector<CorpusProblem> out;
  for (const auto& dir : dirs) {
    const std::string slug = dir.filename().string();
    if (exclusions.excluded(slug)) continue;
    if (!is_valid_problem_id(slug)) throw Error("corpus directory '" + slug + "' is not a valid problem slug");

    const auto group = parse_group_page(read_file(dir / "group.html"));
    CorpusProblem cp;
    cp.problem = Problem{slug, group.problem_title.empty() ? text::title_from_slug(slug) : group.problem_title};
    cp.entries = group.entries;
    for (std::size_t i = 0; i < cp.entries.size(); ++i) {
      const auto page_path = dir / "strategies" / (std::to_string(i + 1) + ".html");
      if (std::filesystem::exists(page_path)) {
        cp.pages.emplace_back(parse_strategy_page(read_file(page_path)));
      } else {
        cp.pages.emplace_back(std::nullopt);
      }
    }
    out.push_back(std::move(cp));
  }
  return out;
}

}  // namespace biomech::ingest
