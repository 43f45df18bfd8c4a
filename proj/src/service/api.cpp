#include "biomech/service/api.hpp"

#include "biomech/core/text.hpp"
#include "biomech/llm/errors.hpp"
#include "biomech/service/markdown.hpp"

#include <spdlog/spdlog.h>

namespace biomech::service {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ApiResponse error(int status, const std::string& message) {
  ordered_json j;
  j["error"] = message;
  return {status, std::move(j)};
}

std::vector<std::string> split_path(std::string_view path) {
  if (const auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string> parts;
  std::string current;
  for (char c : path) {
    if (c == '/') {
      if (!current.empty()) parts.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) parts.push_back(std::move(current));
  return parts;
}

std::optional<std::string> string_field(const json& req, const char* name) {
  const auto it = req.find(name);
  if (it == req.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

struct BadRequest {
  std::string message;
};

std::string require_string(const json& req, const char* name) {
  auto v = string_field(req, name);
  if (!v || v->empty()) throw BadRequest{std::string("missing string field '") + name + "'"};
  return *v;
}

}  // namespace

ApiService::ApiService(Dataset dataset, clustering::ModelSet models, llm::Gateway& gateway)
    : dataset_(std::move(dataset)), models_(std::move(models)), gateway_(gateway) {}

ApiResponse ApiService::handle(std::string_view method, std::string_view path, std::string_view body) const {
  const auto parts = split_path(path);
  const bool get = method == "GET";
  const bool post = method == "POST";
  try {
    if (parts.size() == 1 && parts[0] == "healthz") {
      if (!get) return error(405, "method not allowed");
      ordered_json j;
      j["status"] = "ok";
      j["problems"] = dataset_.problems().size();
      j["records"] = dataset_.records().size();
      return {200, std::move(j)};
    }
    if (!parts.empty() && parts[0] == "problems") {
      if (!get) return error(405, "method not allowed");
      if (parts.size() == 1) return problems();
      if (parts.size() == 3 && parts[2] == "clusters") return clusters(parts[1]);
      if (parts.size() == 4 && parts[2] == "clusters") return cluster(parts[1], parts[3]);
    }
    if (parts.size() == 2 && parts[0] == "mechanisms") {
      if (!get) return error(405, "method not allowed");
      return mechanism(parts[1]);
    }
    if (parts.size() == 2 && parts[0] == "actions") {
      const auto& kind = parts[1];
      if (kind != "explain" && kind != "compare" && kind != "combine" && kind != "critique") {
        return error(404, "no such action '" + kind + "'");
      }
      if (!post) return error(405, "method not allowed");
      json req;
      try {
        req = json::parse(body);
      } catch (const json::parse_error&) {
        return error(400, "request body is not valid JSON");
      }
      if (!req.is_object()) return error(400, "request body must be a JSON object");
      if (kind == "explain") return explain(req);
      if (kind == "critique") return critique(req);
      return pairwise(kind, req);
    }
  } catch (const BadRequest& e) {
    return error(400, e.message);
  }
  return error(404, "no route for " + std::string(method) + " " + std::string(path));
}

ApiResponse ApiService::problems() const {
  auto list = ordered_json::array();
  for (const auto& p : dataset_.problems()) {
    ordered_json j;
    j["id"] = p.id;
    j["title"] = p.title;
    j["record_count"] = dataset_.count_for(p.id);
    const auto m = models_.find(p.id);
    j["cluster_count"] = m == models_.end() ? 0 : m->second.clusters.size();
    list.push_back(std::move(j));
  }
  ordered_json out;
  out["problems"] = std::move(list);
  return {200, std::move(out)};
}

ordered_json ApiService::cluster_json(const clustering::Cluster& c) const {
  ordered_json j;
  j["id"] = c.id;
  j["label"] = c.label;
  j["size"] = c.members.size();
  auto members = ordered_json::array();
  for (const auto& id : c.members) {
    const auto* r = dataset_.find(id);
    if (r == nullptr) continue;
    ordered_json m;
    m["id"] = r->id;
    m["mechanism"] = r->mechanism;
    m["organism"] = r->organism.display_name();
    m["image_url"] = r->image_url ? json(*r->image_url) : json(nullptr);
    members.push_back(std::move(m));
  }
  j["members"] = std::move(members);
  return j;
}

ApiResponse ApiService::clusters(const std::string& problem) const {
  if (dataset_.find_problem(problem) == nullptr) return error(404, "unknown problem '" + problem + "'");
  const auto m = models_.find(problem);
  if (m == models_.end()) return error(404, "problem '" + problem + "' has not been clustered");
  ordered_json out;
  out["problem"] = problem;
  out["k"] = m->second.k;
  out["effective_k"] = m->second.effective_k;
  auto list = ordered_json::array();
  for (const auto& c : m->second.clusters) list.push_back(cluster_json(c));
  out["clusters"] = std::move(list);
  return {200, std::move(out)};
}

ApiResponse ApiService::cluster(const std::string& problem, const std::string& cluster_id) const {
  if (dataset_.find_problem(problem) == nullptr) return error(404, "unknown problem '" + problem + "'");
  const auto m = models_.find(problem);
  if (m == models_.end()) return error(404, "problem '" + problem + "' has not been clustered");
  int id = -1;
  try {
    std::size_t used = 0;
    id = std::stoi(cluster_id, &used);
    if (used != cluster_id.size()) id = -1;
  } catch (const std::exception&) {
    id = -1;
  }
  const auto* c = m->second.find(id);
  if (c == nullptr) return error(404, "unknown cluster '" + cluster_id + "'");
  ordered_json out = cluster_json(*c);
  out["problem"] = problem;
  return {200, std::move(out)};
}

ApiResponse ApiService::mechanism(const std::string& id) const {
  const auto* r = dataset_.find(id);
  if (r == nullptr) return error(404, "unknown mechanism '" + id + "'");
  return {200, to_json(*r)};
}

namespace {

ApiResponse completion_failed(const std::exception& e) {
  spdlog::warn("interaction completion failed: {}", e.what());
  return error(502, std::string("completion failed: ") + e.what());
}

}  // namespace

ApiResponse ApiService::explain(const json& req) const {
  const auto mech_id = require_string(req, "mechanism_id");
  const auto problem_id = require_string(req, "problem_id");
  const auto* problem = dataset_.find_problem(problem_id);
  if (problem == nullptr) return error(404, "unknown problem '" + problem_id + "'");
  const auto* r = dataset_.find(mech_id);
  if (r == nullptr) return error(404, "unknown mechanism '" + mech_id + "'");

  std::string markdown;
  try {
    markdown = gateway_.complete(llm::TemplateId::explain, {{"problem", problem->title},
                                                            {"organism", r->organism.display_name()},
                                                            {"mechanism", r->mechanism}})
                   .text;
  } catch (const std::exception& e) {
    return completion_failed(e);
  }
  if (text::trim(markdown).empty()) return error(502, "completion was empty");
  ordered_json out;
  out["kind"] = "explain";
  out["markdown"] = markdown;
  out["inputs"] = {{"mechanism_id", mech_id}, {"problem_id", problem_id}};
  return {200, std::move(out)};
}

ApiResponse ApiService::pairwise(const std::string& kind, const json& req) const {
  const auto a_id = require_string(req, "a");
  const auto b_id = require_string(req, "b");
  const auto problem_id = require_string(req, "problem_id");
  if (a_id == b_id) return error(400, kind + " needs two different mechanisms");
  const auto* problem = dataset_.find_problem(problem_id);
  if (problem == nullptr) return error(404, "unknown problem '" + problem_id + "'");
  const auto* a = dataset_.find(a_id);
  if (a == nullptr) return error(404, "unknown mechanism '" + a_id + "'");
  const auto* b = dataset_.find(b_id);
  if (b == nullptr) return error(404, "unknown mechanism '" + b_id + "'");

  const auto tid = kind == "compare" ? llm::TemplateId::compare : llm::TemplateId::combine;
  std::string markdown;
  try {
    markdown = gateway_.complete(tid, {{"problem", problem->title},
                                       {"mechanism_a", a->mechanism},
                                       {"organism_a", a->organism.display_name()},
                                       {"mechanism_b", b->mechanism},
                                       {"organism_b", b->organism.display_name()}})
                   .text;
  } catch (const std::exception& e) {
    return completion_failed(e);
  }
  if (text::trim(markdown).empty()) return error(502, "completion was empty");

  ordered_json out;
  out["kind"] = kind;
  out["markdown"] = markdown;
  out["inputs"] = {{"a", a_id}, {"b", b_id}, {"problem_id", problem_id}};
  if (kind == "compare") {
    auto flags = ordered_json::array();
    const auto table = find_markdown_table(markdown);
    if (!table) {
      flags.push_back("missing-table");
    } else {
      auto row_named = [&](std::string_view want) {
        for (const auto& row : table->rows) {
          if (!row.empty() && text::to_lower(row.front()).find(want) != std::string::npos) return true;
        }
        return false;
      };
      if (!row_named("pros")) flags.push_back("missing-pros-row");
      if (!row_named("cons")) flags.push_back("missing-cons-row");
    }
    out["has_table"] = table.has_value();
    out["flags"] = std::move(flags);
  }
  return {200, std::move(out)};
}

ApiResponse ApiService::critique(const json& req) const {
  const auto idea = string_field(req, "idea_text");
  if (!idea || text::trim(*idea).empty()) return error(400, "idea_text must be a non-empty string");
  if (idea->size() > kMaxIdeaBytes) {
    return error(400, "idea_text exceeds " + std::to_string(kMaxIdeaBytes) + " bytes");
  }
  std::string markdown;
  try {
    markdown = gateway_.complete(llm::TemplateId::critique, {{"idea", *idea}}).text;
  } catch (const std::exception& e) {
    return completion_failed(e);
  }
  if (text::trim(markdown).empty()) return error(502, "completion was empty");
  ordered_json out;
  out["kind"] = "critique";
  out["markdown"] = markdown;
  out["inputs"] = {{"idea_text", *idea}};
  return {200, std::move(out)};
}

}  // namespace biomech::service
