// Command-line front end for the mechanism dataset pipeline.

#include "biomech/clustering/clustering.hpp"
#include "biomech/core/dataset.hpp"
#include "biomech/core/text.hpp"
#include "biomech/evaluation/evaluation.hpp"
#include "biomech/expansion/expansion.hpp"
#include "biomech/imagery/imagery.hpp"
#include "biomech/ingest/asknature.hpp"
#include "biomech/ingest/fetcher.hpp"
#include "biomech/ingest/seeding.hpp"
#include "biomech/llm/factory.hpp"
#include "biomech/service/api.hpp"
#include "biomech/taxonomy/hierarchy.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace biomech;

namespace {

struct GlobalOptions {
  std::string log_level = "info";
  std::string backend = "mock";
  std::string record_inner = "live";
  fs::path mock_table;
  fs::path replay_dir;
  fs::path record_dir;
  std::string main_model = llm::ModelDefaults{}.main_model;
  std::string taxonomy_model = llm::ModelDefaults{}.taxonomy_model;
  std::size_t max_in_flight = 10;
  std::string embeddings = "mock";
};

llm::BackendOptions backend_options(const GlobalOptions& g) {
  llm::BackendOptions o;
  const auto kind = llm::parse_backend_kind(g.backend);
  if (!kind) throw Error("unknown backend '" + g.backend + "'");
  o.kind = *kind;
  const auto inner = llm::parse_backend_kind(g.record_inner);
  if (!inner || *inner == llm::BackendKind::record) throw Error("--record-inner must be mock, replay or live");
  o.record_inner = *inner;
  o.mock_table = g.mock_table;
  o.replay_dir = g.replay_dir;
  o.record_dir = g.record_dir;
  o.models.main_model = g.main_model;
  o.models.taxonomy_model = g.taxonomy_model;
  o.max_in_flight = g.max_in_flight;
  o.live_embeddings = g.embeddings == "live";
  return o;
}

void write_text(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

Dataset load_or_empty(const fs::path& path) {
  return fs::exists(path) ? load_dataset(path) : Dataset{};
}

fs::path cache_path_or_default(const fs::path& given, const fs::path& dataset) {
  if (!given.empty()) return given;
  auto p = dataset;
  p += ".taxonomy-cache.jsonl";
  return p;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream in(ingest::read_file(path));
  for (std::string line; std::getline(in, line);) {
    const auto t = text::trim(line);
    if (!t.empty() && t.front() != '#') out.push_back(t);
  }
  return out;
}

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bio-inspired mechanism dataset pipeline"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")->capture_default_str();
  app.add_option("--backend", g.backend, "Completion backend: mock|replay|live|record")
      ->check(CLI::IsMember({"mock", "replay", "live", "record"}))
      ->capture_default_str();
  app.add_option("--record-inner", g.record_inner, "Backend wrapped by --backend record")
      ->check(CLI::IsMember({"mock", "replay", "live"}))
      ->capture_default_str();
  app.add_option("--mock-table", g.mock_table, "Mock response table (JSON)");
  app.add_option("--replay-dir", g.replay_dir, "Directory of recorded responses");
  app.add_option("--record-dir", g.record_dir, "Where --backend record writes responses");
  app.add_option("--model", g.main_model, "Model for expansion and interaction")->capture_default_str();
  app.add_option("--taxonomy-model", g.taxonomy_model, "Model for taxonomy lookups")->capture_default_str();
  app.add_option("--max-in-flight", g.max_in_flight, "Concurrent completion requests")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();
  app.add_option("--embeddings", g.embeddings, "Embedding provider: mock|live")
      ->check(CLI::IsMember({"mock", "live"}))
      ->capture_default_str();

  // fetch
  auto* fetch = app.add_subcommand("fetch", "Download a group page and its strategy pages into a corpus");
  std::string fetch_url, fetch_slug;
  fs::path corpus_dir = "corpus";
  fetch->add_option("--url", fetch_url, "Group-by-function page URL")->required();
  fetch->add_option("--problem", fetch_slug, "Problem slug, e.g. manage-turbulence")->required();
  fetch->add_option("--corpus", corpus_dir, "Corpus root")->capture_default_str();

  // seed
  auto* seed = app.add_subcommand("seed", "Distill a corpus into seed records with taxonomies");
  fs::path dataset_path = "data/dataset.jsonl";
  fs::path exclusions_file;
  fs::path taxonomy_cache;
  std::size_t seed_word_limit = 12;
  seed->add_option("--corpus", corpus_dir, "Corpus root")->required();
  seed->add_option("--dataset", dataset_path, "Dataset JSONL")->capture_default_str();
  seed->add_option("--exclusions", exclusions_file, "Problems to skip, one per line");
  seed->add_option("--taxonomy-cache", taxonomy_cache, "Hierarchy cache JSONL (default <dataset>.taxonomy-cache.jsonl)");
  seed->add_option("--word-limit", seed_word_limit, "Seed word budget")->capture_default_str();

  // expand
  auto* expand = app.add_subcommand("expand", "Run taxonomy-guided expansion batches for one problem");
  std::string problem_id;
  std::size_t batches = 10;
  std::string rank_policy = "rotate";
  std::uint64_t rng_seed = 0;
  std::string sort_key = "immediate-children";
  fs::path reports_dir;
  expand->add_option("--dataset", dataset_path, "Dataset JSONL")->capture_default_str();
  expand->add_option("--problem", problem_id, "Problem slug")->required();
  expand->add_option("--batches", batches, "Iterations to run")->capture_default_str();
  expand->add_option("--rank-policy", rank_policy, "rotate | fixed:<rank>")->capture_default_str();
  expand->add_option("--seed", rng_seed, "Random seed")->capture_default_str();
  expand->add_option("--sort-key", sort_key, "immediate-children | subtree-size")
      ->check(CLI::IsMember({"immediate-children", "subtree-size"}))
      ->capture_default_str();
  expand->add_option("--taxonomy-cache", taxonomy_cache, "Hierarchy cache JSONL");
  expand->add_option("--reports-dir", reports_dir, "Iteration reports (default <dataset>.reports)");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Cluster a problem's mechanisms and label the clusters");
  std::size_t k = 20;
  fs::path models_path;
  cluster->add_option("--dataset", dataset_path, "Dataset JSONL")->capture_default_str();
  cluster->add_option("--problem", problem_id, "Problem slug (default: every problem)");
  cluster->add_option("--k", k, "Number of clusters")->check(CLI::PositiveNumber)->capture_default_str();
  cluster->add_option("--seed", rng_seed, "Random seed")->capture_default_str();
  cluster->add_option("--models", models_path, "Cluster model file (default <dataset>.clusters.json)");

  // images
  auto* images = app.add_subcommand("images", "Attach one representative image per mechanism");
  fs::path image_stub, image_cache;
  std::size_t image_in_flight = 4;
  images->add_option("--dataset", dataset_path, "Dataset JSONL")->capture_default_str();
  images->add_option("--problem", problem_id, "Problem slug (default: every problem)");
  images->add_option("--stub", image_stub, "Query -> URL fixture map instead of the live search API");
  images->add_option("--cache-dir", image_cache, "Image result cache (default <dataset>.images)");
  images->add_option("--max-in-flight", image_in_flight, "Concurrent search requests")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluations");
  eval->require_subcommand(1);
  auto* eval_tax = eval->add_subcommand("taxonomy", "Score zero-shot taxonomy lookups against a gold set");
  fs::path gold_path, eval_out;
  eval_tax->add_option("--gold", gold_path, "Gold set JSON")->required();
  eval_tax->add_option("--out", eval_out, "Write the full result (accuracy + diff) as JSON");
  auto* eval_div = eval->add_subcommand("diversity", "Unique-name curve over generation index");
  std::string level = "genus";
  std::vector<std::string> eval_problems;
  fs::path problems_file;
  eval_div->add_option("--dataset", dataset_path, "Dataset JSONL")->capture_default_str();
  eval_div->add_option("--rank", level, "Rank name or 'organism'")->capture_default_str();
  eval_div->add_option("--problem", eval_problems, "Problem slug (repeatable; default: the five eval problems)");
  eval_div->add_option("--problems-file", problems_file, "Problem slugs, one per line");
  eval_div->add_option("--out", eval_out, "CSV output (default stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the JSON API over a dataset snapshot");
  service::ServerOptions server_opts;
  fs::path static_dir;
  serve->add_option("--dataset", dataset_path, "Dataset JSONL")->capture_default_str();
  serve->add_option("--clusters", models_path, "Cluster model file (default <dataset>.clusters.json)");
  serve->add_option("--host", server_opts.host, "Bind address")->capture_default_str();
  serve->add_option("--port", server_opts.port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--static-dir", static_dir, "Directory of UI assets served at /");
  serve->add_option("--cors-origin", server_opts.cors_origin, "Access-Control-Allow-Origin value")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(g.log_level));
  spdlog::set_default_logger(spdlog::stderr_color_mt("biomech"));
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*fetch) {
      const auto r = ingest::fetch_problem_pages(fetch_url, fetch_slug, corpus_dir);
      std::cout << "saved " << r.strategies_saved << " strategy pages, " << r.strategies_failed << " failed\n";
      return r.strategies_failed == 0 ? 0 : 1;
    }

    if (*seed) {
      const auto exclusions = exclusions_file.empty() ? ingest::ProblemExclusions::defaults()
                                                      : ingest::ProblemExclusions::from_file(exclusions_file);
      const auto corpus = ingest::load_corpus(corpus_dir, exclusions);
      auto gateway = llm::make_gateway(backend_options(g));
      taxonomy::HierarchyCache cache;
      const auto cache_file = cache_path_or_default(taxonomy_cache, dataset_path);
      cache.load(cache_file);
      auto dataset = load_or_empty(dataset_path);
      const auto report = ingest::seed_dataset(corpus, *gateway, cache, dataset, seed_word_limit);
      save_dataset(dataset, dataset_path);
      cache.save(cache_file);
      std::cout << report.to_json().dump(2) << "\n";
      return 0;
    }

    if (*expand) {
      auto dataset = load_dataset(dataset_path);
      const auto* problem = dataset.find_problem(problem_id);
      if (problem == nullptr) throw Error("unknown problem '" + problem_id + "'; run seed first");
      const Problem p = *problem;
      expansion::ExpansionConfig cfg;
      cfg.batches_per_run = batches;
      cfg.rank_policy = expansion::RankPolicy::parse(rank_policy);
      cfg.seed = rng_seed;
      cfg.sort_key = *taxonomy::parse_sort_key(sort_key);
      auto gateway = llm::make_gateway(backend_options(g));
      taxonomy::HierarchyCache cache;
      const auto cache_file = cache_path_or_default(taxonomy_cache, dataset_path);
      cache.load(cache_file);
      if (reports_dir.empty()) {
        reports_dir = dataset_path;
        reports_dir += ".reports";
      }
      expansion::run_pipeline(dataset, p, cfg, {*gateway, cache},
                              [&](const Dataset& d, const expansion::IterationReport& r) {
                                save_dataset(d, dataset_path);
                                cache.save(cache_file);
                                auto name = r.batch_id;
                                std::replace(name.begin(), name.end(), ':', '.');
                                write_text(reports_dir / (name + ".json"), r.to_json().dump(2) + "\n");
                                std::cout << r.batch_id << ": " << r.new_records << " new records\n";
                              });
      return 0;
    }

    if (*cluster) {
      auto dataset = load_dataset(dataset_path);
      if (models_path.empty()) models_path = clustering::default_model_path(dataset_path);
      auto models = clustering::load_models(models_path);
      auto gateway = llm::make_gateway(backend_options(g));
      std::vector<std::string> targets;
      if (!problem_id.empty()) {
        targets.push_back(problem_id);
      } else {
        for (const auto& p : dataset.problems()) {
          if (dataset.count_for(p.id) > 0) targets.push_back(p.id);
        }
      }
      for (const auto& id : targets) {
        auto model = clustering::cluster_problem(dataset, id, k, rng_seed, *gateway);
        clustering::apply_model(dataset, model);
        std::cout << id << ": " << model.effective_k << " clusters over " << model.assignments.size()
                  << " records\n";
        models.insert_or_assign(id, std::move(model));
      }
      clustering::save_models(models, models_path);
      save_dataset(dataset, dataset_path);
      return 0;
    }

    if (*images) {
      auto dataset = load_dataset(dataset_path);
      std::shared_ptr<imagery::ImageSearch> search;
      if (!image_stub.empty()) {
        search = imagery::StubImageSearch::from_file(image_stub);
      } else {
        auto cfg = imagery::CustomSearchConfig::from_env();
        std::shared_ptr<llm::HttpTransport> transport = llm::make_http_transport(cfg.base_url);
        search = std::make_shared<imagery::CustomSearch>(cfg, std::move(transport));
      }
      if (image_cache.empty()) {
        image_cache = dataset_path;
        image_cache += ".images";
      }
      imagery::ImageFetcher fetcher(search, image_cache, image_in_flight);
      std::optional<std::string> only;
      if (!problem_id.empty()) only = problem_id;
      const auto summary = imagery::fetch_images(dataset, only, fetcher);
      save_dataset(dataset, dataset_path);
      std::cout << summary.ok << " ok, " << summary.none_found << " none found, " << summary.errors
                << " errors, " << fetcher.provider_calls() << " search calls\n";
      return summary.errors == 0 ? 0 : 1;
    }

    if (*eval_tax) {
      const auto gold = eval::GoldTaxonomySet::load(gold_path);
      auto gateway = llm::make_gateway(backend_options(g));
      const auto result = eval::run_taxonomy_eval(gold, *gateway);
      std::cout << result.table.to_markdown(gateway->models().taxonomy_model);
      for (const auto& m : result.mismatches) {
        std::cout << "  " << m.organism << " " << rank_name(m.rank) << ": expected " << m.expected << ", got "
                  << (m.predicted.empty() ? "(none)" : m.predicted) << "\n";
      }
      if (!eval_out.empty()) write_text(eval_out, result.to_json().dump(2) + "\n");
      return 0;
    }

    if (*eval_div) {
      const auto dataset = load_dataset(dataset_path);
      std::vector<std::string> problems = eval_problems;
      if (!problems_file.empty()) {
        for (auto& p : read_lines(problems_file)) problems.push_back(std::move(p));
      }
      if (problems.empty()) problems = eval::default_eval_problems();
      const auto curve = eval::diversity_curve(dataset, problems, eval::DiversityLevel::parse(level));
      if (eval_out.empty()) {
        std::cout << curve.to_csv();
      } else {
        write_text(eval_out, curve.to_csv());
      }
      return 0;
    }

    if (*serve) {
      auto dataset = load_dataset(dataset_path);
      if (models_path.empty()) models_path = clustering::default_model_path(dataset_path);
      auto models = clustering::load_models(models_path);
      auto gateway = llm::make_gateway(backend_options(g));
      if (!static_dir.empty()) server_opts.static_dir = static_dir;
      service::ApiService api(std::move(dataset), std::move(models), *gateway);
      service::HttpServer server(api, server_opts);
      const int port = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      spdlog::info("listening on http://{}:{}", server_opts.host, port);
      std::cout << "listening on " << server_opts.host << ":" << port << std::endl;
      server.serve();
      g_server = nullptr;
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
