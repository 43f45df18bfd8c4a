#pragma once

#include "biomech/core/dataset.hpp"
#include "biomech/llm/gateway.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace biomech::clustering {

using Point = std::vector<double>;

struct KMeansResult {
  std::vector<Point> centroids;
  std::vector<int> assignment;        // per point, in input order
  std::vector<double> wcss_history;   // after each assignment+update round
  std::size_t iterations = 0;
  bool converged = false;
};

/// k-means++ seeding from a mt19937_64 stream, then Lloyd rounds until the
/// assignment stops changing or `max_iterations`. Ties go to the lower
/// centroid index; an empty cluster keeps its centroid. Uses min(k, n)
/// centroids. Throws Error on no points, k == 0 or ragged dimensions.
KMeansResult kmeans(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 100);

double squared_distance(const Point& a, const Point& b);
double wcss(const std::vector<Point>& points, const std::vector<Point>& centroids,
            const std::vector<int>& assignment);

/// Built-in English list, committed under data/.
const std::set<std::string, std::less<>>& builtin_stopwords();

/// Lowercase runs of letters and digits; everything else separates.
std::vector<std::string> tokenize(std::string_view text);

/// Top `n` non-stopword words by frequency, ties alphabetical.
std::vector<std::string> label_cluster(const std::vector<std::string>& texts, std::size_t n = 5);

struct Cluster {
  int id = 0;
  std::vector<std::string> label;
  std::vector<std::string> members;  // record ids, sorted
};

struct ClusterModel {
  std::string problem;
  std::size_t k = 20;
  std::size_t effective_k = 0;
  std::uint64_t seed = 0;
  std::string embedding_model;
  std::vector<Cluster> clusters;
  std::vector<Point> centroids;
  std::map<std::string, int> assignments;
  std::vector<double> wcss_history;
  std::size_t iterations = 0;

  const Cluster* find(int id) const;
};

/// Embeds every mechanism of the problem and clusters them. Points are
/// ordered by record id so the outcome does not depend on dataset order.
ClusterModel cluster_problem(const Dataset& dataset, std::string_view problem, std::size_t k,
                             std::uint64_t seed, llm::Gateway& gateway);

/// Writes cluster_id onto every assigned record.
void apply_model(Dataset& dataset, const ClusterModel& model);

nlohmann::ordered_json to_json(const ClusterModel& model);
ClusterModel model_from_json(const nlohmann::json& j);

/// Models keyed by problem id, stored as {"problems": {id: model}}.
using ModelSet = std::map<std::string, ClusterModel>;

std::filesystem::path default_model_path(const std::filesystem::path& dataset_path);
/// A missing file yields an empty set.
ModelSet load_models(const std::filesystem::path& path);
void save_models(const ModelSet& models, const std::filesystem::path& path);

}  // namespace biomech::clustering
