#include "biomech/clustering/clustering.hpp"

#include "biomech/core/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace biomech::clustering {

namespace detail {
std::string_view builtin_stopwords_text();
}

using nlohmann::json;
using nlohmann::ordered_json;

double squared_distance(const Point& a, const Point& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double wcss(const std::vector<Point>& points, const std::vector<Point>& centroids,
            const std::vector<int>& assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) total += squared_distance(points[i], centroids[assignment[i]]);
  return total;
}

namespace {

// [0, 1) from the top 53 bits; portable across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int nearest(const Point& p, const std::vector<Point>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<Point> seed_plus_plus(const std::vector<Point>& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.size();
  std::vector<Point> centroids;
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(rng() % n);
  centroids.push_back(points[first]);
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // rounding left target at the very end
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a centroid: take the lowest unchosen one.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations) {
  if (points.empty()) throw Error("kmeans: no points");
  if (k == 0) throw Error("kmeans: k must be positive");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw Error("kmeans: points have different dimensions");
  }
  const std::size_t eff_k = std::min(k, points.size());

  std::mt19937_64 rng(seed);
  KMeansResult r;
  r.centroids = seed_plus_plus(points, eff_k, rng);
  r.assignment.assign(points.size(), -1);

  for (std::size_t it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int c = nearest(points[i], r.centroids);
      if (c != r.assignment[i]) {
        r.assignment[i] = c;
        changed = true;
      }
    }
    if (!changed) {
      r.converged = true;
      break;
    }
    ++r.iterations;

    std::vector<Point> sums(eff_k, Point(dim, 0.0));
    std::vector<std::size_t> counts(eff_k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = static_cast<std::size_t>(r.assignment[i]);
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < eff_k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) r.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
    r.wcss_history.push_back(wcss(points, r.centroids, r.assignment));
  }
  return r;
}

const std::set<std::string, std::less<>>& builtin_stopwords() {
  static const auto words = [] {
    std::set<std::string, std::less<>> out;
    std::istringstream in{std::string(detail::builtin_stopwords_text())};
    std::string line;
    while (std::getline(in, line)) {
      line = text::trim(line);
      if (!line.empty() && line.front() != '#') out.insert(text::to_lower(line));
    }
    return out;
  }();
  return words;
}

std::vector<std::string> tokenize(std::string_view input) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : input) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isalnum(uc) != 0 || uc >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<std::string> label_cluster(const std::vector<std::string>& texts, std::size_t n) {
  const auto& stop = builtin_stopwords();
  std::map<std::string, std::size_t> freq;
  for (const auto& t : texts) {
    for (auto& w : tokenize(t)) {
      if (stop.count(w) == 0) ++freq[w];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < n; ++i) out.push_back(ranked[i].first);
  return out;
}

const Cluster* ClusterModel::find(int id) const {
  for (const auto& c : clusters) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

ClusterModel cluster_problem(const Dataset& dataset, std::string_view problem, std::size_t k,
                             std::uint64_t seed, llm::Gateway& gateway) {
  auto records = dataset.records_for(problem);
  if (records.empty()) throw Error("cluster: problem '" + std::string(problem) + "' has no records");
  std::sort(records.begin(), records.end(),
            [](const MechanismRecord* a, const MechanismRecord* b) { return a->id < b->id; });

  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto* r : records) texts.push_back(r->mechanism);
  const auto embeddings = gateway.embed(texts);
  if (embeddings.size() != texts.size()) throw Error("cluster: embedding count does not match input count");

  std::vector<Point> points;
  points.reserve(embeddings.size());
  for (const auto& e : embeddings) points.push_back(e.vector);
  const auto km = kmeans(points, k, seed);

  ClusterModel model;
  model.problem = std::string(problem);
  model.k = k;
  model.effective_k = km.centroids.size();
  model.seed = seed;
  model.embedding_model = embeddings.front().model;
  model.centroids = km.centroids;
  model.wcss_history = km.wcss_history;
  model.iterations = km.iterations;

  std::vector<std::vector<std::string>> member_texts(model.effective_k);
  model.clusters.resize(model.effective_k);
  for (std::size_t c = 0; c < model.effective_k; ++c) model.clusters[c].id = static_cast<int>(c);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int c = km.assignment[i];
    model.assignments[records[i]->id] = c;
    model.clusters[c].members.push_back(records[i]->id);
    member_texts[c].push_back(records[i]->mechanism);
  }
  for (std::size_t c = 0; c < model.effective_k; ++c) model.clusters[c].label = label_cluster(member_texts[c]);
  return model;
}

void apply_model(Dataset& dataset, const ClusterModel& model) {
  for (const auto& [id, c] : model.assignments) {
    if (dataset.find(id) != nullptr) dataset.set_cluster_id(id, c);
  }
}

ordered_json to_json(const ClusterModel& model) {
  ordered_json j;
  j["problem"] = model.problem;
  j["k"] = model.k;
  j["effective_k"] = model.effective_k;
  j["seed"] = model.seed;
  j["embedding_model"] = model.embedding_model;
  j["iterations"] = model.iterations;
  j["wcss_history"] = model.wcss_history;
  auto clusters = ordered_json::array();
  for (const auto& c : model.clusters) {
    ordered_json cj;
    cj["id"] = c.id;
    cj["label"] = c.label;
    cj["members"] = c.members;
    clusters.push_back(std::move(cj));
  }
  j["clusters"] = std::move(clusters);
  j["centroids"] = model.centroids;
  return j;
}

ClusterModel model_from_json(const json& j) {
  try {
    ClusterModel m;
    m.problem = j.at("problem").get<std::string>();
    m.k = j.at("k").get<std::size_t>();
    m.effective_k = j.at("effective_k").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.embedding_model = j.value("embedding_model", "");
    m.iterations = j.value("iterations", std::size_t{0});
    m.wcss_history = j.value("wcss_history", std::vector<double>{});
    for (const auto& cj : j.at("clusters")) {
      Cluster c;
      c.id = cj.at("id").get<int>();
      c.label = cj.at("label").get<std::vector<std::string>>();
      c.members = cj.at("members").get<std::vector<std::string>>();
      for (const auto& id : c.members) {
        if (!m.assignments.emplace(id, c.id).second) {
          throw ParseError("cluster model: record '" + id + "' assigned twice");
        }
      }
      m.clusters.push_back(std::move(c));
    }
    m.centroids = j.value("centroids", std::vector<Point>{});
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("cluster model: ") + e.what());
  }
}

std::filesystem::path default_model_path(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p += ".clusters.json";
  return p;
}

ModelSet load_models(const std::filesystem::path& path) {
  ModelSet out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.contains("problems") || !j["problems"].is_object()) {
    throw ParseError(path.string() + ": expected a 'problems' object");
  }
  for (const auto& [id, mj] : j["problems"].items()) out.emplace(id, model_from_json(mj));
  return out;
}

void save_models(const ModelSet& models, const std::filesystem::path& path) {
  ordered_json j;
  j["problems"] = ordered_json::object();
  for (const auto& [id, m] : models) j["problems"][id] = to_json(m);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << j.dump(1) << "\n";
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace biomech::clustering
