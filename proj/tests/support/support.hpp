#pragma once

#include "biomech/core/record.hpp"

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(BIOMECH_SOURCE_DIR); }
inline fs::path fixtures_dir() { return source_dir() / "tests" / "fixtures"; }
inline fs::path golden_dir() { return source_dir() / "tests" / "golden"; }
inline fs::path cli_path() { return fs::path(BIOMECH_CLI_PATH); }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("biomech-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// ---- generators -----------------------------------------------------------

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(rng() % n); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
};

using Names7 = std::array<std::string, 7>;

struct Classified {
  std::string organism;
  Names7 ranks;
};

/// Up to `max_organisms` organisms over small per-rank vocabularies, so
/// names collide across branches (the same genus under two families) and
/// organisms occasionally repeat with the same or a different hierarchy.
inline std::vector<Classified> gen_hierarchies(Gen& g, std::size_t max_organisms = 30) {
  static const char* prefix[7] = {"d", "k", "p", "c", "o", "f", "g"};
  std::array<std::size_t, 7> vocab{};
  for (std::size_t r = 0; r < 7; ++r) vocab[r] = g.between(1, r < 2 ? 2 : 5);
  const std::size_t n = g.between(1, max_organisms);
  std::vector<Classified> out;
  for (std::size_t i = 0; i < n; ++i) {
    Classified c;
    if (!out.empty() && g.chance(0.15)) {
      c = out[g.below(out.size())];
      if (g.chance(0.5)) c.ranks[6] = std::string("g") + std::to_string(g.below(vocab[6]));
    } else {
      c.organism = "org" + std::to_string(g.below(max_organisms * 2));
      for (std::size_t r = 0; r < 7; ++r) c.ranks[r] = prefix[r] + std::to_string(g.below(vocab[r]));
    }
    out.push_back(c);
  }
  return out;
}

inline std::vector<biomech::MechanismRecord> records_from(const std::vector<Classified>& cs,
                                                          const std::string& problem = "manage-impact") {
  std::vector<biomech::MechanismRecord> out;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    auto r = biomech::make_record(problem, "mechanism number " + std::to_string(i), cs[i].organism,
                                  biomech::RecordSource::seed_asknature);
    r.taxonomy = biomech::TaxonomicHierarchy(cs[i].ranks);
    r.generation_index = i;
    out.push_back(std::move(r));
  }
  return out;
}

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words = {
      "drag",  "flow",  "shell", "scale", "fin",   "the",   "of",    "and",   "skin", "silk",
      "wing",  "air",   "water", "grip",  "layer", "using", "with",  "to",    "bone", "spine",
      "fibre", "plate", "ridge", "gland", "oil",   "is",    "their", "which", "tail", "foot"};
  return words;
}

inline std::string gen_sentence(Gen& g, std::size_t min_words = 1, std::size_t max_words = 12) {
  const auto& pool = word_pool();
  std::string s;
  const std::size_t n = g.between(min_words, max_words);
  static const char* seps[] = {" ", " ", " ", ", ", "-", "; ", " (", ") "};
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += seps[g.below(8)];
    std::string w = g.pick(pool);
    if (g.chance(0.2)) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    s += w;
  }
  if (g.chance(0.5)) s += ".";
  return s;
}

}  // namespace testsupport
