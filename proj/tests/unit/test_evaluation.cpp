#include <doctest.h>

#include "biomech/core/dataset.hpp"
#include "biomech/evaluation/evaluation.hpp"
#include "biomech/llm/backend.hpp"
#include "biomech/llm/factory.hpp"

#include "fakes.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>

using namespace biomech;
using namespace biomech::eval;
using testsupport::Gen;

namespace {

GoldTaxonomySet fixture_gold() { return GoldTaxonomySet::load(testsupport::fixtures_dir() / "gold" / "gold.json"); }

Predictions perfect(const GoldTaxonomySet& gold) {
  Predictions p;
  for (const auto& e : gold.entries) p[e.organism] = e.hierarchy;
  return p;
}

/// Predictions with `wrong[r]` errors at rank r, spread over distinct organisms.
Predictions with_errors(const GoldTaxonomySet& gold, const std::array<std::size_t, kRankCount>& wrong) {
  auto p = perfect(gold);
  std::size_t next = 0;
  for (Rank r : kAllRanks) {
    for (std::size_t i = 0; i < wrong[rank_index(r)]; ++i) {
      auto names = p[gold.entries[next % gold.entries.size()].organism]->names();
      names[rank_index(r)] = "wrong";
      p[gold.entries[next % gold.entries.size()].organism] = TaxonomicHierarchy(names);
      ++next;
    }
  }
  return p;
}

std::unique_ptr<llm::Gateway> replay_gateway(const std::string& dir, const std::string& model) {
  llm::BackendOptions o;
  o.kind = llm::BackendKind::replay;
  o.replay_dir = testsupport::fixtures_dir() / "replay" / dir;
  o.models.taxonomy_model = model;
  return llm::make_gateway(o);
}

std::unique_ptr<llm::Gateway> mock_gateway(const std::string& table) {
  llm::BackendOptions o;
  o.kind = llm::BackendKind::mock;
  o.mock_table = testsupport::fixtures_dir() / "mock" / table;
  return llm::make_gateway(o);
}

std::string row(const AccuracyTable& t) {
  std::string out;
  for (Rank r : kAllRanks) out += t.at(r).describe() + (r == Rank::genus ? "" : " ");
  return out;
}

/// Appends records so that problem p's k-th record has organism names[p][k]
/// and a taxonomy whose class is the same name ("" = no taxonomy).
Dataset diversity_dataset(const std::vector<std::vector<std::string>>& names) {
  Dataset d;
  for (std::size_t p = 0; p < names.size(); ++p) {
    const auto slug = "problem-" + std::string(1, static_cast<char>('a' + p));
    d.add_problem(Problem::from_slug(slug));
    std::vector<MechanismRecord> recs;
    for (std::size_t k = 0; k < names[p].size(); ++k) {
      const auto organism = names[p][k].empty() ? "anon" + std::to_string(k) : names[p][k];
      auto r = make_record(slug, "mechanism " + std::to_string(k), organism, RecordSource::expansion_breadth);
      if (!names[p][k].empty()) {
        r.taxonomy = TaxonomicHierarchy({"eukarya", "animalia", "chordata", names[p][k], "o", "f", "g"});
      }
      recs.push_back(r);
    }
    d.append(recs);
  }
  return d;
}

std::vector<std::string> slugs(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t p = 0; p < n; ++p) out.push_back("problem-" + std::string(1, static_cast<char>('a' + p)));
  return out;
}

std::vector<double> means(const DiversityCurve& c) {
  std::vector<double> out;
  for (const auto& p : c.points) out.push_back(p.mean_unique);
  return out;
}

}  // namespace

TEST_CASE("gold set loading") {
  const auto gold = fixture_gold();
  CHECK(gold.entries.size() == 90);
  CHECK(gold.entries[0].organism == "spider monkey");
  CHECK(gold.entries[0].hierarchy.at(Rank::family) == "atelidae");
  CHECK_FALSE(gold.source_note.empty());

  nlohmann::json dup = {{"source", "x"},
                        {"entries",
                         {{{"organism", "a"}, {"hierarchy", taxonomy_to_json(gold.entries[0].hierarchy)}},
                          {{"organism", "a"}, {"hierarchy", taxonomy_to_json(gold.entries[0].hierarchy)}}}}};
  CHECK_THROWS_AS(GoldTaxonomySet::from_json(dup), ParseError);
  CHECK_THROWS_AS(GoldTaxonomySet::from_json({{"source", "x"}, {"entries", nlohmann::json::array()}}), ParseError);
  nlohmann::json partial = {{"source", "x"},
                            {"entries", {{{"organism", "a"}, {"hierarchy", {{"domain", "eukarya"}}}}}}};
  CHECK_THROWS_AS(GoldTaxonomySet::from_json(partial), ParseError);
  CHECK_THROWS_AS(GoldTaxonomySet::load("/nonexistent/gold.json"), Error);
}

TEST_CASE("score_taxonomy examples") {
  const auto gold = fixture_gold();
  SUBCASE("87 of 90 at order") {
    const auto t = score_taxonomy(with_errors(gold, {0, 0, 0, 0, 3, 0, 0}), gold);
    CHECK(t.at(Rank::order).correct == 87);
    CHECK(t.at(Rank::order).percentage == doctest::Approx(96.7));
    CHECK(t.at(Rank::order).describe() == "96.7% (87/90)");
    CHECK(t.at(Rank::family).describe() == "100.0% (90/90)");
  }
  SUBCASE("84 of 90 at genus") {
    const auto t = score_taxonomy(with_errors(gold, {0, 0, 0, 0, 0, 0, 6}), gold);
    CHECK(t.at(Rank::genus).describe() == "93.3% (84/90)");
  }
  SUBCASE("identical to gold") {
    const auto t = score_taxonomy(perfect(gold), gold);
    for (Rank r : kAllRanks) CHECK(t.at(r).percentage == doctest::Approx(100.0));
  }
  SUBCASE("missing and empty predictions count as wrong everywhere") {
    auto p = perfect(gold);
    p.erase(gold.entries[0].organism);
    p[gold.entries[1].organism] = std::nullopt;
    const auto t = score_taxonomy(p, gold);
    for (Rank r : kAllRanks) CHECK(t.at(r).correct == 88);
    const auto diff = diff_predictions(p, gold);
    CHECK(diff.size() == 14);
    CHECK(diff[0].organism == gold.entries[0].organism);
    CHECK(diff[0].rank == Rank::domain);
    CHECK(diff[0].predicted.empty());
  }
  SUBCASE("empty gold") {
    CHECK_THROWS_AS(score_taxonomy({}, GoldTaxonomySet{}), Error);
  }
  SUBCASE("markdown and json") {
    const auto t = score_taxonomy(with_errors(gold, {0, 0, 0, 0, 3, 5, 1}), gold);
    const auto md = t.to_markdown("gpt-4");
    CHECK(md.find("| gpt-4 | 100.0% (90/90) | 100.0% (90/90) | 100.0% (90/90) | 100.0% (90/90) | 96.7% (87/90) | "
                  "94.4% (85/90) | 98.9% (89/90) |") != std::string::npos);
    CHECK(t.to_json()["family"]["correct"] == 85);
  }
}

TEST_CASE("round_to_tenth") {
  CHECK(round_to_tenth(96.666) == doctest::Approx(96.7));
  CHECK(round_to_tenth(94.444) == doctest::Approx(94.4));
  CHECK(round_to_tenth(0.05) == doctest::Approx(0.1));
  for (std::size_t total = 1; total <= 120; ++total) {
    for (std::size_t c = 0; c <= total; ++c) {
      CHECK(round_to_tenth(100.0 * static_cast<double>(c) / static_cast<double>(total)) ==
            doctest::Approx(testsupport::oracle::percent_tenth(c, total)));
    }
  }
}

TEST_CASE("property: scoring ignores gold order and counts per rank") {
  const auto gold = fixture_gold();
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Gen g(seed);
    Predictions p;
    std::array<std::size_t, kRankCount> expected{};
    for (const auto& e : gold.entries) {
      if (g.chance(0.05)) {
        continue;  // missing: wrong everywhere
      }
      auto names = e.hierarchy.names();
      for (std::size_t r = 0; r < kRankCount; ++r) {
        if (g.chance(0.1)) names[r] = "x" + names[r];
      }
      for (std::size_t r = 0; r < kRankCount; ++r) expected[r] += names[r] == e.hierarchy.names()[r];
      p[e.organism] = TaxonomicHierarchy(names);
    }
    auto shuffled = gold;
    std::shuffle(shuffled.entries.begin(), shuffled.entries.end(), g.rng);
    const auto a = score_taxonomy(p, gold);
    const auto b = score_taxonomy(p, shuffled);
    for (Rank r : kAllRanks) {
      CHECK(a.at(r).correct == expected[rank_index(r)]);
      CHECK(a.at(r).total == 90);
      CHECK(b.at(r).correct == a.at(r).correct);
      CHECK(a.at(r).percentage == doctest::Approx(testsupport::oracle::percent_tenth(expected[rank_index(r)], 90)));
    }
    std::size_t wrong = 0;
    for (Rank r : kAllRanks) wrong += 90 - a.at(r).correct;
    CHECK(diff_predictions(p, gold).size() == wrong);
  }
}

TEST_CASE("taxonomy eval against replay fixtures") {
  const auto gold = fixture_gold();
  SUBCASE("stronger model row") {
    auto gw = replay_gateway("gpt4", "gpt-4");
    const auto start = std::chrono::steady_clock::now();
    const auto result = run_taxonomy_eval(gold, *gw);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));
    CHECK(row(result.table) ==
          "100.0% (90/90) 100.0% (90/90) 100.0% (90/90) 100.0% (90/90) 96.7% (87/90) 94.4% (85/90) 98.9% (89/90)");
    CHECK(result.failures.empty());
    CHECK(result.mismatches.size() == 9);
    const auto mole = std::find_if(result.mismatches.begin(), result.mismatches.end(),
                                   [](const Mismatch& m) { return m.organism == "naked mole-rat"; });
    REQUIRE(mole != result.mismatches.end());
    CHECK(mole->rank == Rank::family);
    CHECK(mole->predicted == "bathyergidae");
    CHECK(mole->expected == "heterocephalidae");
  }
  SUBCASE("cheaper model row") {
    auto gw = replay_gateway("gpt35", "gpt-3.5-turbo");
    const auto result = run_taxonomy_eval(gold, *gw);
    CHECK(row(result.table) ==
          "100.0% (90/90) 100.0% (90/90) 100.0% (90/90) 100.0% (90/90) 95.6% (86/90) 95.6% (86/90) 93.3% (84/90)");
  }
  SUBCASE("replay under the wrong model misses and is scored as misses") {
    auto gw = replay_gateway("gpt4", "gpt-3.5-turbo");
    const auto result = run_taxonomy_eval(gold, *gw);
    CHECK(result.failures.size() == 90);
    for (Rank r : kAllRanks) CHECK(result.table.at(r).correct == 0);
  }
  SUBCASE("all-correct mock table") {
    auto gw = mock_gateway("taxonomy-correct.json");
    const auto result = run_taxonomy_eval(gold, *gw);
    for (Rank r : kAllRanks) CHECK(result.table.at(r).describe() == "100.0% (90/90)");
    CHECK(result.mismatches.empty());
    const auto j = result.to_json();
    CHECK(j["accuracy"]["genus"]["correct"] == 90);
    CHECK(j.contains("mismatches"));
  }
  SUBCASE("backend failures are recorded") {
    auto backend = std::make_shared<testsupport::FunctionBackend>([](const llm::RenderedRequest& r) -> std::string {
      if (r.request.bindings.at("organism") == "spider monkey") throw Error("boom");
      return "no json here";
    });
    llm::Gateway gw(backend, std::make_shared<llm::MockEmbedder>());
    const auto result = run_taxonomy_eval(gold, gw, 4);
    CHECK(result.failures.size() == 90);
    CHECK(result.failures[0].first == "spider monkey");
    CHECK(backend->peak() <= 4);
  }
}

TEST_CASE("diversity examples") {
  SUBCASE("all distinct") {
    std::vector<std::string> names;
    for (int i = 0; i < 25; ++i) names.push_back("organism " + std::to_string(i));
    const auto d = diversity_dataset({names});
    const auto c = diversity_curve(d, slugs(1), DiversityLevel::parse("organism"));
    REQUIRE(c.points.size() == 25);
    for (std::size_t i = 0; i < 25; ++i) {
      CHECK(c.points[i].index == i);
      CHECK(c.points[i].mean_unique == doctest::Approx(static_cast<double>(i + 1)));
    }
    const auto classes = diversity_curve(d, slugs(1), DiversityLevel::parse("class"));
    CHECK(classes.points.back().mean_unique == doctest::Approx(25.0));
  }
  SUBCASE("one organism repeated") {
    const auto d = diversity_dataset({std::vector<std::string>(10, "gecko")});
    for (const auto& p : diversity_curve(d, slugs(1), DiversityLevel::parse("species")).points) {
      CHECK(p.mean_unique == doctest::Approx(1.0));
    }
  }
  SUBCASE("hand-built pair of problems") {
    // a: x y x z -> 1 2 2 3 ; b: x x w (w, x) -> 1 1 2 ; mean truncated to 3.
    const std::vector<std::vector<std::string>> names = {{"x", "y", "x", "z"}, {"x", "x", "w"}};
    const auto d = diversity_dataset(names);
    const auto c = diversity_curve(d, slugs(2), DiversityLevel::parse("class"));
    CHECK(means(c) == std::vector<double>{1.0, 1.5, 2.0});
    CHECK(means(c) == testsupport::oracle::cumulative_unique(names));
    CHECK(c.to_csv() == "index,mean_unique\n0,1\n1,1.5\n2,2\n");
  }
  SUBCASE("records without taxonomy add no name at rank levels") {
    const std::vector<std::vector<std::string>> names = {{"", "x", "", "y"}};
    const auto d = diversity_dataset(names);
    CHECK(means(diversity_curve(d, slugs(1), DiversityLevel::parse("class"))) == std::vector<double>{0, 1, 1, 2});
    CHECK(means(diversity_curve(d, slugs(1), DiversityLevel::parse("organism"))) == std::vector<double>{1, 2, 3, 4});
  }
  SUBCASE("errors") {
    const auto d = diversity_dataset({{"x"}});
    CHECK_THROWS_AS(diversity_curve(d, {}, DiversityLevel::parse("class")), Error);
    CHECK_THROWS_AS(diversity_curve(d, {"problem-z"}, DiversityLevel::parse("class")), Error);
    CHECK_THROWS_AS(DiversityLevel::parse("tribe"), Error);
  }
  SUBCASE("level names") {
    CHECK(DiversityLevel::parse("species").name() == "organism");
    CHECK(DiversityLevel::parse("family").name() == "family");
    CHECK(DiversityLevel::parse("family").rank == Rank::family);
  }
  SUBCASE("default problems") {
    CHECK(default_eval_problems().size() == 5);
    const auto listed = testsupport::slurp(testsupport::source_dir() / "config" / "eval_problems.txt");
    for (const auto& p : default_eval_problems()) CHECK(listed.find(p) != std::string::npos);
  }
}

TEST_CASE("property: diversity matches the brute-force oracle") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Gen g(seed);
    const std::size_t problems = g.between(1, 5);
    std::vector<std::vector<std::string>> names(problems);
    const std::size_t vocab = g.between(1, 30);
    for (auto& seq : names) {
      const std::size_t n = g.between(1, 40);
      for (std::size_t i = 0; i < n; ++i) {
        seq.push_back(g.chance(0.1) ? "" : "n" + std::to_string(g.below(vocab)));
      }
    }
    const auto d = diversity_dataset(names);
    const auto c = diversity_curve(d, slugs(problems), DiversityLevel::parse("class"));
    const auto expected = testsupport::oracle::cumulative_unique(names);
    REQUIRE(c.points.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK_MESSAGE(c.points[i].mean_unique == doctest::Approx(expected[i]), "seed " << seed << " index " << i);
      CHECK(c.points[i].mean_unique <= static_cast<double>(i + 1) + 1e-9);
      if (i > 0) CHECK(c.points[i].mean_unique >= c.points[i - 1].mean_unique);
    }
  }
}
