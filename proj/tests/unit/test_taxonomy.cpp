#include <doctest.h>

#include "biomech/llm/backend.hpp"
#include "biomech/llm/errors.hpp"
#include "biomech/llm/gateway.hpp"
#include "biomech/taxonomy/hierarchy.hpp"
#include "biomech/taxonomy/tree.hpp"

#include "fakes.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <set>
#include <thread>

using namespace biomech;
using namespace biomech::taxonomy;
using testsupport::Classified;
using testsupport::Gen;

namespace {

Classified org(const std::string& name, const std::string& klass, const std::string& order,
               const std::string& family = "f", const std::string& genus = "g") {
  return {name, {"eukarya", "animalia", "chordata", klass, order, family, genus}};
}

std::vector<std::string> names_of(const std::vector<const TreeNode*>& nodes) {
  std::vector<std::string> out;
  for (const auto* n : nodes) out.push_back(n->name);
  return out;
}

std::vector<std::string> paths_of(const std::vector<const TreeNode*>& nodes) {
  std::vector<std::string> out;
  for (const auto* n : nodes) out.push_back(n->path());
  return out;
}

std::size_t count_nodes(const TreeNode& n) {
  std::size_t k = 0;
  for (const auto& [_, c] : n.children) k += 1 + count_nodes(*c);
  return k;
}

}  // namespace

TEST_CASE("parse_hierarchy_reply") {
  const TaxonomicHierarchy bee({"eukarya", "animalia", "arthropoda", "insecta", "hymenoptera", "apidae", "apis"});
  SUBCASE("python dict with capitalised names") {
    CHECK(parse_hierarchy_reply(R"({"domain": "Eukarya", "kingdom": "Animalia", "phylum": "Arthropoda", )"
                                R"("class": "Insecta", "order": "Hymenoptera", "family": "Apidae", "genus": "Apis"})") ==
          bee);
  }
  SUBCASE("fenced, single quoted") {
    CHECK(parse_hierarchy_reply("```python\n{'domain': 'Eukarya', 'kingdom': 'Animalia', 'phylum': 'Arthropoda',\n"
                                " 'class': 'Insecta', 'order': 'Hymenoptera', 'family': 'Apidae', 'genus': 'Apis'}\n```") ==
          bee);
  }
  SUBCASE("key: value lines") {
    CHECK(parse_hierarchy_reply("Domain: Eukarya\nKingdom: Animalia\nPhylum: Arthropoda\nClass: Insecta\n"
                                "Order: Hymenoptera\nFamily: Apidae\nGenus: Apis\n") == bee);
  }
  SUBCASE("missing family") {
    try {
      parse_hierarchy_reply(R"({"domain": "Eukarya", "kingdom": "Animalia", "phylum": "Arthropoda", )"
                            R"("class": "Insecta", "order": "Hymenoptera", "genus": "Apis"})",
                            "honey bee");
      FAIL("expected IncompleteHierarchyError");
    } catch (const IncompleteHierarchyError& e) {
      CHECK(e.missing() == std::vector<Rank>{Rank::family});
      CHECK(std::string(e.what()).find("honey bee") != std::string::npos);
    }
  }
  SUBCASE("prose") { CHECK_THROWS_AS(parse_hierarchy_reply("I am not sure."), IncompleteHierarchyError); }
}

TEST_CASE("hierarchy fetcher caches and shares requests") {
  auto backend = std::make_shared<testsupport::FunctionBackend>(
      [](const llm::RenderedRequest& r) {
        const auto& o = r.request.bindings.at("organism");
        if (o == "sea sparkle") return std::string(R"({"domain": "Eukarya"})");
        return std::string(R"({"domain": "Eukarya", "kingdom": "Animalia", "phylum": "Arthropoda", "class": "Insecta", )"
                           R"("order": "Hymenoptera", "family": "Apidae", "genus": "Apis"})");
      },
      std::chrono::milliseconds(30));
  llm::Gateway gw(backend, std::make_shared<llm::MockEmbedder>());
  HierarchyCache cache;
  HierarchyFetcher fetcher(gw, cache);

  const auto first = fetcher.fetch("Honey Bee");
  CHECK(first.at(Rank::order) == "hymenoptera");
  CHECK(backend->calls() == 1);
  CHECK(fetcher.fetch("honey bee") == first);
  CHECK(backend->calls() == 1);

  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { fetcher.fetch("bumblebee"); });
  for (auto& t : threads) t.join();
  CHECK(backend->calls() == 2);

  CHECK_THROWS_AS(fetcher.fetch("sea sparkle"), IncompleteHierarchyError);
  CHECK_THROWS_AS(fetcher.fetch("sea sparkle"), IncompleteHierarchyError);
  CHECK(backend->calls() == 4);  // failures are not cached
  CHECK(cache.size() == 2);
}

TEST_CASE("hierarchy cache file round trip") {
  testsupport::TempDir tmp("cache");
  HierarchyCache cache;
  cache.put("honey bee", TaxonomicHierarchy({"eukarya", "animalia", "arthropoda", "insecta", "hymenoptera", "apidae", "apis"}));
  cache.put("giraffe", TaxonomicHierarchy({"eukarya", "animalia", "chordata", "mammalia", "artiodactyla", "giraffidae", "giraffa"}));
  cache.save(tmp / "cache.jsonl");
  HierarchyCache back;
  back.load(tmp / "cache.jsonl");
  CHECK(back.size() == 2);
  CHECK(back.get("giraffe") == cache.get("giraffe"));
  back.load(tmp / "missing.jsonl");
  CHECK(back.size() == 2);
  testsupport::spit(tmp / "bad.jsonl", "{\"organism\": 1}\n");
  CHECK_THROWS_AS(back.load(tmp / "bad.jsonl"), ParseError);
}

TEST_CASE("build_tree") {
  SUBCASE("zero records") {
    const auto t = TaxonomicTree::build({});
    CHECK(t.root().children.empty());
    CHECK(t.organism_count() == 0);
  }
  SUBCASE("two insects in different orders share one class node") {
    const auto recs = testsupport::records_from(
        {{"honey bee", {"eukarya", "animalia", "arthropoda", "insecta", "hymenoptera", "apidae", "apis"}},
         {"silk moth", {"eukarya", "animalia", "arthropoda", "insecta", "lepidoptera", "bombycidae", "bombyx"}}});
    const auto t = TaxonomicTree::build(recs);
    const auto classes = t.nodes_at(Rank::klass);
    REQUIRE(classes.size() == 1);
    CHECK(classes[0]->name == "insecta");
    CHECK(classes[0]->child_names() == std::vector<std::string>{"hymenoptera", "lepidoptera"});
    CHECK(count_nodes(t.root()) == 4 + 2 * 3);
    CHECK(classes[0]->path() == "eukarya/animalia/arthropoda/insecta");
  }
  SUBCASE("same organism twice is idempotent") {
    auto recs = testsupport::records_from({org("okapi", "mammalia", "artiodactyla")});
    const auto once = TaxonomicTree::build(recs);
    recs.push_back(recs[0]);
    const auto twice = TaxonomicTree::build(recs);
    CHECK(count_nodes(once.root()) == count_nodes(twice.root()));
    CHECK(twice.nodes_at(Rank::genus)[0]->organisms == std::vector<std::string>{"okapi"});
  }
  SUBCASE("records without taxonomy are skipped and counted") {
    auto recs = testsupport::records_from({org("okapi", "mammalia", "artiodactyla")});
    auto bare = make_record("manage-impact", "x", "mystery", RecordSource::seed_asknature);
    recs.push_back(bare);
    const auto t = TaxonomicTree::build(recs);
    CHECK(t.skipped_records() == 1);
    CHECK(t.organism_count() == 1);
  }
}

TEST_CASE("cut_and_rank") {
  SUBCASE("ascending by child count") {
    const auto recs = testsupport::records_from({org("a", "insecta", "o1"), org("b", "insecta", "o2"),
                                                 org("c", "insecta", "o3"), org("d", "mammalia", "o4"),
                                                 org("e", "aves", "o5"), org("f", "aves", "o6")});
    const auto t = TaxonomicTree::build(recs);
    CHECK(names_of(cut_and_rank(t, Rank::klass)) == std::vector<std::string>{"mammalia", "aves", "insecta"});
  }
  SUBCASE("single node") {
    const auto t = TaxonomicTree::build(testsupport::records_from({org("a", "aves", "o")}));
    CHECK(names_of(cut_and_rank(t, Rank::klass)) == std::vector<std::string>{"aves"});
  }
  SUBCASE("ties are alphabetical") {
    const auto t = TaxonomicTree::build(testsupport::records_from({org("a", "reptilia", "o1"), org("b", "aves", "o2")}));
    CHECK(names_of(cut_and_rank(t, Rank::klass)) == std::vector<std::string>{"aves", "reptilia"});
  }
  SUBCASE("empty level") { CHECK(cut_and_rank(TaxonomicTree::build({}), Rank::order).empty()); }
}

TEST_CASE("most_populated and sample_children") {
  std::vector<Classified> cs;
  for (int i = 0; i < 5; ++i) cs.push_back(org("a" + std::to_string(i), "a", "oa" + std::to_string(i)));
  for (int i = 0; i < 2; ++i) cs.push_back(org("b" + std::to_string(i), "b", "ob" + std::to_string(i)));
  for (int i = 0; i < 9; ++i) cs.push_back(org("c" + std::to_string(i), "c", "oc" + std::to_string(i)));
  const auto t = TaxonomicTree::build(testsupport::records_from(cs));
  CHECK(most_populated(t, Rank::klass, 2) == std::vector<std::string>{"c", "a"});
  CHECK(most_populated(t, Rank::klass, 50) == std::vector<std::string>{"c", "a", "b"});

  const auto* c = cut_and_rank(t, Rank::klass).back();
  REQUIRE(c->name == "c");
  const auto s1 = sample_children(*c, 4, 42);
  CHECK(s1 == sample_children(*c, 4, 42));
  CHECK(s1.size() == 4);
  CHECK(std::set<std::string>(s1.begin(), s1.end()).size() == 4);
  CHECK(sample_children(*c, 50, 1).size() == 9);
  auto all = sample_children(*c, 50, 1);
  std::sort(all.begin(), all.end());
  CHECK(all == c->child_names());

  const auto* genus = t.nodes_at(Rank::genus)[0];
  CHECK(sample_children(*genus, 50, 3).size() == genus->organisms.size());
}

TEST_CASE("sort keys") {
  CHECK(parse_sort_key("subtree-size") == SortKey::subtree_size);
  CHECK(sort_key_name(SortKey::immediate_children) == "immediate-children");
  CHECK_FALSE(parse_sort_key("size").has_value());
  // aves: one order with many families; mammalia: two orders with one each.
  std::vector<Classified> cs = {org("m1", "mammalia", "o1"), org("m2", "mammalia", "o2")};
  for (int i = 0; i < 4; ++i) cs.push_back(org("b" + std::to_string(i), "aves", "passeriformes", "f" + std::to_string(i)));
  const auto t = TaxonomicTree::build(testsupport::records_from(cs));
  CHECK(names_of(cut_and_rank(t, Rank::klass)) == std::vector<std::string>{"aves", "mammalia"});
  CHECK(names_of(cut_and_rank(t, Rank::klass, SortKey::subtree_size)) == std::vector<std::string>{"mammalia", "aves"});
}

TEST_CASE("property: tree and sorting match a brute-force recount") {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Gen g(seed);
    const auto cs = testsupport::gen_hierarchies(g, 30);
    const testsupport::oracle::TreeCount oracle(cs);
    const auto t = TaxonomicTree::build(testsupport::records_from(cs));

    CHECK(count_nodes(t.root()) == oracle.nodes.size());
    for (std::size_t d = 1; d <= 7; ++d) {
      const Rank rank = kAllRanks[d - 1];
      const auto nodes = t.nodes_at(rank);
      CHECK(nodes.size() == oracle.count_at(d));
      for (const auto* n : nodes) {
        CHECK(n->child_count() == oracle.nodes.at(n->path()).children.size());
        CHECK(n->subtree_size() == oracle.subtree_size(n->path()));
      }
      for (bool subtree : {false, true}) {
        const auto key = subtree ? SortKey::subtree_size : SortKey::immediate_children;
        if (paths_of(cut_and_rank(t, rank, key)) != oracle.cut_and_rank(d, subtree)) ++mismatches;
        for (std::size_t n : {1u, 2u, 3u, 50u}) {
          if (most_populated(t, rank, n, key) != oracle.most_populated(d, n, subtree)) ++mismatches;
        }
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("property: trees only grow as records are added") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Gen g(seed * 31);
    const auto recs = testsupport::records_from(testsupport::gen_hierarchies(g, 30));
    std::set<std::string> before;
    for (std::size_t k = 1; k <= recs.size(); ++k) {
      const auto t = TaxonomicTree::build(std::span(recs.data(), k));
      std::set<std::string> now;
      for (Rank r : kAllRanks) {
        for (const auto* n : t.nodes_at(r)) now.insert(n->path());
      }
      CHECK(std::includes(now.begin(), now.end(), before.begin(), before.end()));
      before = std::move(now);
    }
  }
}

TEST_CASE("property: sample_children draws distinct children deterministically") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Gen g(seed);
    const auto t = TaxonomicTree::build(testsupport::records_from(testsupport::gen_hierarchies(g, 30)));
    const auto nodes = t.nodes_at(kAllRanks[g.below(7)]);
    const auto* node = nodes[g.below(nodes.size())];
    const std::size_t n = g.between(1, 8);
    const auto s = sample_children(*node, n, seed);
    CHECK(s == sample_children(*node, n, seed));
    CHECK(s.size() == std::min(n, node->child_count()));
    const std::set<std::string> distinct(s.begin(), s.end());
    CHECK(distinct.size() == s.size());
    const auto all = node->child_names();
    for (const auto& x : s) CHECK(std::find(all.begin(), all.end(), x) != all.end());
  }
}
