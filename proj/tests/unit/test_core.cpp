#include <doctest.h>

#include "biomech/core/dataset.hpp"
#include "biomech/core/record.hpp"
#include "biomech/core/text.hpp"

#include "support.hpp"

#include <nlohmann/json.hpp>

using namespace biomech;
using testsupport::Gen;
using testsupport::TempDir;

namespace {

MechanismRecord rec(const std::string& problem, const std::string& mech, const std::string& org,
                    RecordSource src = RecordSource::seed_asknature) {
  return make_record(problem, mech, org, src);
}

TaxonomicHierarchy honey_bee() {
  return TaxonomicHierarchy({"eukarya", "animalia", "arthropoda", "insecta", "hymenoptera", "apidae", "apis"});
}

// Random dataset with every optional field exercised.
Dataset gen_dataset(Gen& g) {
  Dataset d;
  const std::vector<std::string> problems = {"manage-impact", "modify-speed", "manage-tension"};
  for (const auto& p : problems) d.add_problem(Problem::from_slug(p));
  const std::vector<std::string> orgs = {"Honey Bee", "giraffe", "Bald Eagle", "abalone", "gecko", "pélican"};
  const std::size_t batches = g.between(0, 4);
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<MechanismRecord> batch;
    const std::size_t n = g.between(0, 8);
    for (std::size_t i = 0; i < n; ++i) {
      auto src = static_cast<RecordSource>(g.below(4));
      auto r = rec(g.pick(problems), testsupport::gen_sentence(g, 1, 16), g.pick(orgs), src);
      if (g.chance(0.5)) r.taxonomy = honey_bee();
      if (g.chance(0.3)) r.parent_batch = r.problem + ":batch-" + std::to_string(b);
      if (g.chance(0.3)) r.image_url = "https://images.example/" + std::to_string(i) + ".jpg";
      if (g.chance(0.3)) r.cluster_id = static_cast<int>(g.below(20));
      batch.push_back(std::move(r));
    }
    d.append(batch);
  }
  return d;
}

}  // namespace

TEST_CASE("text helpers") {
  CHECK(text::word_count("adhesive setae enable wall climbing") == 5);
  CHECK(text::word_count("  spaced \t out\nwords ") == 3);
  CHECK(text::word_count("") == 0);
  CHECK(text::normalize_for_dedup("  Layered  Nacre, tiles. ") == "layered nacre tiles");
  CHECK(text::title_from_slug("manage-turbulence") == "Manage Turbulence");
  CHECK(text::slugify("Adapt Behaviors") == "adapt-behaviors");
  CHECK(text::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("problem ids and organisms") {
  CHECK(is_valid_problem_id("manage-turbulence"));
  CHECK_FALSE(is_valid_problem_id("Manage Turbulence"));
  CHECK_FALSE(is_valid_problem_id(""));
  CHECK_FALSE(is_valid_problem_id("-manage"));
  CHECK(Problem::from_slug("modify-speed").title == "Modify Speed");

  Organism o("  Honey Bee ");
  CHECK(o.name() == "honey bee");
  CHECK(o.display_name() == "  Honey Bee ");
}

TEST_CASE("ranks") {
  CHECK(rank_name(Rank::klass) == "class");
  CHECK(rank_plural(Rank::family) == "families");
  CHECK(rank_plural(Rank::genus) == "genera");
  CHECK(rank_plural(Rank::phylum) == "phyla");
  CHECK(parse_rank("Order") == Rank::order);
  CHECK_FALSE(parse_rank("species").has_value());
  CHECK(child_rank(Rank::order) == Rank::family);
  CHECK_FALSE(child_rank(Rank::genus).has_value());
  CHECK_THROWS_AS(TaxonomicHierarchy({"eukarya", "", "c", "d", "e", "f", "g"}), ValidationError);
}

TEST_CASE("validate_record") {
  SUBCASE("short seed is clean") {
    CHECK(validate_record(rec("manage-impact", "adhesive setae enable wall climbing", "gecko")).empty());
  }
  SUBCASE("empty mechanism is one error on mechanism") {
    auto r = rec("manage-impact", "", "gecko");
    const auto report = validate_record(r);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].field == "mechanism");
    CHECK(report.issues[0].severity == Severity::error);
  }
  SUBCASE("15-word expansion mechanism warns") {
    // 15 tokens, counted by hand.
    const std::string m = "long legs and elastic tendons sustain efficient trotting speed over long distance even in heat";
    auto r = rec("modify-speed", m, "golden jackal", RecordSource::expansion_breadth);
    REQUIRE(r.word_count == 15);
    const auto report = validate_record(r);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].severity == Severity::warning);
    CHECK(report.issues[0].message == "word_count 15 > 14");
    CHECK_FALSE(report.has_errors());
  }
  SUBCASE("13-word seed warns against 12") {
    auto r = rec("manage-impact", "one two three four five six seven eight nine ten eleven twelve thirteen", "x");
    const auto report = validate_record(r);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].message == "word_count 13 > 12");
  }
  SUBCASE("stale word_count is an error") {
    auto r = rec("manage-impact", "three word text", "x");
    r.word_count = 4;
    CHECK(validate_record(r).has_errors());
  }
  SUBCASE("bad problem id is an error") {
    auto r = rec("Manage Impact", "three word text", "x");
    CHECK(validate_record(r).has_errors());
  }
}

TEST_CASE("append_records") {
  Dataset d;
  SUBCASE("three distinct records get indices 0,1,2") {
    std::vector<MechanismRecord> batch = {rec("manage-impact", "a b", "x"), rec("manage-impact", "c d", "y"),
                                          rec("manage-impact", "e f", "z")};
    const auto res = d.append(batch);
    CHECK(res.accepted == 3);
    CHECK(res.rejected_duplicates == 0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(d.records()[i].generation_index == i);
  }
  SUBCASE("same record twice in one call") {
    std::vector<MechanismRecord> batch = {rec("manage-impact", "a b", "x"), rec("manage-impact", "a b", "x")};
    const auto res = d.append(batch);
    CHECK(res.accepted == 1);
    CHECK(res.rejected_duplicates == 1);
  }
  SUBCASE("trailing period does not make a new record") {
    std::vector<MechanismRecord> batch = {rec("manage-impact", "Nacre tiles stop cracks", "abalone"),
                                          rec("manage-impact", "Nacre tiles stop cracks.", "abalone")};
    CHECK(d.append(batch).accepted == 1);
  }
  SUBCASE("organism case does not make a new record") {
    std::vector<MechanismRecord> batch = {rec("manage-impact", "a b", "Bald Eagle"),
                                          rec("manage-impact", "a b", "bald eagle")};
    CHECK(d.append(batch).accepted == 1);
  }
  SUBCASE("indices are per problem") {
    std::vector<MechanismRecord> batch = {rec("manage-impact", "a", "x"), rec("modify-speed", "a", "x"),
                                          rec("manage-impact", "b", "x")};
    d.append(batch);
    CHECK(d.records()[1].generation_index == 0);
    CHECK(d.records()[2].generation_index == 1);
  }
  SUBCASE("an invalid record rejects the whole batch") {
    std::vector<MechanismRecord> batch = {rec("manage-impact", "fine", "x"), rec("manage-impact", "", "y")};
    CHECK_THROWS_AS(d.append(batch), ValidationError);
    CHECK(d.records().empty());
  }
  SUBCASE("over-limit records are still appended") {
    std::vector<MechanismRecord> batch = {
        rec("manage-impact", "one two three four five six seven eight nine ten eleven twelve thirteen", "x")};
    CHECK(d.append(batch).accepted == 1);
  }
}

TEST_CASE("record json uses the documented field names and omits absent optionals") {
  auto r = rec("manage-impact", "Layered nacre tiles", "Abalone");
  auto j = to_json(r);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"id", "problem", "mechanism", "organism", "generation_index", "source",
                                         "word_count"});
  CHECK(j["organism"] == "Abalone");
  CHECK(j["source"] == "seed-asknature");

  r.taxonomy = honey_bee();
  r.parent_batch = "manage-impact:batch-0";
  r.image_url = "https://x.example/a.jpg";
  r.cluster_id = 3;
  j = to_json(r);
  keys.clear();
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"id", "problem", "mechanism", "organism", "taxonomy", "generation_index",
                                         "source", "parent_batch", "word_count", "image_url", "cluster_id"});
  CHECK(record_from_json(nlohmann::json::parse(j.dump())) == r);

  CHECK_THROWS_AS(record_from_json(nlohmann::json::parse(R"({"id":"x"})")), ParseError);
  auto bad = nlohmann::json::parse(j.dump());
  bad["source"] = "crawl";
  CHECK_THROWS_AS(record_from_json(bad), ParseError);
}

TEST_CASE("load and save") {
  TempDir tmp("core");
  SUBCASE("empty file") {
    testsupport::spit(tmp / "empty.jsonl", "");
    CHECK(load_dataset(tmp / "empty.jsonl").records().empty());
  }
  SUBCASE("two-record file keeps indices") {
    Dataset d;
    std::vector<MechanismRecord> batch = {rec("manage-impact", "a b", "x"), rec("manage-impact", "c d", "y")};
    d.append(batch);
    save_dataset(d, tmp / "two.jsonl");
    const auto loaded = load_dataset(tmp / "two.jsonl");
    REQUIRE(loaded.records().size() == 2);
    CHECK(loaded.records()[1].generation_index == 1);
  }
  SUBCASE("duplicated line fails at the second occurrence") {
    const auto line = to_json(rec("manage-impact", "a b", "x")).dump();
    testsupport::spit(tmp / "dup.jsonl", line + "\n" + line + "\n");
    try {
      load_dataset(tmp / "dup.jsonl");
      FAIL("expected a ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("dup.jsonl:2:") != std::string::npos);
    }
  }
  SUBCASE("malformed line names its number") {
    const auto line = to_json(rec("manage-impact", "a b", "x")).dump();
    testsupport::spit(tmp / "bad.jsonl", line + "\n{not json\n");
    try {
      load_dataset(tmp / "bad.jsonl");
      FAIL("expected a ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("bad.jsonl:2:") != std::string::npos);
    }
  }
  SUBCASE("index gap is rejected") {
    auto r = rec("manage-impact", "a b", "x");
    r.generation_index = 1;
    testsupport::spit(tmp / "gap.jsonl", to_json(r).dump() + "\n");
    CHECK_THROWS_AS(load_dataset(tmp / "gap.jsonl"), ParseError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_dataset(tmp / "nope.jsonl"), Error); }
}

TEST_CASE("property: save/load round trip") {
  TempDir tmp("roundtrip");
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    Gen g(seed);
    const auto d = gen_dataset(g);
    const auto path = tmp / ("d" + std::to_string(seed) + ".jsonl");
    save_dataset(d, path);
    const auto back = load_dataset(path);
    CHECK_MESSAGE(back == d, "seed " << seed);
    save_dataset(back, tmp / "again.jsonl");
    CHECK(testsupport::slurp(tmp / "again.jsonl") == testsupport::slurp(path));
  }
}

TEST_CASE("property: dedup idempotence, contiguous indices, word counts") {
  for (std::uint64_t seed = 1; seed <= 80; ++seed) {
    Gen g(seed * 7919);
    Dataset d = gen_dataset(g);
    std::vector<MechanismRecord> again(d.records().begin(), d.records().end());
    CHECK(d.append(again).accepted == 0);

    std::map<std::string, std::uint64_t> next;
    for (const auto& r : d.records()) {
      CHECK(r.generation_index == next[r.problem]++);
      CHECK(r.word_count == text::split_whitespace(r.mechanism).size());
      CHECK(r.id == record_id_for(r));
    }
  }
}

TEST_CASE("annotation setters") {
  Dataset d;
  std::vector<MechanismRecord> batch = {rec("manage-impact", "a b", "x")};
  d.append(batch);
  const auto id = d.records()[0].id;
  d.set_cluster_id(id, 4);
  d.set_image_url(id, std::string("https://img.example/x.jpg"));
  d.set_taxonomy(id, honey_bee());
  CHECK(d.find(id)->cluster_id == 4);
  CHECK(d.find(id)->image_url == "https://img.example/x.jpg");
  CHECK(d.find(id)->taxonomy == honey_bee());
  CHECK_THROWS_AS(d.set_cluster_id("missing", 1), NotFoundError);
}
