#include <gtest/gtest.h>

#include <random>

#include "tinval/error.hpp"
#include "tinval/simdb.hpp"

using namespace tinval;

namespace {

std::unique_ptr<Database> r5r6() { return load_fixture_file(TINVAL_FIXTURE_DIR "/r5r6.fix"); }

Query q5() {
  Query q;
  q.id = "Q5";
  q.tables = {"R5"};
  q.selections = {Predicate::range("R5.a1", Value(2), Value(4))};
  return q;
}

Query q6() {
  Query q;
  q.id = "Q6";
  q.tables = {"R5", "R6"};
  q.joins = {{"R6.fk", "R5.pk"}};
  q.selections = {Predicate::range("R5.a1", Value(2), Value(4)),
                  Predicate::range("R6.a3", Value(2), Value(4))};
  return q;
}

std::vector<std::int64_t> column(const std::vector<Row>& rows, const std::string& name) {
  std::vector<std::int64_t> out;
  for (const auto& r : rows) out.push_back(r.at(name).as_int());
  std::sort(out.begin(), out.end());
  return out;
}

bool has_image(const UpdateSignatureP& sig, const TupleImage& img) {
  return std::find(sig.tuples.begin(), sig.tuples.end(), img) != sig.tuples.end();
}

}  // namespace

TEST(SimDb, FixtureLayout) {
  auto db = r5r6();
  EXPECT_EQ(db->table_names(), (std::vector<std::string>{"R5", "R6"}));
  EXPECT_EQ(db->table("R5").size(), 5u);
  EXPECT_EQ(db->table("R5").find(53)->get("a1"), Value(5));
  EXPECT_EQ(db->table("R6").find(64)->get("fk"), Value(54));
  EXPECT_EQ(db->table("R6").find(64)->get("a4"), Value::text("text"));
  EXPECT_TRUE(db->table("R6").has_index("a3"));
  EXPECT_FALSE(db->table("R5").has_index("a2"));
}

TEST(SimDb, EmptyFixtureIsEmptyDatabase) {
  EXPECT_TRUE(load_fixture("")->table_names().empty());
  EXPECT_TRUE(load_fixture("# nothing\n\n")->table_names().empty());
}

TEST(SimDb, FixtureGenerators) {
  auto db = load_fixture(
      "table Y\ncolumn f int\ncolumn g text\ncolumn h int\nindex f\n"
      "generate 1000 start=1 seed=7 f=uniform:0:99 g=text:4 h=seq:10\nend\n");
  const auto& t = db->table("Y");
  ASSERT_EQ(t.size(), 1000u);
  EXPECT_EQ(t.rows().begin()->first, 1u);
  EXPECT_EQ(t.find(5)->get("h"), Value(15));
  EXPECT_EQ(t.find(5)->get("g").as_text().size(), 4u);
  for (const auto& [pk, tup] : t.rows()) {
    const auto f = tup.get("f").as_int();
    ASSERT_TRUE(f >= 0 && f <= 99);
  }
  EXPECT_TRUE(t.indexes_consistent());
  auto again = load_fixture(
      "table Y\ncolumn f int\ncolumn g text\ncolumn h int\nindex f\n"
      "generate 1000 start=1 seed=7 f=uniform:0:99 g=text:4 h=seq:10\nend\n");
  EXPECT_EQ(again->table("Y").rows(), t.rows());
}

TEST(SimDb, FixtureDivGenerator) {
  auto db = load_fixture("table T\ncolumn o int\ngenerate 7 start=10 o=div:3:1\nend\n");
  std::vector<std::int64_t> got;
  for (const auto& [pk, tup] : db->table("T").rows()) got.push_back(tup.get("o").as_int());
  EXPECT_EQ(got, (std::vector<std::int64_t>{1, 1, 1, 2, 2, 2, 3}));
}

TEST(SimDb, MalformedFixtureReportsLine) {
  for (const char* bad : {"table\n", "table T\ncolumn a float\n", "row 1 a=2\n",
                          "table T\ncolumn a int\nrow 1 b=2\n", "table T\nrow x\n",
                          "table T\ncolumn a int\nrow 1 a=1\nrow 1 a=2\n", "frobnicate\n",
                          "table T\ncolumn a text\nrow 1 a=\"open\n",
                          "table T\ncolumn a int\ngenerate 3 a=uniform:5:1\n",
                          "table T\ncolumn a int\ngenerate 3 a=div:0\n"}) {
    try {
      (void)load_fixture(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::malformed_fixture) << bad;
      EXPECT_NE(std::string(e.what()).find("line "), std::string::npos);
    }
  }
  EXPECT_THROW((void)load_fixture_file("/nonexistent/x.fix"), Error);
}

TEST(SimDb, FixtureQuotedText) {
  auto db = load_fixture("table T\ncolumn s text\nrow 1 s=\"a \\\"b\\\" c\"\nrow 2 s=null\nend\n");
  EXPECT_EQ(db->table("T").find(1)->get("s"), Value::text("a \"b\" c"));
  EXPECT_TRUE(db->table("T").find(2)->get("s").is_null());
}

TEST(SimDb, RangeQueryRows) {
  auto db = r5r6();
  const auto resp = db->execute_query(q5(), {.predicate = true});
  EXPECT_EQ(column(resp.rows, "R5.pk"), (std::vector<std::int64_t>{52, 54, 55}));
  EXPECT_TRUE(resp.cacheable);
  ASSERT_TRUE(resp.predicate_sig);
  EXPECT_EQ(resp.predicate_sig->index_attribute, "R5.a1");
  EXPECT_FALSE(resp.bloom_sig);
}

TEST(SimDb, JoinQueryRows) {
  auto db = r5r6();
  const auto resp = db->execute_query(q6(), {.predicate = true});
  ASSERT_EQ(resp.rows.size(), 1u);
  EXPECT_EQ(resp.rows[0].at("R5.pk"), Value(52));
  EXPECT_EQ(resp.rows[0].at("R6.pk"), Value(62));
  EXPECT_EQ(resp.rows[0].at("R6.a4"), Value::text("text"));
  EXPECT_EQ(db->registry().templates().size(), 1u);
}

TEST(SimDb, ContradictionIsEmptyAndNotCacheable) {
  auto db = r5r6();
  Query q = q5();
  q.selections = {Predicate::point("R5.a1", Value(1)), Predicate::point("R5.a1", Value(2))};
  const auto resp = db->execute_query(q, {.predicate = true, .bloom = true});
  EXPECT_TRUE(resp.rows.empty());
  EXPECT_FALSE(resp.cacheable);
  EXPECT_FALSE(resp.predicate_sig);
  EXPECT_FALSE(resp.bloom_sig);
  EXPECT_TRUE(db->registry().empty());
}

TEST(SimDb, ProjectionAndValidation) {
  auto db = r5r6();
  Query q = q5();
  q.projection = {"R5.a1"};
  const auto rows = db->evaluate(q);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].size(), 1u);
  EXPECT_EQ(column(rows, "R5.a1"), (std::vector<std::int64_t>{2, 3, 4}));

  auto code_of = [&](const Query& bad) {
    try {
      (void)db->evaluate(bad);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io_error;
  };
  Query t = q5();
  t.tables = {"R9"};
  EXPECT_EQ(code_of(t), Errc::unknown_table);
  Query a = q5();
  a.selections = {Predicate::point("R5.zz", Value(1))};
  EXPECT_EQ(code_of(a), Errc::unknown_attribute);
  Query j = q6();
  j.joins.clear();
  EXPECT_EQ(code_of(j), Errc::invalid_argument);
}

TEST(SimDb, FullScanOnUnindexedAttribute) {
  auto db = r5r6();
  Query q;
  q.id = "sub";
  q.tables = {"R5"};
  q.selections = {Predicate::substring("R5.a2", "an ex")};
  EXPECT_EQ(db->evaluate(q).size(), 5u);
  q.selections = {Predicate::point("R6.a4", Value::text("text"))};
  q.tables = {"R6"};
  EXPECT_EQ(db->evaluate(q).size(), 5u);
}

TEST(SimDb, NullNeverJoins) {
  auto db = r5r6();
  db->execute_dml({"n", InsertStmt{"R6", {66, {{"a3", Value(3)}}}}}, {});
  Query q = q6();
  EXPECT_EQ(db->evaluate(q).size(), 1u);
}

TEST(SimDb, DmlErrorsAndVersions) {
  auto db = r5r6();
  EXPECT_EQ(db->version(), 0u);
  auto code_of = [&](const DmlStatement& u) {
    try {
      db->execute_dml(u, {});
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io_error;
  };
  EXPECT_EQ(code_of({"d", DeleteStmt{"R5", 99}}), Errc::missing_tuple);
  EXPECT_EQ(code_of({"u", UpdateStmt{"R5", 99, {{"a1", Value(1)}}}}), Errc::missing_tuple);
  EXPECT_EQ(code_of({"i", InsertStmt{"R5", {51, {}}}}), Errc::duplicate_pk);
  EXPECT_EQ(db->version(), 0u);
  EXPECT_EQ(db->execute_dml({"d", DeleteStmt{"R5", 53}}, {}).version, 1u);
  const auto noop = db->execute_dml({"u", UpdateStmt{"R5", 52, {{"a1", Value(2)}}}}, {.predicate = true});
  EXPECT_FALSE(noop.changed);
  EXPECT_TRUE(noop.predicate_sig->tuples.empty());
  EXPECT_EQ(db->version(), 1u);
}

TEST(SimDb, ReadYourWrites) {
  auto db = r5r6();
  auto before = db->execute_query(q5(), {});
  db->execute_dml({"U1", UpdateStmt{"R5", 51, {{"a1", Value(2)}}}}, {});
  auto after = db->execute_query(q5(), {});
  EXPECT_GT(after.version, before.version);
  EXPECT_EQ(column(after.rows, "R5.pk"), (std::vector<std::int64_t>{51, 52, 54, 55}));
}

TEST(SimDb, UpdateSignatureProjectsReferencedAttributes) {
  auto db = r5r6();
  auto q = db->execute_query(q5(), {.predicate = true});
  auto resp = db->execute_dml({"U1", UpdateStmt{"R5", 51, {{"a1", Value(2)}}}}, {.predicate = true});
  ASSERT_TRUE(resp.predicate_sig);
  const auto& tuples = resp.predicate_sig->tuples;
  ASSERT_EQ(tuples.size(), 2u);
  EXPECT_TRUE(has_image(*resp.predicate_sig, {"R5", {{"R5.a1", Value(1)}}}));
  EXPECT_TRUE(has_image(*resp.predicate_sig, {"R5", {{"R5.a1", Value(2)}}}));
  EXPECT_TRUE(match_p(*q.predicate_sig, *resp.predicate_sig));
}

TEST(SimDb, DeleteWithoutTemplatesIsOneImage) {
  auto db = r5r6();
  auto q = db->execute_query(q5(), {.predicate = true});
  auto resp = db->execute_dml({"d", DeleteStmt{"R5", 53}}, {.predicate = true});
  ASSERT_EQ(resp.predicate_sig->tuples.size(), 1u);
  EXPECT_EQ(resp.predicate_sig->tuples[0], (TupleImage{"R5", {{"R5.a1", Value(5)}}}));
}

TEST(SimDb, JoinTemplateInstantiation) {
  auto db = r5r6();
  auto q = db->execute_query(q6(), {.predicate = true});
  const auto src = make_join_template(q6()).id;
  const DmlStatement u2{"U2", UpdateStmt{"R6", 64, {{"a3", Value(4)}}}};
  const auto sig = make_update_signature(u2, *db);
  EXPECT_TRUE(has_image(sig, {src, {{"R5.a1", Value(4)}, {"R6.a3", Value(5)}}}));
  EXPECT_TRUE(has_image(sig, {src, {{"R5.a1", Value(4)}, {"R6.a3", Value(4)}}}));
  EXPECT_TRUE(has_image(sig, {"R6", {{"R6.a3", Value(5)}}}));
  EXPECT_TRUE(has_image(sig, {"R6", {{"R6.a3", Value(4)}}}));
  EXPECT_EQ(sig.tuples.size(), 4u);
  EXPECT_TRUE(match_p(*q.predicate_sig, sig));
  db->execute_dml(u2, {});
  EXPECT_EQ(db->evaluate(q6()).size(), 2u);
}

TEST(SimDb, FootprintReleaseShrinksRegistry) {
  auto db = r5r6();
  {
    auto a = db->execute_query(q6(), {.predicate = true, .bloom = true});
    auto b = db->execute_query(q6(), {.predicate = true, .bloom = true});
    EXPECT_EQ(db->registry().templates().size(), 1u);
    EXPECT_EQ(db->registry().attributes().size(), 2u);
    EXPECT_EQ(db->registry().indexed_attributes("R6"), std::vector<std::string>{"a3"});
    a = {};
    EXPECT_EQ(db->registry().templates().size(), 1u);
  }
  EXPECT_TRUE(db->registry().empty());
}

TEST(SimDb, FootprintOutlivesDatabase) {
  std::shared_ptr<const QueryFootprint> fp;
  {
    auto db = r5r6();
    fp = db->execute_query(q5(), {.predicate = true}).footprint;
  }
  fp.reset();
  SUCCEED();
}

// Random histories over two joined tables: the index stays consistent and
// every cached result change is matched by that step's update signature.
TEST(SimDb, SignatureCompletenessUnderRandomHistory) {
  std::mt19937_64 rng(99);
  auto db = r5r6();
  auto rnd = [&](int n) { return static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n)); };
  std::vector<Query> qs;
  for (int i = 0; i < 12; ++i) {
    std::int64_t a = rnd(8), b = rnd(8);
    if (b < a) std::swap(a, b);
    Query q;
    q.id = "q" + std::to_string(i);
    if (i % 3 == 0) {
      q.tables = {"R5", "R6"};
      q.joins = {{"R6.fk", "R5.pk"}};
      q.selections = {Predicate::range("R5.a1", Value(a), Value(b)),
                      Predicate::point("R6.a3", Value(rnd(6)))};
    } else if (i % 3 == 1) {
      q.tables = {"R6"};
      q.selections = {Predicate::range("R6.a3", Value(a), Value(b))};
    } else {
      q.tables = {"R5"};
      q.selections = {Predicate::range("R5.a1", Value(a), Value(b), rng() % 2, rng() % 2)};
    }
    qs.push_back(std::move(q));
  }
  const Modes both{.predicate = true, .bloom = true};
  std::vector<QueryResponse> cached;
  for (const auto& q : qs) cached.push_back(db->execute_query(q, both));
  std::uint64_t next = 100;
  for (int step = 0; step < 1500; ++step) {
    const std::string table = rng() % 2 ? "R5" : "R6";
    const auto& rows = db->table(table).rows();
    DmlStatement u;
    u.id = "u" + std::to_string(step);
    const auto r = rng() % 4;
    if (r == 0 || rows.size() < 3) {
      AttrList attrs = table == "R5" ? AttrList{{"a1", Value(rnd(8))}}
                                     : AttrList{{"fk", Value(rnd(2) ? 51 + rnd(60) : 100 + rnd(50))},
                                                {"a3", Value(rnd(6))}};
      u.kind = InsertStmt{table, {next++, attrs}};
    } else {
      auto it = rows.begin();
      std::advance(it, static_cast<long>(rng() % rows.size()));
      if (r == 1) {
        u.kind = DeleteStmt{table, it->first};
      } else if (table == "R5") {
        u.kind = UpdateStmt{table, it->first, {{"a1", Value(rnd(8))}}};
      } else {
        u.kind = UpdateStmt{table, it->first, {{rng() % 2 ? "a3" : "fk", Value(rng() % 2 ? rnd(6) : 51 + rnd(60))}}};
      }
    }
    const auto resp = db->execute_dml(u, both);
    ASSERT_TRUE(db->table(table).indexes_consistent());
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const auto now = db->evaluate(qs[i]);
      if (!cached[i].cacheable) {
        cached[i] = db->execute_query(qs[i], both);
        continue;
      }
      if (now == cached[i].rows) continue;
      ASSERT_TRUE(match_p(*cached[i].predicate_sig, *resp.predicate_sig))
          << qs[i].id << " missed by " << u.id;
      cached[i] = db->execute_query(qs[i], both);
    }
  }
}
