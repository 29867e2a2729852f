#include <doctest.h>

#include <algorithm>
#include <random>

#include "selfsql/eval.hpp"
#include "selfsql/execution.hpp"
#include "testutil.hpp"

using namespace selfsql;

namespace {

struct Fixture {
    testutil::TmpDir tmp;
    SchemaDb db;
    Fixture() {
        auto file = tmp.path / "company.sqlite";
        testutil::write_company_db(file);
        db = testutil::company_schema(file);
    }
};

} // namespace

TEST_CASE("execute returns typed rows") {
    Fixture fx;
    ResultTable t = execute("SELECT 1", fx.db);
    REQUIRE(t.columns == 1);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][0].kind == Value::Kind::integer);
    CHECK(t.rows[0][0].i == 1);

    t = execute("SELECT name, age FROM employee WHERE emp_id = 7", fx.db);
    CHECK(t.rows[0][0].s == "Gina");
    CHECK(t.rows[0][1].kind == Value::Kind::null);

    t = execute("SELECT avg(salary) FROM employee WHERE dept_id = 3", fx.db);
    CHECK(t.rows[0][0].kind == Value::Kind::real);
    CHECK(t.rows[0][0].d == doctest::Approx(75500.25));
}

TEST_CASE("execute preserves engine order for ORDER BY") {
    Fixture fx;
    ResultTable t = execute("SELECT name FROM employee WHERE age IS NOT NULL ORDER BY age DESC",
                            fx.db);
    REQUIRE(t.rows.size() == 7);
    CHECK(t.rows[0][0].s == "Eve");   // 52
    CHECK(t.rows[1][0].s == "Bob");   // 45
    CHECK(t.rows[6][0].s == "Frank"); // 24
}

TEST_CASE("write statements are rejected before execution") {
    Fixture fx;
    CHECK_THROWS_AS(execute("DROP TABLE employee", fx.db), WriteRejectedError);
    CHECK_THROWS_AS(execute("INSERT INTO employee VALUES (99,'X',1,1.0,1)", fx.db),
                    WriteRejectedError);
    CHECK_THROWS_AS(execute("UPDATE employee SET age = 0", fx.db), WriteRejectedError);
    // table still intact
    CHECK(execute("SELECT count(*) FROM employee", fx.db).rows[0][0].i == 8);
}

TEST_CASE("syntax errors and timeouts surface distinctly") {
    Fixture fx;
    CHECK_THROWS_AS(execute("SELECT FROM WHERE", fx.db), ExecutionError);
    CHECK_THROWS_AS(
        execute("WITH RECURSIVE cnt(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM cnt) "
                "SELECT count(*) FROM cnt",
                fx.db, 100),
        QueryTimeoutError);
    SchemaDb missing = fx.db;
    missing.sqlite_present = false;
    CHECK_THROWS_AS(execute("SELECT 1", missing), ExecutionError);
}

TEST_CASE("execution_match: reflexivity and semantic rewrites") {
    Fixture fx;
    CHECK(execution_match("SELECT name FROM employee", "SELECT name FROM employee", fx.db));
    CHECK(execution_match("SELECT name, age FROM employee",
                          "SELECT name, age FROM employee WHERE 1 = 1", fx.db));
    CHECK(execution_match("SELECT name FROM employee WHERE age > 30",
                          "SELECT name FROM employee WHERE 30 < age", fx.db));
    CHECK_FALSE(execution_match("SELECT name FROM employee WHERE age > 30",
                                "SELECT name FROM employee WHERE age > 31", fx.db));
    // different column, different values
    CHECK_FALSE(execution_match("SELECT name FROM employee", "SELECT dept_name FROM department",
                                fx.db));
}

TEST_CASE("execution_match error channels") {
    Fixture fx;
    // pred failure is a false, never an exception
    CHECK_FALSE(execution_match("SELECT nope FROM employee", "SELECT name FROM employee", fx.db));
    CHECK_FALSE(execution_match("garbage", "SELECT name FROM employee", fx.db));
    // gold failure is a data problem
    CHECK_THROWS_AS(execution_match("SELECT 1", "SELECT nope FROM employee", fx.db),
                    GoldInvalidError);
}

TEST_CASE("ordered comparison only when gold has a top-level ORDER BY") {
    Fixture fx;
    // both orderings of the same multiset: equal without ORDER BY ...
    CHECK(execution_match("SELECT name FROM employee ORDER BY age ASC",
                          "SELECT name FROM employee", fx.db));
    // ... but a gold ORDER BY grades sequences
    CHECK_FALSE(execution_match(
        "SELECT name FROM employee WHERE age IS NOT NULL ORDER BY age ASC",
        "SELECT name FROM employee WHERE age IS NOT NULL ORDER BY age DESC", fx.db));
    CHECK(execution_match(
        "SELECT name FROM employee WHERE age IS NOT NULL ORDER BY age DESC",
        "SELECT name FROM employee WHERE age IS NOT NULL ORDER BY age DESC", fx.db));
}

TEST_CASE("value comparison: NULL distinct, numeric tolerance, cross-width") {
    CHECK(values_equal(Value::null(), Value::null()));
    CHECK_FALSE(values_equal(Value::null(), Value::of(static_cast<std::int64_t>(0))));
    CHECK_FALSE(values_equal(Value::null(), Value::of(std::string(""))));
    CHECK(values_equal(Value::of(static_cast<std::int64_t>(1)), Value::of(1.0)));
    CHECK(values_equal(Value::of(1.0), Value::of(1.0000004)));       // within 1e-6
    CHECK_FALSE(values_equal(Value::of(1.0), Value::of(1.00001)));   // outside
    CHECK_FALSE(values_equal(Value::of(std::string("a")), Value::of(std::string("b"))));
}

TEST_CASE("multiset comparison is permutation-invariant") {
    Fixture fx;
    ResultTable base = execute("SELECT name, age, salary FROM employee", fx.db);
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        ResultTable shuffled = base;
        std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
        CHECK(tables_match(shuffled, base, /*ordered=*/false));
    }
    // ordered comparison detects a real reorder
    ResultTable reversed = base;
    std::reverse(reversed.rows.begin(), reversed.rows.end());
    CHECK_FALSE(tables_match(reversed, base, /*ordered=*/true));
    CHECK(tables_match(base, base, /*ordered=*/true));
}

TEST_CASE("only the first statement executes; injected tails are ignored") {
    Fixture fx;
    ResultTable t = execute("SELECT 1; DROP TABLE employee", fx.db);
    CHECK(t.rows.size() == 1);
    CHECK(execute("SELECT count(*) FROM employee", fx.db).rows[0][0].i == 8);
}

TEST_CASE("exact match implies execution match over the fixture corpus") {
    // Perturbation-generated EM-true pairs (same select order, so the result
    // schema is unchanged); any EM-true pair must also grade EX-true.
    Fixture fx;
    const char* corpus[] = {
        "SELECT name FROM employee",
        "SELECT name, age FROM employee WHERE age > 30",
        "SELECT avg(salary), dept_id FROM employee GROUP BY dept_id",
        "SELECT T1.name, T2.dept_name FROM employee AS T1 JOIN department AS T2 ON T1.dept_id "
        "= T2.dept_id",
        "SELECT name FROM employee WHERE age > 25 AND salary < 60000",
        "SELECT name FROM employee ORDER BY salary DESC LIMIT 3",
        "SELECT name FROM employee WHERE dept_id IN (SELECT dept_id FROM department WHERE "
        "budget > 500000)",
        "SELECT dept_id FROM employee UNION SELECT dept_id FROM department",
        "SELECT name FROM employee WHERE salary > (SELECT avg(salary) FROM employee)",
        "SELECT dept_id, count(*) FROM employee GROUP BY dept_id",
    };
    struct Variant {
        const char* pred;
        const char* gold;
    };
    const Variant variants[] = {
        {"select name from EMPLOYEE", "SELECT name FROM employee"},
        {"SELECT name, age FROM employee WHERE 30 < age",
         "SELECT name, age FROM employee WHERE age > 30"},
        {"SELECT name FROM employee WHERE salary < 60000 AND age > 25",
         "SELECT name FROM employee WHERE age > 25 AND salary < 60000"},
        {"SELECT x.name, y.dept_name FROM employee x JOIN department y ON x.dept_id = "
         "y.dept_id",
         "SELECT T1.name, T2.dept_name FROM employee AS T1 JOIN department AS T2 ON "
         "T1.dept_id = T2.dept_id"},
    };
    for (const char* q : corpus) {
        CAPTURE(q);
        REQUIRE(exact_match(q, q));
        CHECK(execution_match(q, q, fx.db));
    }
    for (const auto& v : variants) {
        CAPTURE(v.pred);
        if (exact_match(v.pred, v.gold)) CHECK(execution_match(v.pred, v.gold, fx.db));
        CHECK(exact_match(v.pred, v.gold)); // these variants are EM-true by design
    }
}

TEST_CASE("row count and arity mismatches fail") {
    ResultTable a{1, {{Value::of(static_cast<std::int64_t>(1))}}};
    ResultTable b{1, {{Value::of(static_cast<std::int64_t>(1))},
                      {Value::of(static_cast<std::int64_t>(2))}}};
    CHECK_FALSE(tables_match(a, b, false));
    ResultTable c{2, {{Value::of(static_cast<std::int64_t>(1)),
                       Value::of(static_cast<std::int64_t>(2))}}};
    CHECK_FALSE(tables_match(a, c, false));
}
