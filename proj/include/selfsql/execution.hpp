#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "selfsql/dataset.hpp"
#include "selfsql/util.hpp"

namespace selfsql {

// One cell of a query result. NULL is a distinct value; integers and floats
// stay in their native width until comparison time.
struct Value {
    enum class Kind { null, integer, real, text, blob };
    Kind kind = Kind::null;
    std::int64_t i = 0;
    double d = 0.0;
    std::string s;

    static Value null() { return {}; }
    static Value of(std::int64_t v) { return {Kind::integer, v, 0.0, {}}; }
    static Value of(double v) { return {Kind::real, 0, v, {}}; }
    static Value of(std::string v) { return {Kind::text, 0, 0.0, std::move(v)}; }
};

using Row = std::vector<Value>;

struct ResultTable {
    int columns = 0;
    std::vector<Row> rows; // execution order
};

// Runs a single read-only statement with a wall-clock timeout. Write
// statements are rejected before execution; engine errors surface as
// ExecutionError, timeouts as QueryTimeoutError.
ResultTable execute_on(const std::filesystem::path& sqlite_file, const std::string& sql,
                       int timeout_ms);
ResultTable execute(const std::string& sql, const SchemaDb& db, int timeout_ms = 30000);

// Numeric cells compare with absolute tolerance `tol`; everything else exact.
bool values_equal(const Value& a, const Value& b, double tol = 1e-6);
bool rows_equal(const Row& a, const Row& b, double tol = 1e-6);

// ordered=false compares as multisets (rows sorted by content first), which
// makes the check permutation-invariant by construction.
bool tables_match(const ResultTable& a, const ResultTable& b, bool ordered, double tol = 1e-6);

// Executes both queries; ordered comparison iff gold's top-level statement
// has ORDER BY. A pred failure returns false; a gold failure throws
// GoldInvalidError (data problem, not a model miss).
bool execution_match(const std::string& pred, const std::string& gold, const SchemaDb& db,
                     int timeout_ms = 30000);

} // namespace selfsql
