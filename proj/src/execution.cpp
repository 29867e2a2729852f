#include "selfsql/execution.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "selfsql/sqlparse.hpp"

namespace selfsql {

namespace {

struct DbHandle {
    sqlite3* db = nullptr;
    explicit DbHandle(const std::filesystem::path& path) {
        int rc = sqlite3_open_v2(path.string().c_str(), &db, SQLITE_OPEN_READONLY, nullptr);
        if (rc != SQLITE_OK) {
            std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
            if (db) sqlite3_close(db);
            db = nullptr;
            throw ExecutionError("cannot open " + path.string() + ": " + msg);
        }
    }
    ~DbHandle() {
        if (db) sqlite3_close(db);
    }
    DbHandle(const DbHandle&) = delete;
    DbHandle& operator=(const DbHandle&) = delete;
};

struct StmtHandle {
    sqlite3_stmt* stmt = nullptr;
    ~StmtHandle() {
        if (stmt) sqlite3_finalize(stmt);
    }
};

struct Deadline {
    std::chrono::steady_clock::time_point end;
    bool expired() const { return std::chrono::steady_clock::now() > end; }
};

extern "C" int progress_cb(void* arg) {
    return static_cast<Deadline*>(arg)->expired() ? 1 : 0;
}

} // namespace

ResultTable execute_on(const std::filesystem::path& sqlite_file, const std::string& sql,
                       int timeout_ms) {
    if (!std::filesystem::exists(sqlite_file))
        throw ExecutionError("database file missing: " + sqlite_file.string());
    DbHandle handle(sqlite_file);

    Deadline deadline{std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms)};
    sqlite3_progress_handler(handle.db, 1000, progress_cb, &deadline);

    StmtHandle stmt;
    const char* tail = nullptr;
    int rc = sqlite3_prepare_v2(handle.db, sql.c_str(), -1, &stmt.stmt, &tail);
    if (rc != SQLITE_OK)
        throw ExecutionError(std::string("sqlite: ") + sqlite3_errmsg(handle.db));
    if (!stmt.stmt) throw ExecutionError("sqlite: empty statement");
    if (!sqlite3_stmt_readonly(stmt.stmt))
        throw WriteRejectedError("write statement rejected: " + sql);

    ResultTable table;
    table.columns = sqlite3_column_count(stmt.stmt);
    for (;;) {
        rc = sqlite3_step(stmt.stmt);
        if (rc == SQLITE_ROW) {
            Row row;
            row.reserve(static_cast<size_t>(table.columns));
            for (int c = 0; c < table.columns; ++c) {
                switch (sqlite3_column_type(stmt.stmt, c)) {
                    case SQLITE_NULL:
                        row.push_back(Value::null());
                        break;
                    case SQLITE_INTEGER:
                        row.push_back(Value::of(
                            static_cast<std::int64_t>(sqlite3_column_int64(stmt.stmt, c))));
                        break;
                    case SQLITE_FLOAT:
                        row.push_back(Value::of(sqlite3_column_double(stmt.stmt, c)));
                        break;
                    case SQLITE_BLOB: {
                        Value v;
                        v.kind = Value::Kind::blob;
                        const void* data = sqlite3_column_blob(stmt.stmt, c);
                        int n = sqlite3_column_bytes(stmt.stmt, c);
                        v.s.assign(static_cast<const char*>(data), static_cast<size_t>(n));
                        row.push_back(std::move(v));
                        break;
                    }
                    default: {
                        const unsigned char* text = sqlite3_column_text(stmt.stmt, c);
                        int n = sqlite3_column_bytes(stmt.stmt, c);
                        row.push_back(Value::of(
                            std::string(reinterpret_cast<const char*>(text),
                                        static_cast<size_t>(n))));
                    }
                }
            }
            table.rows.push_back(std::move(row));
            continue;
        }
        if (rc == SQLITE_DONE) break;
        if (rc == SQLITE_INTERRUPT || deadline.expired())
            throw QueryTimeoutError("query exceeded " + std::to_string(timeout_ms) + "ms");
        throw ExecutionError(std::string("sqlite: ") + sqlite3_errmsg(handle.db));
    }
    return table;
}

ResultTable execute(const std::string& sql, const SchemaDb& db, int timeout_ms) {
    if (!db.sqlite_present)
        throw ExecutionError("db " + db.db_id + ": sqlite file missing at " +
                             db.sqlite_path.string());
    return execute_on(db.sqlite_path, sql, timeout_ms);
}

bool values_equal(const Value& a, const Value& b, double tol) {
    bool a_num = a.kind == Value::Kind::integer || a.kind == Value::Kind::real;
    bool b_num = b.kind == Value::Kind::integer || b.kind == Value::Kind::real;
    if (a_num && b_num) {
        if (a.kind == Value::Kind::integer && b.kind == Value::Kind::integer) return a.i == b.i;
        double av = a.kind == Value::Kind::integer ? static_cast<double>(a.i) : a.d;
        double bv = b.kind == Value::Kind::integer ? static_cast<double>(b.i) : b.d;
        return std::fabs(av - bv) <= tol;
    }
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Value::Kind::null: return true;
        case Value::Kind::text:
        case Value::Kind::blob: return a.s == b.s;
        default: return false;
    }
}

bool rows_equal(const Row& a, const Row& b, double tol) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!values_equal(a[i], b[i], tol)) return false;
    return true;
}

namespace {

int value_rank(const Value& v) {
    switch (v.kind) {
        case Value::Kind::null: return 0;
        case Value::Kind::integer:
        case Value::Kind::real: return 1;
        case Value::Kind::text: return 2;
        case Value::Kind::blob: return 3;
    }
    return 4;
}

// Content ordering used to sort rows before multiset comparison. Numeric
// kinds share a rank so 1 and 1.0 sort adjacently.
bool value_less(const Value& a, const Value& b) {
    int ra = value_rank(a), rb = value_rank(b);
    if (ra != rb) return ra < rb;
    switch (a.kind) {
        case Value::Kind::null: return false;
        case Value::Kind::integer:
        case Value::Kind::real: {
            double av = a.kind == Value::Kind::integer ? static_cast<double>(a.i) : a.d;
            double bv = b.kind == Value::Kind::integer ? static_cast<double>(b.i) : b.d;
            if (av != bv) return av < bv;
            return a.kind < b.kind;
        }
        default: return a.s < b.s;
    }
}

bool row_less(const Row& a, const Row& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), value_less);
}

} // namespace

bool tables_match(const ResultTable& a, const ResultTable& b, bool ordered, double tol) {
    if (a.columns != b.columns || a.rows.size() != b.rows.size()) return false;
    if (ordered) {
        for (size_t i = 0; i < a.rows.size(); ++i)
            if (!rows_equal(a.rows[i], b.rows[i], tol)) return false;
        return true;
    }
    std::vector<Row> sa = a.rows, sb = b.rows;
    std::sort(sa.begin(), sa.end(), row_less);
    std::sort(sb.begin(), sb.end(), row_less);
    for (size_t i = 0; i < sa.size(); ++i)
        if (!rows_equal(sa[i], sb[i], tol)) return false;
    return true;
}

bool execution_match(const std::string& pred, const std::string& gold, const SchemaDb& db,
                     int timeout_ms) {
    ResultTable gold_result;
    try {
        gold_result = execute(gold, db, timeout_ms);
    } catch (const Error& e) {
        throw GoldInvalidError("gold query failed on " + db.db_id + ": " + e.what());
    }
    ResultTable pred_result;
    try {
        pred_result = execute(pred, db, timeout_ms);
    } catch (const GoldInvalidError&) {
        throw;
    } catch (const Error&) {
        return false;
    }
    bool ordered;
    if (auto parsed = sql::try_parse(gold))
        ordered = !parsed->order_by.empty();
    else
        ordered = sql::has_top_level_order_by(gold);
    return tables_match(pred_result, gold_result, ordered);
}

} // namespace selfsql
