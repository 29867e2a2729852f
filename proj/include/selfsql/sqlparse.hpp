#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "selfsql/util.hpp"

namespace selfsql::sql {

// AST for the Spider SQL subset: single-table and joined SELECTs, WHERE/GROUP
// BY/HAVING/ORDER BY/LIMIT, aggregates, arithmetic, IN/LIKE/BETWEEN/EXISTS/IS
// NULL predicates, subqueries in predicates and FROM, and
// UNION/INTERSECT/EXCEPT compounds. Identifiers are lowercased at lex time;
// aliases are resolved to physical table names right after parsing.

struct SelectStmt;

struct Expr {
    enum class Kind { star, column, int_lit, float_lit, string_lit, call, binary };
    Kind kind = Kind::column;
    std::string table;  // column/star qualifier, resolved + lowercase, may be empty
    std::string column; // column name, lowercase
    std::string text;   // literal text; strings hold the unescaped inner bytes
    std::string fn;     // call: function name, lowercase
    bool distinct_arg = false;
    char op = 0;             // binary: + - * /
    std::vector<Expr> args;  // call arguments / binary operands (exactly 2)
};

struct Cond {
    enum class Kind {
        cmp,          // lhs op rhs (rhs may be a subquery)
        between,      // lhs [NOT] BETWEEN low AND high
        like,         // lhs [NOT] LIKE rhs
        in_list,      // lhs [NOT] IN (expr, ...)
        in_subquery,  // lhs [NOT] IN (SELECT ...)
        exists,       // [NOT] EXISTS (SELECT ...)
        is_null,      // lhs IS [NOT] NULL
        and_,
        or_,
        not_ // generic NOT (child)
    };
    Kind kind = Kind::cmp;
    std::string op; // cmp operator, normalized ("<>" -> "!=")
    Expr lhs;
    Expr rhs;
    Expr low, high;
    std::vector<Expr> list;
    std::unique_ptr<SelectStmt> subquery;
    bool negated = false;
    std::vector<Cond> children; // and_/or_/not_

    Cond() = default;
    Cond(Cond&&) = default;
    Cond& operator=(Cond&&) = default;
};

struct TableRef {
    std::string name;  // physical table, lowercase; empty when subquery
    std::string alias; // lowercase, may be empty
    std::unique_ptr<SelectStmt> subquery;
};

struct Join {
    std::string kw; // "JOIN", "LEFT JOIN", "CROSS JOIN", ...
    TableRef table;
    std::optional<Cond> on;
};

struct SelectItem {
    Expr expr;
    std::string alias; // lowercase, may be empty; never affects comparison
};

struct SelectCore {
    bool distinct = false;
    std::vector<SelectItem> items;
    std::optional<TableRef> from_first;
    std::vector<TableRef> from_commas;
    std::vector<Join> joins;
    std::optional<Cond> where;
    std::vector<Expr> group_by;
    std::optional<Cond> having;
};

struct OrderKey {
    Expr expr;
    bool desc = false;
};

struct SelectStmt {
    SelectCore first;
    struct Compound {
        std::string op; // "UNION", "UNION ALL", "INTERSECT", "EXCEPT"
        SelectCore core;
    };
    std::vector<Compound> compounds;
    std::vector<OrderKey> order_by; // applies to the whole compound
    std::string limit_text;         // empty when absent
};

// Parses and alias-resolves one SELECT statement. Throws ParseError with the
// byte offset of the offending token.
SelectStmt parse_select(const std::string& sql);
std::optional<SelectStmt> try_parse(const std::string& sql);

// Token-level scan for a top-level ORDER BY (paren depth 0); used when the
// statement does not parse under the grammar above.
bool has_top_level_order_by(const std::string& sql);

} // namespace selfsql::sql
