#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selfsql/sqlparse.hpp"

namespace selfsql::sql {

// Clause map of a parsed statement, in comparison form: set-valued clauses
// (select items, join conditions, where/having conjuncts, group keys) are
// held sorted so equality is order-insensitive; order-by stays a sequence.
// Aliases were already resolved by the parser, so alias names never reach
// the sketch. Feature counts feed difficulty classification.
struct Sketch {
    struct Core {
        bool distinct = false;
        std::vector<std::string> select_items;
        std::vector<std::string> from_tables;
        std::vector<std::string> join_conds;
        std::vector<std::string> where_conjuncts;
        std::vector<std::string> group_keys;
        std::vector<std::string> having_conjuncts;
        bool operator==(const Core&) const = default;
    };
    Core first;
    std::vector<std::pair<std::string, Core>> compounds;      // (set op, core)
    std::vector<std::pair<std::string, bool>> order_keys;     // (expr, desc)
    std::string limit;

    int joins = 0;
    int aggregates = 0;
    int nested_selects = 0;
    int set_ops = 0;
    bool has_group_by = false;
    bool has_order_by = false;
    int max_where_conjuncts = 0;
    int nesting_depth = 0;

    // Structural equality only; the feature counters are derived data.
    bool operator==(const Sketch& o) const {
        return first == o.first && compounds == o.compounds && order_keys == o.order_keys &&
               limit == o.limit;
    }
};

Sketch make_sketch(const SelectStmt& stmt);

// Deterministic text form: keywords upper, identifiers/functions lower,
// string literals single-quoted, set-valued clauses emitted in sorted order.
// Parsing the result yields an equal Sketch (canonicalization fixpoint).
std::string canonical_sql(const SelectStmt& stmt);

std::string canonical_expr(const Expr& e);
std::string canonical_cond(const Cond& c);

// Flattens a condition into its top-level AND conjuncts, canonicalized.
std::vector<std::string> conjuncts_of(const Cond& c);

} // namespace selfsql::sql
