#include "selfsql/sketch.hpp"

#include <algorithm>

namespace selfsql::sql {

namespace {

bool is_literal(const Expr& e) {
    return e.kind == Expr::Kind::int_lit || e.kind == Expr::Kind::float_lit ||
           e.kind == Expr::Kind::string_lit;
}

std::string flip_op(const std::string& op) {
    if (op == "<") return ">";
    if (op == ">") return "<";
    if (op == "<=") return ">=";
    if (op == ">=") return "<=";
    return op; // = and != are symmetric
}

std::string canonical_operand(const Expr& e) {
    std::string s = canonical_expr(e);
    if (e.kind == Expr::Kind::binary) return "(" + s + ")";
    return s;
}

std::vector<std::string> sorted(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::string cond_bool(const Cond& c);

// One comparison/predicate atom.
std::string cond_atom(const Cond& c) {
    switch (c.kind) {
        case Cond::Kind::cmp: {
            std::string lhs = canonical_operand(c.lhs);
            if (c.subquery)
                return lhs + " " + c.op + " (" + canonical_sql(*c.subquery) + ")";
            std::string rhs = canonical_operand(c.rhs);
            std::string op = c.op;
            bool lhs_lit = is_literal(c.lhs), rhs_lit = is_literal(c.rhs);
            // Orient deterministically: literals to the right; otherwise the
            // lexicographically smaller side left. Makes "5 < x" match
            // "x > 5" and "a.id = b.id" match "b.id = a.id".
            if ((lhs_lit && !rhs_lit) || (lhs_lit == rhs_lit && lhs > rhs)) {
                std::swap(lhs, rhs);
                op = flip_op(op);
            }
            return lhs + " " + op + " " + rhs;
        }
        case Cond::Kind::between:
            return canonical_operand(c.lhs) + (c.negated ? " NOT BETWEEN " : " BETWEEN ") +
                   canonical_operand(c.low) + " AND " + canonical_operand(c.high);
        case Cond::Kind::like:
            return canonical_operand(c.lhs) + (c.negated ? " NOT LIKE " : " LIKE ") +
                   canonical_operand(c.rhs);
        case Cond::Kind::in_list: {
            std::string out =
                canonical_operand(c.lhs) + (c.negated ? " NOT IN (" : " IN (");
            for (size_t i = 0; i < c.list.size(); ++i) {
                if (i) out += ", ";
                out += canonical_expr(c.list[i]);
            }
            return out + ")";
        }
        case Cond::Kind::in_subquery:
            return canonical_operand(c.lhs) + (c.negated ? " NOT IN (" : " IN (") +
                   canonical_sql(*c.subquery) + ")";
        case Cond::Kind::exists:
            return std::string(c.negated ? "NOT " : "") + "EXISTS (" +
                   canonical_sql(*c.subquery) + ")";
        case Cond::Kind::is_null:
            return canonical_operand(c.lhs) + (c.negated ? " IS NOT NULL" : " IS NULL");
        case Cond::Kind::not_:
            return "NOT (" + cond_bool(c.children[0]) + ")";
        case Cond::Kind::and_:
        case Cond::Kind::or_:
            return "(" + cond_bool(c) + ")";
    }
    return "";
}

// Boolean combination with commutative branches sorted.
std::string cond_bool(const Cond& c) {
    if (c.kind == Cond::Kind::and_ || c.kind == Cond::Kind::or_) {
        std::vector<std::string> parts;
        parts.reserve(c.children.size());
        for (const Cond& child : c.children) {
            bool wrap = child.kind == Cond::Kind::and_ || child.kind == Cond::Kind::or_;
            std::string s = cond_bool(child);
            parts.push_back(wrap ? "(" + s + ")" : s);
        }
        std::sort(parts.begin(), parts.end());
        return join(parts, c.kind == Cond::Kind::and_ ? " AND " : " OR ");
    }
    return cond_atom(c);
}

void collect_conjuncts(const Cond& c, std::vector<std::string>& out) {
    if (c.kind == Cond::Kind::and_) {
        for (const Cond& child : c.children) collect_conjuncts(child, out);
        return;
    }
    out.push_back(cond_atom(c));
}

std::string table_text(const TableRef& ref) {
    if (ref.subquery) return "(" + canonical_sql(*ref.subquery) + ")";
    return ref.name;
}

std::string canonical_core(const SelectCore& core) {
    std::string out = "SELECT ";
    if (core.distinct) out += "DISTINCT ";
    std::vector<std::string> items;
    items.reserve(core.items.size());
    for (const SelectItem& item : core.items) items.push_back(canonical_expr(item.expr));
    out += join(sorted(std::move(items)), ", ");
    if (core.from_first) {
        out += " FROM " + table_text(*core.from_first);
        for (const TableRef& t : core.from_commas) out += ", " + table_text(t);
        for (const Join& j : core.joins) {
            out += " " + j.kw + " " + table_text(j.table);
            if (j.on) {
                std::vector<std::string> conj;
                collect_conjuncts(*j.on, conj);
                out += " ON " + join(sorted(std::move(conj)), " AND ");
            }
        }
    }
    if (core.where) {
        std::vector<std::string> conj;
        collect_conjuncts(*core.where, conj);
        out += " WHERE " + join(sorted(std::move(conj)), " AND ");
    }
    if (!core.group_by.empty()) {
        std::vector<std::string> keys;
        keys.reserve(core.group_by.size());
        for (const Expr& e : core.group_by) keys.push_back(canonical_expr(e));
        out += " GROUP BY " + join(sorted(std::move(keys)), ", ");
    }
    if (core.having) {
        std::vector<std::string> conj;
        collect_conjuncts(*core.having, conj);
        out += " HAVING " + join(sorted(std::move(conj)), " AND ");
    }
    return out;
}

} // namespace

std::string canonical_expr(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::star:
            return e.table.empty() ? "*" : e.table + ".*";
        case Expr::Kind::column:
            return e.table.empty() ? e.column : e.table + "." + e.column;
        case Expr::Kind::int_lit:
        case Expr::Kind::float_lit:
            return e.text;
        case Expr::Kind::string_lit:
            return "'" + replace_all(e.text, "'", "''") + "'";
        case Expr::Kind::call: {
            std::string out = e.fn + "(";
            if (e.distinct_arg) out += "DISTINCT ";
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                out += canonical_expr(e.args[i]);
            }
            return out + ")";
        }
        case Expr::Kind::binary:
            return canonical_operand(e.args[0]) + " " + std::string(1, e.op) + " " +
                   canonical_operand(e.args[1]);
    }
    return "";
}

std::string canonical_cond(const Cond& c) { return cond_bool(c); }

std::vector<std::string> conjuncts_of(const Cond& c) {
    std::vector<std::string> out;
    collect_conjuncts(c, out);
    return out;
}

std::string canonical_sql(const SelectStmt& stmt) {
    std::string out = canonical_core(stmt.first);
    for (const auto& compound : stmt.compounds)
        out += " " + compound.op + " " + canonical_core(compound.core);
    if (!stmt.order_by.empty()) {
        out += " ORDER BY ";
        for (size_t i = 0; i < stmt.order_by.size(); ++i) {
            if (i) out += ", ";
            out += canonical_expr(stmt.order_by[i].expr);
            out += stmt.order_by[i].desc ? " DESC" : " ASC";
        }
    }
    if (!stmt.limit_text.empty()) out += " LIMIT " + stmt.limit_text;
    return out;
}

// ---------------------------------------------------------------------------
// Sketch construction + feature counting

namespace {

struct FeatureCounter {
    int joins = 0, aggregates = 0, nested = 0, set_ops = 0;
    bool group = false, order = false;
    int max_where_conjuncts = 0;
    int max_depth = 0;

    void count_expr(const Expr& e) {
        if (e.kind == Expr::Kind::call &&
            (e.fn == "count" || e.fn == "sum" || e.fn == "avg" || e.fn == "min" ||
             e.fn == "max"))
            ++aggregates;
        for (const Expr& arg : e.args) count_expr(arg);
    }

    void count_cond(const Cond& c, int depth) {
        count_expr(c.lhs);
        count_expr(c.rhs);
        count_expr(c.low);
        count_expr(c.high);
        for (const Expr& e : c.list) count_expr(e);
        if (c.subquery) {
            ++nested;
            count_stmt(*c.subquery, depth + 1);
        }
        for (const Cond& child : c.children) count_cond(child, depth);
    }

    void count_core(const SelectCore& core, int depth) {
        int tables = 0;
        auto count_ref = [&](const TableRef& ref) {
            ++tables;
            if (ref.subquery) {
                ++nested;
                count_stmt(*ref.subquery, depth + 1);
            }
        };
        if (core.from_first) count_ref(*core.from_first);
        for (const TableRef& t : core.from_commas) count_ref(t);
        for (const Join& j : core.joins) {
            count_ref(j.table);
            if (j.on) count_cond(*j.on, depth);
        }
        if (tables > 1) joins += tables - 1;
        for (const SelectItem& item : core.items) count_expr(item.expr);
        if (core.where) {
            count_cond(*core.where, depth);
            std::vector<std::string> conj;
            collect_conjuncts(*core.where, conj);
            max_where_conjuncts = std::max(max_where_conjuncts, static_cast<int>(conj.size()));
        }
        for (const Expr& e : core.group_by) count_expr(e);
        if (!core.group_by.empty()) group = true;
        if (core.having) count_cond(*core.having, depth);
    }

    void count_stmt(const SelectStmt& stmt, int depth) {
        max_depth = std::max(max_depth, depth);
        count_core(stmt.first, depth);
        for (const auto& compound : stmt.compounds) {
            ++set_ops;
            count_core(compound.core, depth);
        }
        if (!stmt.order_by.empty()) order = true;
        for (const OrderKey& key : stmt.order_by) count_expr(key.expr);
    }
};

Sketch::Core sketch_core(const SelectCore& core) {
    Sketch::Core out;
    out.distinct = core.distinct;
    for (const SelectItem& item : core.items)
        out.select_items.push_back(canonical_expr(item.expr));
    auto add_table = [&](const TableRef& ref) { out.from_tables.push_back(table_text(ref)); };
    if (core.from_first) add_table(*core.from_first);
    for (const TableRef& t : core.from_commas) add_table(t);
    for (const Join& j : core.joins) {
        add_table(j.table);
        if (j.on) {
            auto conj = conjuncts_of(*j.on);
            out.join_conds.insert(out.join_conds.end(), conj.begin(), conj.end());
        }
    }
    if (core.where) out.where_conjuncts = conjuncts_of(*core.where);
    for (const Expr& e : core.group_by) out.group_keys.push_back(canonical_expr(e));
    if (core.having) out.having_conjuncts = conjuncts_of(*core.having);

    std::sort(out.select_items.begin(), out.select_items.end());
    std::sort(out.from_tables.begin(), out.from_tables.end());
    std::sort(out.join_conds.begin(), out.join_conds.end());
    std::sort(out.where_conjuncts.begin(), out.where_conjuncts.end());
    std::sort(out.group_keys.begin(), out.group_keys.end());
    std::sort(out.having_conjuncts.begin(), out.having_conjuncts.end());
    return out;
}

} // namespace

Sketch make_sketch(const SelectStmt& stmt) {
    Sketch sk;
    sk.first = sketch_core(stmt.first);
    for (const auto& compound : stmt.compounds)
        sk.compounds.emplace_back(compound.op, sketch_core(compound.core));
    for (const OrderKey& key : stmt.order_by)
        sk.order_keys.emplace_back(canonical_expr(key.expr), key.desc);
    sk.limit = stmt.limit_text;

    FeatureCounter fc;
    fc.count_stmt(stmt, 0);
    sk.joins = fc.joins;
    sk.aggregates = fc.aggregates;
    sk.nested_selects = fc.nested;
    sk.set_ops = fc.set_ops;
    sk.has_group_by = fc.group;
    sk.has_order_by = fc.order;
    sk.max_where_conjuncts = fc.max_where_conjuncts;
    sk.nesting_depth = fc.max_depth;
    return sk;
}

} // namespace selfsql::sql
