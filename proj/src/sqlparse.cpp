#include "selfsql/sqlparse.hpp"

#include <cctype>
#include <map>
#include <set>

namespace selfsql::sql {

namespace {

struct Token {
    enum class Kind { ident, number, string, op, end };
    Kind kind = Kind::end;
    std::string text; // ident/number lowercased; string holds inner bytes
    size_t pos = 0;
};

const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words = {
        "select", "from",   "where",  "group",  "having", "order", "limit",  "by",
        "and",    "or",     "not",    "in",     "like",   "between", "is",   "null",
        "exists", "join",   "inner",  "left",   "right",  "full",  "outer",  "cross",
        "on",     "as",     "union",  "intersect", "except", "all", "distinct", "asc",
        "desc"};
    return words;
}

std::vector<Token> lex(const std::string& sql) {
    std::vector<Token> out;
    size_t i = 0;
    auto fail = [&](const std::string& msg) {
        throw ParseError("sql lex error at byte " + std::to_string(i) + ": " + msg);
    };
    while (i < sql.size()) {
        char c = sql[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
            while (i < sql.size() && sql[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < sql.size() && sql[i + 1] == '*') {
            size_t end = sql.find("*/", i + 2);
            if (end == std::string::npos) fail("unterminated comment");
            i = end + 2;
            continue;
        }
        size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < sql.size() &&
                   (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_'))
                ++i;
            out.push_back({Token::Kind::ident, to_lower(sql.substr(start, i - start)), start});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < sql.size() &&
             std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
            while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
            if (i < sql.size() && sql[i] == '.') {
                ++i;
                while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
            }
            if (i < sql.size() && (sql[i] == 'e' || sql[i] == 'E')) {
                size_t save = i;
                ++i;
                if (i < sql.size() && (sql[i] == '+' || sql[i] == '-')) ++i;
                if (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i])))
                    while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                else
                    i = save;
            }
            out.push_back({Token::Kind::number, to_lower(sql.substr(start, i - start)), start});
            continue;
        }
        if (c == '\'' || c == '"') {
            // Both quote styles are treated as string literals; Spider uses
            // double quotes for values (e.g. LIKE "%w%").
            char quote = c;
            ++i;
            std::string value;
            for (;;) {
                if (i >= sql.size()) fail("unterminated string");
                if (sql[i] == quote) {
                    if (i + 1 < sql.size() && sql[i + 1] == quote) {
                        value += quote;
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                value += sql[i++];
            }
            out.push_back({Token::Kind::string, std::move(value), start});
            continue;
        }
        if (c == '`' || c == '[') {
            char close = (c == '`') ? '`' : ']';
            ++i;
            std::string name;
            while (i < sql.size() && sql[i] != close) name += sql[i++];
            if (i >= sql.size()) fail("unterminated quoted identifier");
            ++i;
            out.push_back({Token::Kind::ident, to_lower(name), start});
            continue;
        }
        auto two = sql.substr(i, 2);
        if (two == "<=" || two == ">=" || two == "<>" || two == "!=" || two == "==") {
            std::string text = two == "<>" ? "!=" : (two == "==" ? "=" : std::string(two));
            out.push_back({Token::Kind::op, text, start});
            i += 2;
            continue;
        }
        if (std::string("=<>+-*/(),.;").find(c) != std::string::npos) {
            out.push_back({Token::Kind::op, std::string(1, c), start});
            ++i;
            continue;
        }
        fail(std::string("unexpected character '") + c + "'");
    }
    out.push_back({Token::Kind::end, "", sql.size()});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    SelectStmt parse_statement() {
        SelectStmt stmt = parse_select_stmt();
        accept_op(";");
        if (!at_end()) fail("trailing tokens after statement");
        return stmt;
    }

private:
    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError("sql parse error at byte " + std::to_string(peek().pos) + ": " + msg);
    }
    const Token& peek(int ahead = 0) const {
        size_t i = pos_ + static_cast<size_t>(ahead);
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    bool at_end() const { return peek().kind == Token::Kind::end; }
    bool at_kw(const char* kw) const {
        return peek().kind == Token::Kind::ident && peek().text == kw;
    }
    bool accept_kw(const char* kw) {
        if (!at_kw(kw)) return false;
        ++pos_;
        return true;
    }
    void expect_kw(const char* kw) {
        if (!accept_kw(kw)) fail(std::string("expected ") + kw);
    }
    bool at_op(const char* op) const {
        return peek().kind == Token::Kind::op && peek().text == op;
    }
    bool accept_op(const char* op) {
        if (!at_op(op)) return false;
        ++pos_;
        return true;
    }
    void expect_op(const char* op) {
        if (!accept_op(op)) fail(std::string("expected '") + op + "'");
    }
    bool at_reserved() const {
        return peek().kind == Token::Kind::ident && reserved_words().count(peek().text) > 0;
    }

    SelectStmt parse_select_stmt() {
        SelectStmt stmt;
        stmt.first = parse_select_core();
        for (;;) {
            std::string op;
            if (accept_kw("union"))
                op = accept_kw("all") ? "UNION ALL" : "UNION";
            else if (accept_kw("intersect"))
                op = "INTERSECT";
            else if (accept_kw("except"))
                op = "EXCEPT";
            else
                break;
            stmt.compounds.push_back({std::move(op), parse_select_core()});
        }
        if (accept_kw("order")) {
            expect_kw("by");
            do {
                OrderKey key;
                key.expr = parse_expr();
                if (accept_kw("desc"))
                    key.desc = true;
                else
                    accept_kw("asc");
                stmt.order_by.push_back(std::move(key));
            } while (accept_op(","));
        }
        if (accept_kw("limit")) {
            bool neg = accept_op("-");
            if (peek().kind != Token::Kind::number) fail("expected number after LIMIT");
            stmt.limit_text = (neg ? "-" : "") + peek().text;
            ++pos_;
        }
        return stmt;
    }

    SelectCore parse_select_core() {
        expect_kw("select");
        SelectCore core;
        if (accept_kw("distinct"))
            core.distinct = true;
        else
            accept_kw("all");
        do {
            core.items.push_back(parse_select_item());
        } while (accept_op(","));
        if (accept_kw("from")) {
            core.from_first = parse_table_ref();
            for (;;) {
                if (accept_op(",")) {
                    core.from_commas.push_back(parse_table_ref());
                    continue;
                }
                std::string kw;
                if (accept_kw("join"))
                    kw = "JOIN";
                else if (at_kw("inner") && peek(1).text == "join") {
                    pos_ += 2;
                    kw = "JOIN";
                } else if (at_kw("cross") && peek(1).text == "join") {
                    pos_ += 2;
                    kw = "CROSS JOIN";
                } else if ((at_kw("left") || at_kw("right") || at_kw("full")) &&
                           (peek(1).text == "join" ||
                            (peek(1).text == "outer" && peek(2).text == "join"))) {
                    std::string side = peek().text;
                    side[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(side[0])));
                    pos_ += (peek(1).text == "outer") ? 3 : 2;
                    kw = (side == "Left" ? "LEFT" : side == "Right" ? "RIGHT" : "FULL");
                    kw += " JOIN";
                } else {
                    break;
                }
                Join join;
                join.kw = std::move(kw);
                join.table = parse_table_ref();
                if (accept_kw("on")) join.on = parse_cond();
                core.joins.push_back(std::move(join));
            }
        }
        if (accept_kw("where")) core.where = parse_cond();
        if (accept_kw("group")) {
            expect_kw("by");
            do {
                core.group_by.push_back(parse_expr());
            } while (accept_op(","));
        }
        if (accept_kw("having")) core.having = parse_cond();
        return core;
    }

    SelectItem parse_select_item() {
        SelectItem item;
        if (at_op("*")) {
            ++pos_;
            item.expr.kind = Expr::Kind::star;
            return item;
        }
        item.expr = parse_expr();
        if (accept_kw("as")) {
            if (peek().kind != Token::Kind::ident) fail("expected alias after AS");
            item.alias = peek().text;
            ++pos_;
        } else if (peek().kind == Token::Kind::ident && !at_reserved()) {
            item.alias = peek().text;
            ++pos_;
        }
        return item;
    }

    TableRef parse_table_ref() {
        TableRef ref;
        if (accept_op("(")) {
            ref.subquery = std::make_unique<SelectStmt>(parse_select_stmt());
            expect_op(")");
        } else {
            if (peek().kind != Token::Kind::ident || at_reserved()) fail("expected table name");
            ref.name = peek().text;
            ++pos_;
        }
        if (accept_kw("as")) {
            if (peek().kind != Token::Kind::ident) fail("expected alias after AS");
            ref.alias = peek().text;
            ++pos_;
        } else if (peek().kind == Token::Kind::ident && !at_reserved()) {
            ref.alias = peek().text;
            ++pos_;
        }
        return ref;
    }

    // cond := and_cond (OR and_cond)*
    Cond parse_cond() {
        Cond left = parse_and_cond();
        if (!at_kw("or")) return left;
        Cond node;
        node.kind = Cond::Kind::or_;
        node.children.push_back(std::move(left));
        while (accept_kw("or")) node.children.push_back(parse_and_cond());
        return node;
    }

    Cond parse_and_cond() {
        Cond left = parse_not_cond();
        if (!at_kw("and")) return left;
        Cond node;
        node.kind = Cond::Kind::and_;
        node.children.push_back(std::move(left));
        while (accept_kw("and")) node.children.push_back(parse_not_cond());
        return node;
    }

    Cond parse_not_cond() {
        if (at_kw("not") && peek(1).text != "in" && peek(1).text != "like" &&
            peek(1).text != "between") {
            if (peek(1).text == "exists") {
                ++pos_;
                Cond c = parse_primary_cond();
                c.negated = true;
                return c;
            }
            ++pos_;
            Cond node;
            node.kind = Cond::Kind::not_;
            node.children.push_back(parse_not_cond());
            return node;
        }
        return parse_primary_cond();
    }

    Cond parse_primary_cond() {
        if (at_kw("exists")) {
            ++pos_;
            expect_op("(");
            Cond c;
            c.kind = Cond::Kind::exists;
            c.subquery = std::make_unique<SelectStmt>(parse_select_stmt());
            expect_op(")");
            return c;
        }
        if (at_op("(")) {
            // Could be a parenthesized boolean or a parenthesized expression
            // starting a comparison; try the boolean reading first.
            size_t save = pos_;
            try {
                expect_op("(");
                Cond inner = parse_cond();
                expect_op(")");
                return inner;
            } catch (const ParseError&) {
                pos_ = save;
            }
        }
        Expr lhs = parse_expr();
        return parse_cond_tail(std::move(lhs));
    }

    Cond parse_cond_tail(Expr lhs) {
        bool negated = accept_kw("not");
        if (accept_kw("between")) {
            Cond c;
            c.kind = Cond::Kind::between;
            c.negated = negated;
            c.lhs = std::move(lhs);
            c.low = parse_expr();
            expect_kw("and");
            c.high = parse_expr();
            return c;
        }
        if (accept_kw("like")) {
            Cond c;
            c.kind = Cond::Kind::like;
            c.negated = negated;
            c.lhs = std::move(lhs);
            c.rhs = parse_expr();
            return c;
        }
        if (accept_kw("in")) {
            expect_op("(");
            Cond c;
            c.negated = negated;
            c.lhs = std::move(lhs);
            if (at_kw("select")) {
                c.kind = Cond::Kind::in_subquery;
                c.subquery = std::make_unique<SelectStmt>(parse_select_stmt());
            } else {
                c.kind = Cond::Kind::in_list;
                do {
                    c.list.push_back(parse_expr());
                } while (accept_op(","));
            }
            expect_op(")");
            return c;
        }
        if (negated) fail("expected BETWEEN, LIKE or IN after NOT");
        if (accept_kw("is")) {
            Cond c;
            c.kind = Cond::Kind::is_null;
            c.negated = accept_kw("not");
            expect_kw("null");
            c.lhs = std::move(lhs);
            return c;
        }
        for (const char* op : {"=", "!=", "<=", ">=", "<", ">"}) {
            if (accept_op(op)) {
                Cond c;
                c.kind = Cond::Kind::cmp;
                c.op = op;
                c.lhs = std::move(lhs);
                if (at_op("(") && peek(1).text == "select") {
                    expect_op("(");
                    c.subquery = std::make_unique<SelectStmt>(parse_select_stmt());
                    expect_op(")");
                } else {
                    c.rhs = parse_expr();
                }
                return c;
            }
        }
        fail("expected a comparison operator");
    }

    Expr parse_expr() {
        Expr left = parse_term();
        while (at_op("+") || at_op("-")) {
            char op = peek().text[0];
            ++pos_;
            Expr node;
            node.kind = Expr::Kind::binary;
            node.op = op;
            node.args.push_back(std::move(left));
            node.args.push_back(parse_term());
            left = std::move(node);
        }
        return left;
    }

    Expr parse_term() {
        Expr left = parse_factor();
        while (at_op("*") || at_op("/")) {
            char op = peek().text[0];
            ++pos_;
            Expr node;
            node.kind = Expr::Kind::binary;
            node.op = op;
            node.args.push_back(std::move(left));
            node.args.push_back(parse_factor());
            left = std::move(node);
        }
        return left;
    }

    Expr parse_factor() {
        const Token& tok = peek();
        if (tok.kind == Token::Kind::number) {
            Expr e;
            e.kind = tok.text.find('.') != std::string::npos ||
                             tok.text.find('e') != std::string::npos
                         ? Expr::Kind::float_lit
                         : Expr::Kind::int_lit;
            e.text = tok.text;
            ++pos_;
            return e;
        }
        if (tok.kind == Token::Kind::string) {
            Expr e;
            e.kind = Expr::Kind::string_lit;
            e.text = tok.text;
            ++pos_;
            return e;
        }
        if (at_op("-")) {
            ++pos_;
            if (peek().kind != Token::Kind::number) fail("expected number after unary minus");
            Expr e;
            e.kind = peek().text.find('.') != std::string::npos ? Expr::Kind::float_lit
                                                                : Expr::Kind::int_lit;
            e.text = "-" + peek().text;
            ++pos_;
            return e;
        }
        if (at_op("(")) {
            ++pos_;
            Expr inner = parse_expr();
            expect_op(")");
            return inner;
        }
        if (tok.kind == Token::Kind::ident) {
            if (at_reserved() && !at_kw("null")) fail("unexpected keyword " + tok.text);
            std::string name = tok.text;
            ++pos_;
            if (accept_op("(")) {
                Expr call;
                call.kind = Expr::Kind::call;
                call.fn = name;
                if (accept_op("*")) {
                    Expr star;
                    star.kind = Expr::Kind::star;
                    call.args.push_back(std::move(star));
                } else if (!at_op(")")) {
                    if (accept_kw("distinct")) call.distinct_arg = true;
                    do {
                        call.args.push_back(parse_expr());
                    } while (accept_op(","));
                }
                expect_op(")");
                return call;
            }
            Expr col;
            col.kind = Expr::Kind::column;
            if (accept_op(".")) {
                col.table = name;
                if (accept_op("*")) {
                    col.kind = Expr::Kind::star;
                    return col;
                }
                if (peek().kind != Token::Kind::ident) fail("expected column after '.'");
                col.column = peek().text;
                ++pos_;
            } else {
                col.column = name;
            }
            return col;
        }
        fail("expected an expression");
    }

    std::vector<Token> toks_;
    size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Alias resolution

struct Scope {
    const Scope* parent = nullptr;
    // alias or table name (lower) -> physical name (lower); "" for subqueries
    std::map<std::string, std::string> names;

    const std::string* lookup(const std::string& key) const {
        for (const Scope* s = this; s; s = s->parent) {
            auto it = s->names.find(key);
            if (it != s->names.end()) return &it->second;
        }
        return nullptr;
    }
};

void resolve_stmt(SelectStmt& stmt, const Scope* parent);

void resolve_expr(Expr& e, const Scope& scope) {
    if ((e.kind == Expr::Kind::column || e.kind == Expr::Kind::star) && !e.table.empty()) {
        if (const std::string* physical = scope.lookup(e.table)) e.table = *physical;
    }
    for (Expr& arg : e.args) resolve_expr(arg, scope);
}

void resolve_cond(Cond& c, const Scope& scope) {
    resolve_expr(c.lhs, scope);
    resolve_expr(c.rhs, scope);
    resolve_expr(c.low, scope);
    resolve_expr(c.high, scope);
    for (Expr& e : c.list) resolve_expr(e, scope);
    if (c.subquery) resolve_stmt(*c.subquery, &scope);
    for (Cond& child : c.children) resolve_cond(child, scope);
}

void add_ref(Scope& scope, const TableRef& ref, const Scope* parent) {
    if (!ref.name.empty()) {
        if (!ref.alias.empty()) scope.names[ref.alias] = ref.name;
        scope.names[ref.name] = ref.name;
    } else if (!ref.alias.empty()) {
        scope.names[ref.alias] = ""; // qualifier via subquery alias gets dropped
    }
    if (ref.subquery) resolve_stmt(*ref.subquery, parent);
}

Scope core_scope(SelectCore& core, const Scope* parent) {
    Scope scope;
    scope.parent = parent;
    if (core.from_first) add_ref(scope, *core.from_first, parent);
    for (const TableRef& t : core.from_commas) add_ref(scope, t, parent);
    for (const Join& j : core.joins) add_ref(scope, j.table, parent);
    return scope;
}

void resolve_core(SelectCore& core, const Scope& scope) {
    for (SelectItem& item : core.items) resolve_expr(item.expr, scope);
    for (Join& j : core.joins)
        if (j.on) resolve_cond(*j.on, scope);
    if (core.where) resolve_cond(*core.where, scope);
    for (Expr& e : core.group_by) resolve_expr(e, scope);
    if (core.having) resolve_cond(*core.having, scope);
}

void resolve_stmt(SelectStmt& stmt, const Scope* parent) {
    Scope first_scope = core_scope(stmt.first, parent);
    resolve_core(stmt.first, first_scope);
    for (auto& compound : stmt.compounds) {
        Scope scope = core_scope(compound.core, parent);
        resolve_core(compound.core, scope);
    }
    for (OrderKey& key : stmt.order_by) resolve_expr(key.expr, first_scope);
}

} // namespace

SelectStmt parse_select(const std::string& sql) {
    Parser parser(lex(sql));
    SelectStmt stmt = parser.parse_statement();
    resolve_stmt(stmt, nullptr);
    return stmt;
}

std::optional<SelectStmt> try_parse(const std::string& sql) {
    try {
        return parse_select(sql);
    } catch (const ParseError&) {
        return std::nullopt;
    }
}

bool has_top_level_order_by(const std::string& sql) {
    std::vector<Token> toks;
    try {
        toks = lex(sql);
    } catch (const ParseError&) {
        return icontains(sql, "order by"); // last resort on unlexable input
    }
    int depth = 0;
    for (size_t i = 0; i + 1 < toks.size(); ++i) {
        if (toks[i].kind == Token::Kind::op) {
            if (toks[i].text == "(") ++depth;
            if (toks[i].text == ")") --depth;
        }
        if (depth == 0 && toks[i].kind == Token::Kind::ident && toks[i].text == "order" &&
            toks[i + 1].kind == Token::Kind::ident && toks[i + 1].text == "by")
            return true;
    }
    return false;
}

} // namespace selfsql::sql
