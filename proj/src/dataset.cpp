#include "selfsql/dataset.hpp"

#include <set>
#include <sstream>

namespace selfsql {

const char* to_string(ColType t) {
    switch (t) {
        case ColType::text: return "text";
        case ColType::number: return "number";
        case ColType::time: return "time";
        case ColType::boolean: return "boolean";
        case ColType::others: return "others";
    }
    return "others";
}

ColType coltype_from_string(std::string_view s, bool* warned) {
    std::string l = to_lower(s);
    if (warned) *warned = false;
    if (l == "text") return ColType::text;
    if (l == "number") return ColType::number;
    if (l == "time") return ColType::time;
    if (l == "boolean") return ColType::boolean;
    if (l == "others") return ColType::others;
    if (warned) *warned = true;
    return ColType::others;
}

const ColumnDef& SchemaDb::column(const ColumnRef& ref) const {
    return tables.at(static_cast<size_t>(ref.table)).columns.at(static_cast<size_t>(ref.column));
}

const TableDef& SchemaDb::table(const ColumnRef& ref) const {
    return tables.at(static_cast<size_t>(ref.table));
}

namespace {

void check_schema_integrity(const SchemaDb& db) {
    std::set<std::string> names;
    for (const auto& t : db.tables) {
        if (!names.insert(to_lower(t.name)).second)
            throw SchemaError("db " + db.db_id + ": duplicate table name " + t.name);
        std::set<std::string> cols;
        for (const auto& c : t.columns)
            if (!cols.insert(to_lower(c.name)).second)
                throw SchemaError("db " + db.db_id + ": duplicate column " + t.name + "." +
                                  c.name);
    }
    auto in_bounds = [&](const ColumnRef& r) {
        return r.table >= 0 && r.table < static_cast<int>(db.tables.size()) && r.column >= 0 &&
               r.column <
                   static_cast<int>(db.tables[static_cast<size_t>(r.table)].columns.size());
    };
    for (const auto& [child, parent] : db.foreign_keys)
        if (!in_bounds(child) || !in_bounds(parent))
            throw SchemaError("db " + db.db_id + ": foreign key references unknown column");
    for (const auto& pk : db.primary_keys)
        if (!in_bounds(pk))
            throw SchemaError("db " + db.db_id + ": primary key references unknown column");
}

} // namespace

std::vector<SchemaDb> load_schemas(const std::filesystem::path& tables_file,
                                   const std::filesystem::path& db_dir,
                                   std::vector<std::string>* warnings) {
    json doc;
    try {
        doc = json::parse(read_file(tables_file));
    } catch (const json::parse_error& e) {
        throw ParseError(tables_file.string() + ": byte " + std::to_string(e.byte) + ": " +
                         e.what());
    }
    if (!doc.is_array()) throw ParseError(tables_file.string() + ": expected a JSON array");

    std::vector<SchemaDb> schemas;
    for (const auto& entry : doc) {
        SchemaDb db;
        db.db_id = entry.at("db_id").get<std::string>();

        const auto& table_names = entry.at("table_names_original");
        for (const auto& name : table_names)
            db.tables.push_back(TableDef{name.get<std::string>(), {}});

        const auto& col_names = entry.at("column_names_original");
        const auto& col_types = entry.at("column_types");
        if (col_types.size() != col_names.size())
            throw SchemaError("db " + db.db_id + ": column_types length " +
                              std::to_string(col_types.size()) + " != column count " +
                              std::to_string(col_names.size()));

        // Global column index -> (table, column) ref; index 0 is the [-1, "*"] slot.
        std::vector<ColumnRef> global;
        global.reserve(col_names.size());
        for (size_t i = 0; i < col_names.size(); ++i) {
            int ti = col_names[i].at(0).get<int>();
            std::string cname = col_names[i].at(1).get<std::string>();
            if (ti < 0) {
                global.push_back(ColumnRef{-1, -1});
                continue;
            }
            if (ti >= static_cast<int>(db.tables.size()))
                throw SchemaError("db " + db.db_id + ": column " + cname +
                                  " names table index out of range");
            bool warned = false;
            ColType type = coltype_from_string(col_types[i].get<std::string>(), &warned);
            if (warned && warnings)
                warnings->push_back("db " + db.db_id + ": unknown column type '" +
                                    col_types[i].get<std::string>() + "' for " + cname +
                                    ", using others");
            auto& table = db.tables[static_cast<size_t>(ti)];
            global.push_back(ColumnRef{ti, static_cast<int>(table.columns.size())});
            table.columns.push_back(ColumnDef{std::move(cname), type});
        }

        auto resolve_global = [&](int idx) {
            if (idx < 0 || idx >= static_cast<int>(global.size()) ||
                global[static_cast<size_t>(idx)].table < 0)
                throw SchemaError("db " + db.db_id + ": foreign/primary key names column id " +
                                  std::to_string(idx) + " which does not resolve");
            return global[static_cast<size_t>(idx)];
        };
        if (entry.contains("foreign_keys"))
            for (const auto& fk : entry["foreign_keys"])
                db.foreign_keys.emplace_back(resolve_global(fk.at(0).get<int>()),
                                             resolve_global(fk.at(1).get<int>()));
        if (entry.contains("primary_keys"))
            for (const auto& pk : entry["primary_keys"])
                db.primary_keys.push_back(resolve_global(pk.get<int>()));

        db.sqlite_path = db_dir / db.db_id / (db.db_id + ".sqlite");
        db.sqlite_present = std::filesystem::exists(db.sqlite_path);
        if (!db.sqlite_present && warnings)
            warnings->push_back("db " + db.db_id + ": sqlite file missing at " +
                                db.sqlite_path.string());

        check_schema_integrity(db);
        schemas.push_back(std::move(db));
    }
    return schemas;
}

std::vector<TestCase> load_testcases(const std::filesystem::path& questions_file,
                                     const std::vector<SchemaDb>& schemas) {
    json doc;
    try {
        doc = json::parse(read_file(questions_file));
    } catch (const json::parse_error& e) {
        throw ParseError(questions_file.string() + ": byte " + std::to_string(e.byte) + ": " +
                         e.what());
    }
    if (!doc.is_array()) throw ParseError(questions_file.string() + ": expected a JSON array");

    std::set<std::string> known;
    for (const auto& db : schemas) known.insert(db.db_id);

    std::vector<TestCase> cases;
    std::vector<std::string> unknown;
    int id = 0;
    for (const auto& entry : doc) {
        TestCase tc;
        tc.id = id++;
        tc.db_id = entry.at("db_id").get<std::string>();
        tc.question = entry.at("question").get<std::string>();
        tc.gold_sql = entry.at("query").get<std::string>();
        if (!known.count(tc.db_id)) unknown.push_back(tc.db_id);
        if (trim(tc.question).empty() || trim(tc.gold_sql).empty())
            throw SchemaError(questions_file.string() + ": case " + std::to_string(tc.id) +
                              " has an empty question or query");
        cases.push_back(std::move(tc));
    }
    if (!unknown.empty()) {
        std::set<std::string> uniq(unknown.begin(), unknown.end());
        throw SchemaError(questions_file.string() + ": unknown db_id(s): " +
                          join({uniq.begin(), uniq.end()}, ", "));
    }
    return cases;
}

std::string render_tables(const SchemaDb& db) {
    std::string out;
    for (const auto& t : db.tables) {
        out += t.name;
        out += '(';
        for (size_t i = 0; i < t.columns.size(); ++i) {
            if (i) out += ", ";
            out += t.columns[i].name;
            out += ':';
            out += to_string(t.columns[i].type);
        }
        out += ")\n";
    }
    return out;
}

std::string render_foreign_keys(const SchemaDb& db) {
    std::string out;
    for (const auto& [child, parent] : db.foreign_keys) {
        out += db.table(child).name;
        out += '.';
        out += db.column(child).name;
        out += " -> ";
        out += db.table(parent).name;
        out += '.';
        out += db.column(parent).name;
        out += '\n';
    }
    return out;
}

std::string render_schema(const SchemaDb& db) {
    return render_tables(db) + render_foreign_keys(db);
}

json schemas_to_json(const std::vector<SchemaDb>& schemas) {
    json arr = json::array();
    for (const auto& db : schemas) {
        json tables = json::array();
        for (const auto& t : db.tables) {
            json cols = json::array();
            for (const auto& c : t.columns)
                cols.push_back(json::array({c.name, to_string(c.type)}));
            tables.push_back(json{{"name", t.name}, {"columns", cols}});
        }
        json fks = json::array();
        for (const auto& [child, parent] : db.foreign_keys)
            fks.push_back(json::array({json::array({child.table, child.column}),
                                       json::array({parent.table, parent.column})}));
        json pks = json::array();
        for (const auto& pk : db.primary_keys) pks.push_back(json::array({pk.table, pk.column}));
        arr.push_back(json{{"db_id", db.db_id},
                           {"tables", tables},
                           {"foreign_keys", fks},
                           {"primary_keys", pks},
                           {"sqlite_path", db.sqlite_path.string()},
                           {"sqlite_present", db.sqlite_present}});
    }
    return arr;
}

std::vector<SchemaDb> schemas_from_json(const json& doc) {
    std::vector<SchemaDb> schemas;
    for (const auto& entry : doc) {
        SchemaDb db;
        db.db_id = entry.at("db_id").get<std::string>();
        for (const auto& t : entry.at("tables")) {
            TableDef table;
            table.name = t.at("name").get<std::string>();
            for (const auto& c : t.at("columns"))
                table.columns.push_back(
                    ColumnDef{c.at(0).get<std::string>(), coltype_from_string(c.at(1).get<std::string>())});
            db.tables.push_back(std::move(table));
        }
        for (const auto& fk : entry.at("foreign_keys"))
            db.foreign_keys.emplace_back(
                ColumnRef{fk.at(0).at(0).get<int>(), fk.at(0).at(1).get<int>()},
                ColumnRef{fk.at(1).at(0).get<int>(), fk.at(1).at(1).get<int>()});
        for (const auto& pk : entry.at("primary_keys"))
            db.primary_keys.push_back(ColumnRef{pk.at(0).get<int>(), pk.at(1).get<int>()});
        db.sqlite_path = entry.at("sqlite_path").get<std::string>();
        db.sqlite_present = entry.at("sqlite_present").get<bool>();
        check_schema_integrity(db);
        schemas.push_back(std::move(db));
    }
    return schemas;
}

const SchemaDb* find_schema(const std::vector<SchemaDb>& schemas, const std::string& db_id) {
    for (const auto& db : schemas)
        if (db.db_id == db_id) return &db;
    return nullptr;
}

} // namespace selfsql
