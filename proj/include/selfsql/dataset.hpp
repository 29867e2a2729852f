#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "selfsql/util.hpp"

namespace selfsql {

enum class ColType { text, number, time, boolean, others };
const char* to_string(ColType t);
// Unknown strings map to `others`; *warned is set when that happens.
ColType coltype_from_string(std::string_view s, bool* warned = nullptr);

struct ColumnDef {
    std::string name;
    ColType type = ColType::others;
};

struct TableDef {
    std::string name;
    std::vector<ColumnDef> columns;
};

// (table index, column index) into SchemaDb::tables.
struct ColumnRef {
    int table = -1;
    int column = -1;
    bool operator==(const ColumnRef&) const = default;
};

struct SchemaDb {
    std::string db_id;
    std::vector<TableDef> tables;
    std::vector<std::pair<ColumnRef, ColumnRef>> foreign_keys; // (child, parent)
    std::vector<ColumnRef> primary_keys;
    std::filesystem::path sqlite_path;
    bool sqlite_present = false;

    const ColumnDef& column(const ColumnRef& ref) const;
    const TableDef& table(const ColumnRef& ref) const;
};

struct TestCase {
    int id = -1;
    std::string db_id;
    std::string question;
    std::string gold_sql;
};

// Ingests a Spider-format tables.json. db_dir is searched for
// <db_id>/<db_id>.sqlite; a missing file is a warning, not an error.
std::vector<SchemaDb> load_schemas(const std::filesystem::path& tables_file,
                                   const std::filesystem::path& db_dir,
                                   std::vector<std::string>* warnings = nullptr);

// Ingests Spider dev.json/train.json (fields db_id, question, query).
// Cases keep file order with ids 0..n-1.
std::vector<TestCase> load_testcases(const std::filesystem::path& questions_file,
                                     const std::vector<SchemaDb>& schemas);

// Deterministic text form used in prompts: one line per table
// `name(col:type, ...)`, then one line per FK `child.col -> parent.col`.
std::string render_tables(const SchemaDb& db);
std::string render_foreign_keys(const SchemaDb& db);
std::string render_schema(const SchemaDb& db);

// Normalized snapshot for reproducibility (schemas.norm.json).
json schemas_to_json(const std::vector<SchemaDb>& schemas);
std::vector<SchemaDb> schemas_from_json(const json& doc);

const SchemaDb* find_schema(const std::vector<SchemaDb>& schemas, const std::string& db_id);

} // namespace selfsql
