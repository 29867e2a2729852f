#pragma once

#include <string>
#include <vector>

#include "selfsql/dataset.hpp"
#include "selfsql/llm.hpp"

namespace selfsql {

struct SchemaLinking {
    int test_case_id = -1;
    std::string linked_elements;               // free-text model summary
    std::vector<std::string> referenced_tables; // subset of db table names
    bool ok = false;
};

struct GeneratedExample {
    int test_case_id = -1;
    int ordinal = 0; // 0..n-1, dense even when parsing fails
    std::string question;
    std::string sql;
    std::string reasoning_path;
    bool parse_ok = false;
    std::string raw; // full model text, kept when parsing failed
};

struct ParsedTriplet {
    std::string question;
    std::string sql;
    std::string reasoning;
};

// One completion asking the model to list relevant tables/columns/FKs as free
// text. referenced_tables is extracted by case-insensitive whole-word match of
// db table names against the summary. Empty model output yields ok=false and
// the pipeline proceeds with an empty schema-linking slot.
SchemaLinking link_schema(const TestCase& test_case, const SchemaDb& db, LlmClient& client,
                          const StageOptions& options);

// One completion with the example-generation prompt; the reply is parsed into
// up to n triplets and padded with parse_ok=false stubs. Zero parseable
// triplets raise GenerationFailedError carrying the raw text.
std::vector<GeneratedExample> generate_examples(const TestCase& test_case, const SchemaDb& db,
                                                const SchemaLinking& linking, LlmClient& client,
                                                const StageOptions& options, int n = 10);

// Tolerant scanner for repeated (Similar Question / SQL query / Reasoning
// Path) header triples: numbering prefixes, header case variations and
// markdown fences are accepted; out-of-order blocks are skipped.
std::vector<ParsedTriplet> parse_example_blocks(const std::string& raw);

// Case-insensitive whole-word table mention extraction (exposed for tests).
std::vector<std::string> extract_table_mentions(const std::string& text, const SchemaDb& db);

// Schema renderings shaped for prompt slots: trailing newline trimmed, and a
// "(none)" sentinel when the database has no foreign keys (the templates
// require non-empty slots).
std::string prompt_tables(const SchemaDb& db);
std::string prompt_foreign_keys(const SchemaDb& db);

} // namespace selfsql
