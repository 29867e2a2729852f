#include "selfsql/generation.hpp"

#include <cctype>

#include "selfsql/prompts.hpp"
#include "selfsql/sqlparse.hpp"

namespace selfsql {

namespace {

// The paper describes the schema-linking stage but gives no prompt for it;
// this instruction asks for exactly what the generation prompt's slot needs.
const char* kLinkingInstruction =
    "You are a powerful text-to-SQL reasoner. Analyze the question against the database "
    "schema below and identify the tables, columns, and foreign keys that are relevant to "
    "answering it. Reply with a short free-text summary of the relevant schema elements.\n"
    "\n"
    "## Tables: {tables}\n"
    "## Foreign keys: {foreign_keys}\n"
    "## Question: {question}\n"
    "## Schema linking:\n";

bool word_boundary(char c) {
    return !(std::isalnum(static_cast<unsigned char>(c)) || c == '_');
}

} // namespace

std::string prompt_tables(const SchemaDb& db) { return trim(render_tables(db)); }

std::string prompt_foreign_keys(const SchemaDb& db) {
    std::string fks = trim(render_foreign_keys(db));
    return fks.empty() ? "(none)" : fks;
}

std::vector<std::string> extract_table_mentions(const std::string& text, const SchemaDb& db) {
    std::string haystack = to_lower(text);
    std::vector<std::string> found;
    for (const auto& table : db.tables) {
        std::string needle = to_lower(table.name);
        size_t pos = 0;
        bool hit = false;
        while ((pos = haystack.find(needle, pos)) != std::string::npos) {
            bool left_ok = pos == 0 || word_boundary(haystack[pos - 1]);
            size_t end = pos + needle.size();
            bool right_ok = end >= haystack.size() || word_boundary(haystack[end]);
            if (left_ok && right_ok) {
                hit = true;
                break;
            }
            ++pos;
        }
        if (hit) found.push_back(table.name);
    }
    return found;
}

SchemaLinking link_schema(const TestCase& test_case, const SchemaDb& db, LlmClient& client,
                          const StageOptions& options) {
    std::string prompt = kLinkingInstruction;
    prompt = replace_all(prompt, "{tables}", prompt_tables(db));
    prompt = replace_all(prompt, "{foreign_keys}", prompt_foreign_keys(db));
    prompt = replace_all(prompt, "{question}", test_case.question);

    ChatRequest req{options.model, prompt, options.temperature, options.max_tokens,
                    StageTag::generation};
    std::string summary = trim(client.complete(req));

    SchemaLinking linking;
    linking.test_case_id = test_case.id;
    if (summary.empty()) return linking; // linking-failed marker; slot stays empty
    linking.ok = true;
    linking.linked_elements = summary;
    linking.referenced_tables = extract_table_mentions(summary, db);
    return linking;
}

namespace {

enum class HeaderKind { none, question, sql, reasoning };

// Strips leading markdown/bullet/numbering noise: "##", "**", "-", ">",
// "3.", "3)", "Example 3:", then classifies the header.
HeaderKind classify_header(const std::string& line, std::string* content_after_colon) {
    std::string s = trim(line);
    for (;;) {
        if (s.empty()) break;
        if (s[0] == '#' || s[0] == '*' || s[0] == '-' || s[0] == '>') {
            s.erase(0, 1);
            s = trim(s);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(s[0]))) {
            size_t i = 0;
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
            if (i < s.size() && (s[i] == '.' || s[i] == ')' || s[i] == ':')) {
                s.erase(0, i + 1);
                s = trim(s);
                continue;
            }
            break;
        }
        if (istarts_with(s, "example")) {
            size_t i = 7;
            while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) ||
                                    std::isdigit(static_cast<unsigned char>(s[i]))))
                ++i;
            if (i < s.size() && (s[i] == ':' || s[i] == '.')) {
                s.erase(0, i + 1);
                s = trim(s);
                continue;
            }
            break;
        }
        break;
    }

    // The colon is required; it is what sets a header apart from prose that
    // merely starts with the same words.
    auto take = [&](std::string_view header) {
        if (!istarts_with(s, header)) return false;
        std::string rest = trim(s.substr(header.size()));
        if (rest.empty() || rest[0] != ':') return false;
        *content_after_colon = trim(rest.substr(1));
        return true;
    };
    if (take("similar question")) return HeaderKind::question;
    if (take("sql query") || take("sql")) return HeaderKind::sql;
    if (take("reasoning path") || take("reasoning")) return HeaderKind::reasoning;
    return HeaderKind::none;
}

std::string strip_fences(const std::string& text) {
    std::vector<std::string> kept;
    for (const auto& line : split_lines(text)) {
        std::string t = trim(line);
        if (istarts_with(t, "```")) continue;
        kept.push_back(line);
    }
    return trim(join(kept, "\n"));
}

} // namespace

std::vector<ParsedTriplet> parse_example_blocks(const std::string& raw) {
    struct Pending {
        std::string question, sql, reasoning;
        HeaderKind current = HeaderKind::none;
        bool discarded = false;
    };
    std::vector<ParsedTriplet> out;
    Pending pending;

    auto flush = [&] {
        if (!pending.discarded) {
            std::string q = trim(pending.question);
            std::string sql = strip_fences(pending.sql);
            std::string r = trim(pending.reasoning);
            if (!q.empty() && !sql.empty() && !r.empty()) out.push_back({q, sql, r});
        }
        pending = Pending{};
    };

    for (const auto& line : split_lines(raw)) {
        std::string content;
        HeaderKind kind = classify_header(line, &content);
        switch (kind) {
            case HeaderKind::question:
                if (pending.current != HeaderKind::none) flush();
                pending.current = HeaderKind::question;
                pending.question = content;
                break;
            case HeaderKind::sql:
                if (pending.current != HeaderKind::question || pending.discarded) {
                    // SQL before its question: skip this block, don't repair.
                    pending.discarded = true;
                    pending.current = HeaderKind::sql;
                    break;
                }
                pending.current = HeaderKind::sql;
                pending.sql = content;
                break;
            case HeaderKind::reasoning:
                if (pending.current != HeaderKind::sql || pending.discarded) {
                    pending.discarded = true;
                    pending.current = HeaderKind::reasoning;
                    break;
                }
                pending.current = HeaderKind::reasoning;
                pending.reasoning = content;
                break;
            case HeaderKind::none:
                switch (pending.current) {
                    case HeaderKind::question:
                        pending.question += pending.question.empty() ? line : "\n" + line;
                        break;
                    case HeaderKind::sql:
                        pending.sql += pending.sql.empty() ? line : "\n" + line;
                        break;
                    case HeaderKind::reasoning:
                        pending.reasoning += pending.reasoning.empty() ? line : "\n" + line;
                        break;
                    default: break; // preamble noise
                }
                break;
        }
    }
    flush();
    return out;
}

std::vector<GeneratedExample> generate_examples(const TestCase& test_case, const SchemaDb& db,
                                                const SchemaLinking& linking, LlmClient& client,
                                                const StageOptions& options, int n) {
    if (n < 1) throw ConfigError("generate_examples: n must be >= 1");
    std::string prompt = build_generation_prompt(linking.linked_elements, prompt_tables(db),
                                                 prompt_foreign_keys(db), test_case.question);
    ChatRequest req{options.model, prompt, options.temperature, options.max_tokens,
                    StageTag::generation};
    std::string raw = client.complete(req);

    std::vector<ParsedTriplet> triplets = parse_example_blocks(raw);
    if (triplets.empty())
        throw GenerationFailedError(
            "generation produced no parseable examples for case " +
                std::to_string(test_case.id),
            raw);
    if (static_cast<int>(triplets.size()) > n)
        triplets.resize(static_cast<size_t>(n));

    std::vector<GeneratedExample> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        GeneratedExample ex;
        ex.test_case_id = test_case.id;
        ex.ordinal = i;
        if (i < static_cast<int>(triplets.size())) {
            ex.question = triplets[static_cast<size_t>(i)].question;
            ex.sql = triplets[static_cast<size_t>(i)].sql;
            ex.reasoning_path = triplets[static_cast<size_t>(i)].reasoning;
            // parse_ok also requires the SQL to parse under the eval grammar
            ex.parse_ok = sql::try_parse(ex.sql).has_value();
            if (!ex.parse_ok) ex.raw = raw;
        } else {
            ex.raw = raw;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

} // namespace selfsql
