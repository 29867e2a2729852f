#include "selfsql/inference.hpp"

#include <cctype>

#include "selfsql/prompts.hpp"

namespace selfsql {

namespace {

// Content of the first fenced block, if any.
std::optional<std::string> fenced_block(const std::string& raw) {
    size_t open = raw.find("```");
    if (open == std::string::npos) return std::nullopt;
    size_t body_start = raw.find('\n', open);
    if (body_start == std::string::npos) return std::nullopt;
    ++body_start;
    size_t close = raw.find("```", body_start);
    if (close == std::string::npos) return raw.substr(body_start);
    return raw.substr(body_start, close - body_start);
}

bool find_sql_start(const std::string& text, size_t* out) {
    std::string lower = to_lower(text);
    size_t best = std::string::npos;
    for (std::string_view kw : {"select", "insert", "with"}) {
        size_t pos = 0;
        while ((pos = lower.find(kw, pos)) != std::string::npos) {
            bool left_ok = pos == 0 || !(std::isalnum(static_cast<unsigned char>(lower[pos - 1])) ||
                                         lower[pos - 1] == '_');
            size_t end = pos + kw.size();
            bool right_ok = end >= lower.size() ||
                            !(std::isalnum(static_cast<unsigned char>(lower[end])) ||
                              lower[end] == '_');
            if (left_ok && right_ok) {
                best = std::min(best, pos);
                break;
            }
            ++pos;
        }
    }
    if (best == std::string::npos) return false;
    *out = best;
    return true;
}

} // namespace

std::string extract_sql(const std::string& raw) {
    std::string text = trim(raw);
    if (auto block = fenced_block(text)) text = trim(*block);

    // peel leading labels like "SQL:" / "Answer:"
    for (;;) {
        if (istarts_with(text, "sql:"))
            text = trim(text.substr(4));
        else if (istarts_with(text, "answer:"))
            text = trim(text.substr(7));
        else
            break;
    }

    size_t start = 0;
    if (!find_sql_start(text, &start))
        throw ExtractionError("no SQL statement found in model output");
    text = text.substr(start);

    size_t semi = text.find(';');
    if (semi != std::string::npos) text = text.substr(0, semi);
    text = trim(text);
    if (text.empty()) throw ExtractionError("empty SQL statement in model output");
    return text;
}

Prediction infer_sql(const TestCase& test_case, const SchemaDb& db,
                     const std::vector<ScoredExample>& selected, LlmClient& client,
                     const StageOptions& options, const InferenceFlags& flags,
                     bool fallback_used) {
    std::vector<ExampleForPrompt> views;
    for (const auto& item : selected) {
        if (!item.selected || !item.example.parse_ok) continue;
        views.push_back(ExampleForPrompt{item.example.question, item.example.sql,
                                         item.example.reasoning_path, item.score.rel});
    }
    std::string prompt =
        build_inference_prompt(prompt_tables(db), prompt_foreign_keys(db), test_case.question,
                               format_filtered_examples(views, flags.include_reasoning));

    Prediction pred;
    pred.test_case_id = test_case.id;
    pred.n_examples_used = static_cast<int>(views.size());
    pred.fallback_used = fallback_used;

    ChatRequest req{options.model, prompt, options.temperature, options.max_tokens,
                    StageTag::inference};
    pred.raw_response = client.complete(req);
    try {
        pred.sql = extract_sql(pred.raw_response);
        pred.ok = true;
    } catch (const ExtractionError& e) {
        pred.ok = false;
        pred.diagnostics = e.what();
    }
    return pred;
}

} // namespace selfsql
