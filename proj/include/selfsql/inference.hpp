#pragma once

#include <string>
#include <vector>

#include "selfsql/dataset.hpp"
#include "selfsql/llm.hpp"
#include "selfsql/scoring.hpp"

namespace selfsql {

struct Prediction {
    int test_case_id = -1;
    std::string sql; // non-empty iff ok
    int n_examples_used = 0;
    bool fallback_used = false;
    bool ok = false;
    std::string raw_response;
    std::string diagnostics; // set when !ok
};

struct InferenceFlags {
    bool include_reasoning = true; // false under the no-reasoning ablation
};

// Builds the final-inference prompt from the selected examples (descending
// rel), runs one completion and extracts the SQL. Extraction failure yields
// ok=false with the raw response kept for audit.
Prediction infer_sql(const TestCase& test_case, const SchemaDb& db,
                     const std::vector<ScoredExample>& selected, LlmClient& client,
                     const StageOptions& options, const InferenceFlags& flags = {},
                     bool fallback_used = false);

// Strips markdown fences and leading labels, keeps the first statement
// (semicolon- or end-terminated), drops the trailing semicolon. Throws
// ExtractionError when nothing resembling SQL is present. Idempotent on its
// own output.
std::string extract_sql(const std::string& raw);

} // namespace selfsql
