#pragma once

#include <string>
#include <vector>

#include "selfsql/generation.hpp"
#include "selfsql/llm.hpp"

namespace selfsql {

struct RelevanceScore {
    double s_semantic = 0.0;   // semantic similarity, 0..10
    double a_structural = 0.0; // keyword & structural alignment, 0..10
    double r_reasoning = 0.0;  // reasoning-path quality, 0..10
    double rel = 0.0;          // weighted combination, 0..10
};

struct WeightConfig {
    double alpha = 1.0 / 3.0;
    double beta = 1.0 / 3.0;
    double gamma = 1.0 / 3.0;
    void validate() const; // non-negative, sum to 1 within 1e-9
    static WeightConfig equal() { return {}; }
};

struct ScoredExample {
    GeneratedExample example;
    RelevanceScore score;
    bool selected = false;
    bool scoring_failed = false;
};

struct JudgeResult {
    double s = 0.0, a = 0.0, r = 0.0;
    bool failed = false; // two consecutive parse failures -> (0,0,0) flagged
};

// One completion with the filtering prompt; the reply is parsed for three
// integers 0-10 (labels tolerated in any order, else the first three in-range
// integers). Retried once on parse failure.
JudgeResult judge_components(const std::string& test_question, const GeneratedExample& example,
                             LlmClient& client, const StageOptions& options);

// Parses a judge reply into (s, a, r); false when no valid triple was found.
bool parse_judge_reply(const std::string& reply, double* s, double* a, double* r);

// alpha*s + beta*a + gamma*r, clamped to [0,10] against floating error only.
double combine(double s, double a, double r, const WeightConfig& weights);

// Marks selected = (rel >= theta), inclusive; preserves order and returns all
// items so analyses can re-sweep thresholds afterwards.
std::vector<ScoredExample> filter_by_threshold(std::vector<ScoredExample> scored, double theta);

// When nothing is selected, selects the top k by rel (ties to the lower
// ordinal). Returns true when the fallback fired.
bool fallback_selection(std::vector<ScoredExample>& scored, int k = 3);

} // namespace selfsql
