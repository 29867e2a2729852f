#include "selfsql/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "selfsql/prompts.hpp"

namespace selfsql {

void WeightConfig::validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0)
        throw ConfigError("weights must be non-negative");
    if (std::fabs(alpha + beta + gamma - 1.0) > 1e-9)
        throw ConfigError("weights must sum to 1");
}

namespace {

// Scans for "<label> ... <integer>" with nothing but punctuation/space in
// between; returns the first match after `from`.
std::optional<int> labeled_int(const std::string& lower, std::string_view label) {
    size_t pos = lower.find(label);
    while (pos != std::string::npos) {
        size_t i = pos + label.size();
        // skip the rest of the label word plus separators
        while (i < lower.size() &&
               (std::isalpha(static_cast<unsigned char>(lower[i])) || lower[i] == '&'))
            ++i;
        size_t gap = 0;
        while (i < lower.size() && !std::isdigit(static_cast<unsigned char>(lower[i])) &&
               gap < 24) {
            if (std::isalpha(static_cast<unsigned char>(lower[i]))) {
                // another word between label and number: "similarity", "score", "path"...
                while (i < lower.size() && std::isalpha(static_cast<unsigned char>(lower[i]))) ++i;
            } else {
                ++i;
            }
            ++gap;
        }
        if (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i]))) {
            int v = 0;
            while (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i])))
                v = v * 10 + (lower[i++] - '0');
            if (v >= 0 && v <= 10) return v;
        }
        pos = lower.find(label, pos + 1);
    }
    return std::nullopt;
}

} // namespace

bool parse_judge_reply(const std::string& reply, double* s, double* a, double* r) {
    std::string lower = to_lower(reply);
    auto sv = labeled_int(lower, "semantic");
    auto av = labeled_int(lower, "structural");
    if (!av) av = labeled_int(lower, "keyword");
    auto rv = labeled_int(lower, "reasoning");
    if (sv && av && rv) {
        *s = *sv;
        *a = *av;
        *r = *rv;
        return true;
    }
    // Fallback: first three integers in [0, 10], in order of appearance.
    std::vector<int> found;
    for (size_t i = 0; i < lower.size() && found.size() < 3; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(lower[i]))) continue;
        if (i > 0 && (std::isalnum(static_cast<unsigned char>(lower[i - 1])) ||
                      lower[i - 1] == '.' || lower[i - 1] == '-'))
            continue; // part of a word, decimal or negative number
        size_t j = i;
        int v = 0;
        while (j < lower.size() && std::isdigit(static_cast<unsigned char>(lower[j])))
            v = v * 10 + (lower[j++] - '0');
        if (j < lower.size() && lower[j] == '.') {
            i = j;
            continue; // decimal, skip
        }
        if (v >= 0 && v <= 10) found.push_back(v);
        i = j - 1;
    }
    if (found.size() < 3) return false;
    *s = found[0];
    *a = found[1];
    *r = found[2];
    return true;
}

JudgeResult judge_components(const std::string& test_question, const GeneratedExample& example,
                             LlmClient& client, const StageOptions& options) {
    if (!example.parse_ok)
        throw Error("judge_components called on an unparsed example (case " +
                    std::to_string(example.test_case_id) + " ordinal " +
                    std::to_string(example.ordinal) + ")");
    std::string prompt =
        build_filtering_prompt(test_question, example.question, example.reasoning_path);
    ChatRequest req{options.model, prompt, options.temperature, options.max_tokens,
                    StageTag::scoring};

    JudgeResult result;
    std::string reply = client.complete(req);
    if (parse_judge_reply(reply, &result.s, &result.a, &result.r)) return result;
    // One retry, bypassing the cache read so a live backend gets a fresh sample.
    reply = client.complete_nocache_read(req);
    if (parse_judge_reply(reply, &result.s, &result.a, &result.r)) return result;
    return JudgeResult{0.0, 0.0, 0.0, true};
}

double combine(double s, double a, double r, const WeightConfig& weights) {
    weights.validate();
    if (s < 0 || s > 10 || a < 0 || a > 10 || r < 0 || r > 10)
        throw Error("combine: component out of [0,10]");
    double rel = weights.alpha * s + weights.beta * a + weights.gamma * r;
    // guard floating error only; the weighted mean of [0,10] values is in range
    return std::min(10.0, std::max(0.0, rel));
}

std::vector<ScoredExample> filter_by_threshold(std::vector<ScoredExample> scored, double theta) {
    if (theta < 0 || theta > 10) throw ConfigError("theta must be in [0,10]");
    for (auto& item : scored) item.selected = item.score.rel >= theta;
    return scored;
}

bool fallback_selection(std::vector<ScoredExample>& scored, int k) {
    if (k < 1) throw ConfigError("fallback_selection: k must be >= 1");
    for (const auto& item : scored)
        if (item.selected) return false;
    std::vector<size_t> order(scored.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t lhs, size_t rhs) {
        if (scored[lhs].score.rel != scored[rhs].score.rel)
            return scored[lhs].score.rel > scored[rhs].score.rel;
        return scored[lhs].example.ordinal < scored[rhs].example.ordinal;
    });
    for (size_t i = 0; i < order.size() && i < static_cast<size_t>(k); ++i)
        scored[order[i]].selected = true;
    return !scored.empty();
}

} // namespace selfsql
