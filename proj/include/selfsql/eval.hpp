#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selfsql/execution.hpp"
#include "selfsql/sketch.hpp"
#include "selfsql/util.hpp"

namespace selfsql {

enum class Difficulty { easy, medium, hard, extra };
const char* to_string(Difficulty d);

// Component-count thresholds; components = joins + aggregates + nested
// selects + set ops + group-by + order-by + multi-conjunct where. A
// documented approximation of Spider's official hardness buckets.
struct DifficultyRules {
    int easy_max = 1;
    int medium_max = 3;
    int hard_max = 5;
};

int difficulty_components(const sql::Sketch& sk);
Difficulty classify_difficulty(const std::string& gold, const DifficultyRules& rules = {});

// Spider-style structural match on canonicalized sketches: set-valued clauses
// compare order-insensitively, order-by order-sensitively, identifiers
// case-insensitively, literals exactly. Unparseable pred -> false;
// unparseable gold -> GoldInvalidError.
bool exact_match(const std::string& pred, const std::string& gold);

struct EvalOutcome {
    int test_case_id = -1;
    bool ex = false;
    bool em = false;
    Difficulty difficulty = Difficulty::easy;
    std::optional<std::string> diagnostics;
};

struct EvalReport {
    struct Cell {
        int count = 0;
        int ex_true = 0;
        int em_true = 0;
        double ex_pct() const { return count ? 100.0 * ex_true / count : 0.0; }
        double em_pct() const { return count ? 100.0 * em_true / count : 0.0; }
    };
    Cell per_difficulty[4];
    Cell overall;
    int fallback_count = 0;
    int fallback_total = 0;
    int gold_invalid = 0;
    double fallback_rate() const {
        return fallback_total ? 100.0 * fallback_count / fallback_total : 0.0;
    }
};

// fallback_flags, when provided, is aligned with outcomes.
EvalReport aggregate(const std::vector<EvalOutcome>& outcomes,
                     const std::vector<bool>& fallback_flags = {}, int gold_invalid = 0);

std::string render_report(const EvalReport& report);
json report_to_json(const EvalReport& report);

} // namespace selfsql
