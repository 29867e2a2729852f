#include "selfsql/eval.hpp"

#include <iomanip>
#include <sstream>

namespace selfsql {

const char* to_string(Difficulty d) {
    switch (d) {
        case Difficulty::easy: return "easy";
        case Difficulty::medium: return "medium";
        case Difficulty::hard: return "hard";
        case Difficulty::extra: return "extra";
    }
    return "easy";
}

int difficulty_components(const sql::Sketch& sk) {
    return sk.joins + sk.aggregates + sk.nested_selects + sk.set_ops +
           (sk.has_group_by ? 1 : 0) + (sk.has_order_by ? 1 : 0) +
           (sk.max_where_conjuncts > 1 ? 1 : 0);
}

Difficulty classify_difficulty(const std::string& gold, const DifficultyRules& rules) {
    auto parsed = sql::try_parse(gold);
    if (!parsed) throw GoldInvalidError("cannot classify unparseable gold query: " + gold);
    int components = difficulty_components(sql::make_sketch(*parsed));
    if (components <= rules.easy_max) return Difficulty::easy;
    if (components <= rules.medium_max) return Difficulty::medium;
    if (components <= rules.hard_max) return Difficulty::hard;
    return Difficulty::extra;
}

bool exact_match(const std::string& pred, const std::string& gold) {
    auto gold_parsed = sql::try_parse(gold);
    if (!gold_parsed) throw GoldInvalidError("gold query does not parse: " + gold);
    auto pred_parsed = sql::try_parse(pred);
    if (!pred_parsed) return false;
    return sql::make_sketch(*pred_parsed) == sql::make_sketch(*gold_parsed);
}

EvalReport aggregate(const std::vector<EvalOutcome>& outcomes,
                     const std::vector<bool>& fallback_flags, int gold_invalid) {
    EvalReport report;
    report.gold_invalid = gold_invalid;
    for (const auto& o : outcomes) {
        auto& cell = report.per_difficulty[static_cast<int>(o.difficulty)];
        ++cell.count;
        ++report.overall.count;
        if (o.ex) {
            ++cell.ex_true;
            ++report.overall.ex_true;
        }
        if (o.em) {
            ++cell.em_true;
            ++report.overall.em_true;
        }
    }
    report.fallback_total = static_cast<int>(fallback_flags.size());
    for (bool f : fallback_flags)
        if (f) ++report.fallback_count;
    return report;
}

namespace {

std::string fmt_pct(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(1) << v;
    return ss.str();
}

} // namespace

std::string render_report(const EvalReport& report) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "level" << std::right << std::setw(8) << "count"
        << std::setw(8) << "EX%" << std::setw(8) << "EM%" << '\n';
    out << std::string(34, '-') << '\n';
    const char* names[4] = {"easy", "medium", "hard", "extra"};
    for (int i = 0; i < 4; ++i) {
        const auto& cell = report.per_difficulty[i];
        out << std::left << std::setw(10) << names[i] << std::right << std::setw(8) << cell.count
            << std::setw(8) << (cell.count ? fmt_pct(cell.ex_pct()) : "-") << std::setw(8)
            << (cell.count ? fmt_pct(cell.em_pct()) : "-") << '\n';
    }
    out << std::string(34, '-') << '\n';
    out << std::left << std::setw(10) << "overall" << std::right << std::setw(8)
        << report.overall.count << std::setw(8)
        << (report.overall.count ? fmt_pct(report.overall.ex_pct()) : "-") << std::setw(8)
        << (report.overall.count ? fmt_pct(report.overall.em_pct()) : "-") << '\n';
    out << '\n';
    out << "fallback rate: " << fmt_pct(report.fallback_rate()) << "% (" << report.fallback_count
        << "/" << report.fallback_total << ")\n";
    out << "gold-invalid cases (excluded): " << report.gold_invalid << '\n';
    return out.str();
}

json report_to_json(const EvalReport& report) {
    json per;
    const char* names[4] = {"easy", "medium", "hard", "extra"};
    for (int i = 0; i < 4; ++i) {
        const auto& cell = report.per_difficulty[i];
        per[names[i]] = {{"count", cell.count},
                         {"ex_pct", cell.ex_pct()},
                         {"em_pct", cell.em_pct()}};
    }
    return json{{"per_difficulty", per},
                {"overall",
                 {{"count", report.overall.count},
                  {"ex_pct", report.overall.ex_pct()},
                  {"em_pct", report.overall.em_pct()}}},
                {"fallback_count", report.fallback_count},
                {"fallback_rate", report.fallback_rate()},
                {"gold_invalid", report.gold_invalid}};
}

} // namespace selfsql
