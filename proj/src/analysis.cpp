#include "selfsql/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace selfsql {

ScoreCensus score_census(const std::vector<ScoredExample>& scored,
                         const std::function<double(const ScoredExample&)>& cosine_of,
                         const std::vector<double>& thresholds) {
    ScoreCensus census;
    census.total = static_cast<int>(scored.size());
    for (double theta : thresholds) {
        CensusRow row;
        row.threshold = theta;
        double cosine_sum = 0.0;
        for (const auto& item : scored) {
            if (item.score.rel < theta) continue;
            ++row.retained;
            cosine_sum += cosine_of(item);
        }
        row.mean_cosine = row.retained ? cosine_sum / row.retained : 0.0;
        row.filtered_pct =
            census.total ? 100.0 * (census.total - row.retained) / census.total : 0.0;
        census.rows.push_back(row);
    }
    return census;
}

SimilarityBins similarity_ex_bins(const std::vector<std::pair<double, bool>>& pairs) {
    SimilarityBins out;
    out.total = static_cast<int>(pairs.size());
    std::array<int, 10> pop{};
    std::array<int, 10> hits{};
    for (const auto& [cosine, ex] : pairs) {
        if (cosine < 0.0 || cosine > 1.0)
            throw Error("similarity_ex_bins: cosine outside [0,1]; normalize first");
        int bin = std::min(9, static_cast<int>(cosine * 10.0));
        ++pop[static_cast<size_t>(bin)];
        if (ex) ++hits[static_cast<size_t>(bin)];
    }
    for (size_t i = 0; i < 10; ++i)
        if (pop[i] > 0)
            out.bins[i] = SimilarityBins::Bin{pop[i], static_cast<double>(hits[i]) / pop[i]};
    return out;
}

std::vector<double> normalize_minmax(const std::vector<double>& xs) {
    if (xs.empty()) return {};
    auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    double lo = *lo_it, hi = *hi_it;
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(hi > lo ? (x - lo) / (hi - lo) : 0.0);
    return out;
}

double correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw Error("correlation: length mismatch");
    size_t n = xs.size();
    if (n < 2) throw UndefinedCorrelationError("correlation needs at least two points");
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw UndefinedCorrelationError("correlation undefined for zero variance");
    double r = sxy / std::sqrt(sxx * syy);
    return std::min(1.0, std::max(-1.0, r));
}

namespace {

EvalReport run_selection(const std::vector<std::vector<ScoredExample>>& per_case, double theta,
                         int fallback_k, const ReinferFn& reinfer, const EvaluateFn& evaluate) {
    std::vector<EvalOutcome> outcomes;
    std::vector<bool> fallback_flags;
    int gold_invalid = 0;
    for (size_t i = 0; i < per_case.size(); ++i) {
        auto selected = filter_by_threshold(per_case[i], theta);
        bool fallback = fallback_selection(selected, fallback_k);
        Prediction pred = reinfer(static_cast<int>(i), selected, fallback);
        auto outcome = evaluate(static_cast<int>(i), pred);
        if (!outcome) {
            ++gold_invalid;
            continue;
        }
        outcomes.push_back(*outcome);
        fallback_flags.push_back(fallback);
    }
    return aggregate(outcomes, fallback_flags, gold_invalid);
}

} // namespace

std::vector<SweepRow> threshold_sweep(const std::vector<std::vector<ScoredExample>>& per_case,
                                      const std::vector<double>& thetas, int fallback_k,
                                      const ReinferFn& reinfer, const EvaluateFn& evaluate) {
    std::vector<SweepRow> rows;
    for (double theta : thetas)
        rows.push_back(SweepRow{theta, run_selection(per_case, theta, fallback_k, reinfer,
                                                     evaluate)});
    return rows;
}

std::vector<GridRow> weight_grid(const std::vector<std::vector<ScoredExample>>& per_case,
                                 const std::vector<WeightConfig>& grid, double theta,
                                 int fallback_k, const ReinferFn& reinfer,
                                 const EvaluateFn& evaluate) {
    std::vector<GridRow> rows;
    for (const WeightConfig& w : grid) {
        w.validate();
        std::vector<std::vector<ScoredExample>> recombined = per_case;
        for (auto& case_scores : recombined)
            for (auto& item : case_scores)
                item.score.rel = combine(item.score.s_semantic, item.score.a_structural,
                                         item.score.r_reasoning, w);
        rows.push_back(
            GridRow{w, run_selection(recombined, theta, fallback_k, reinfer, evaluate)});
    }
    return rows;
}

std::vector<WeightConfig> default_weight_grid() {
    const double third = 1.0 / 3.0;
    return {
        {third, third, third}, {1, 0, 0},     {0, 1, 0},    {0, 0, 1},
        {0.5, 0.5, 0},         {0.5, 0, 0.5}, {0, 0.5, 0.5},
    };
}

} // namespace selfsql
