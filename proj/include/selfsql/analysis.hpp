#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "selfsql/eval.hpp"
#include "selfsql/inference.hpp"
#include "selfsql/scoring.hpp"

namespace selfsql {

struct CensusRow {
    double threshold = 0.0;
    double mean_cosine = 0.0; // over retained examples; 0 when none retained
    int retained = 0;
    double filtered_pct = 0.0; // (total - retained) / total * 100
};

struct ScoreCensus {
    int total = 0;
    std::vector<CensusRow> rows;
};

// One row per threshold: retained count, filtered percentage and the mean
// question-pair cosine of the retained examples.
ScoreCensus score_census(const std::vector<ScoredExample>& scored,
                         const std::function<double(const ScoredExample&)>& cosine_of,
                         const std::vector<double>& thresholds = {0, 2, 4, 6, 8, 10});

struct SimilarityBins {
    struct Bin {
        int population = 0;
        double mean_ex = 0.0;
    };
    // 10 equal-width bins over [0,1]; empty bins are absent, not zero.
    std::array<std::optional<Bin>, 10> bins;
    int total = 0;
};

// pairs: (cosine already min-max normalized to [0,1], ex flag).
SimilarityBins similarity_ex_bins(const std::vector<std::pair<double, bool>>& pairs);

// Min-max normalization over the run; constant input maps to all zeros.
std::vector<double> normalize_minmax(const std::vector<double>& xs);

// Pearson correlation; throws UndefinedCorrelationError on zero variance or
// fewer than two points.
double correlation(const std::vector<double>& xs, const std::vector<double>& ys);

// Re-inference callback: produces a prediction for case `case_idx` given a
// selection. Under replay/mock backends this is fully offline.
using ReinferFn =
    std::function<Prediction(int case_idx, const std::vector<ScoredExample>& selected,
                             bool fallback_used)>;
// Grades one prediction; returns nullopt for gold-invalid cases.
using EvaluateFn = std::function<std::optional<EvalOutcome>(int case_idx, const Prediction&)>;

struct SweepRow {
    double theta = 0.0;
    EvalReport report;
};

// Refilters at each threshold, re-infers, re-evaluates.
std::vector<SweepRow> threshold_sweep(const std::vector<std::vector<ScoredExample>>& per_case,
                                      const std::vector<double>& thetas, int fallback_k,
                                      const ReinferFn& reinfer, const EvaluateFn& evaluate);

struct GridRow {
    WeightConfig weights;
    EvalReport report;
};

// Recombines cached component scores per weight vector (no re-judging),
// refilters at theta, re-infers and re-evaluates.
std::vector<GridRow> weight_grid(const std::vector<std::vector<ScoredExample>>& per_case,
                                 const std::vector<WeightConfig>& grid, double theta,
                                 int fallback_k, const ReinferFn& reinfer,
                                 const EvaluateFn& evaluate);

// The seven weight configurations reported in the weight study.
std::vector<WeightConfig> default_weight_grid();

} // namespace selfsql
