#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "selfsql/analysis.hpp"
#include "selfsql/dataset.hpp"
#include "selfsql/eval.hpp"
#include "selfsql/generation.hpp"
#include "selfsql/inference.hpp"
#include "selfsql/llm.hpp"
#include "selfsql/scoring.hpp"

namespace selfsql {

struct AblationFlags {
    bool no_reasoning = false;      // drop Reasoning lines from example blocks
    bool no_filtering = false;      // pass all parsed examples unfiltered
    bool no_schema_linking = false; // leave the schema-linking slot empty
    bool no_examples = false;       // zero-shot: "(no examples)" sentinel
};

struct RunConfig {
    std::filesystem::path tables_file;
    std::filesystem::path questions_file;
    std::filesystem::path db_dir;

    BackendKind backend = BackendKind::mock_hash;
    std::string generation_model = "gpt-4o";
    std::string scoring_model = "gpt-4o";
    std::string inference_model = "gpt-4o";
    std::string embedding_model = "hash-64";
    // generation samples for diversity; scoring and inference stay greedy
    double generation_temperature = 1.0;
    double scoring_temperature = 0.0;
    double inference_temperature = 0.0;
    int max_tokens = 2048;

    int n_examples = 10;
    double theta = 8.0;
    WeightConfig weights;
    AblationFlags ablations;
    int parallelism = 1;
    int limit = -1; // first-k cases; -1 = all
    std::uint64_t seed = 0;

    std::filesystem::path cache_file;    // LLM response cache (required for replay)
    std::filesystem::path scripted_file; // responses for mock_scripted
    std::string base_url;
    std::string api_key_env = "OPENAI_API_KEY";
    int request_timeout_ms = 60000;
    int retry_attempts = 3;
    int requests_per_minute = 0;
    int exec_timeout_ms = 30000;
    int fallback_k = 3;
    bool force = false;

    std::vector<double> census_thresholds = {0, 2, 4, 6, 8, 10};
    std::vector<double> sweep_thresholds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    json to_json() const; // everything but `force`; no timestamps, no run dir
    static RunConfig from_json(const json& doc);
};

// Run-directory layout.
struct RunPaths {
    std::filesystem::path root;
    std::filesystem::path config() const { return root / "config.json"; }
    std::filesystem::path schemas_norm() const { return root / "schemas.norm.json"; }
    std::filesystem::path linking() const { return root / "01_linking.jsonl"; }
    std::filesystem::path examples() const { return root / "02_examples.jsonl"; }
    std::filesystem::path scores() const { return root / "03_scores.jsonl"; }
    std::filesystem::path predictions() const { return root / "04_predictions.jsonl"; }
    std::filesystem::path pred_sql() const { return root / "pred.sql"; }
    std::filesystem::path eval() const { return root / "05_eval.json"; }
    std::filesystem::path report() const { return root / "report.txt"; }
    std::filesystem::path analysis_dir() const { return root / "analysis"; }
};

// Orchestrates the stages over one run directory. Stages read their inputs
// from the previous stage's artifact and are skipped when their own artifact
// already exists (unless force), which makes runs resumable and rerunnable
// with zero backend calls.
class Pipeline {
public:
    Pipeline(RunConfig config, std::filesystem::path run_dir,
             std::shared_ptr<Transport> transport_override = nullptr);

    void ingest();
    void generate();
    void score();
    void infer();
    // When external_pred is set, grades that pred.sql instead of stage 04.
    void evaluate(const std::optional<std::filesystem::path>& external_pred = std::nullopt);
    void analyze();
    std::string report_text(); // re-renders from 05_eval.json

    // All stages in order. Returns 0 on success, 1 when any case failed hard.
    int run_all();

    int hard_failures();
    std::uint64_t llm_transport_calls() const;
    const RunPaths& paths() const { return paths_; }

private:
    void require_artifact(const std::filesystem::path& p, const char* producer) const;
    bool stage_done(const std::filesystem::path& p) const;
    std::vector<TestCase> active_cases();
    void ensure_dataset();
    LlmClient& client();
    StageOptions stage_options(StageTag tag) const;

    struct LoadedScores {
        std::vector<std::vector<ScoredExample>> per_case; // index-aligned with cases
        std::vector<bool> fallback;
    };
    LoadedScores load_scored();
    std::vector<Prediction> load_predictions();

    RunConfig config_;
    RunPaths paths_;
    std::shared_ptr<Transport> transport_override_;
    std::unique_ptr<LlmClient> client_;
    std::vector<SchemaDb> schemas_;
    std::vector<TestCase> cases_;
    bool dataset_loaded_ = false;
};

// Convenience wrapper used by the CLI `run` subcommand.
int run_pipeline(const RunConfig& config, const std::filesystem::path& run_dir,
                 std::shared_ptr<Transport> transport_override = nullptr);

} // namespace selfsql
