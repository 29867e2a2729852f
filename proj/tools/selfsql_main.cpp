#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "selfsql/demo.hpp"
#include "selfsql/pipeline.hpp"

namespace {

using selfsql::RunConfig;

// Flag values are parked here; only flags the user actually passed are copied
// onto the config, so values from an existing run's config.json survive.
struct Flags {
    std::string tables, questions, db_dir, run_dir;
    std::string backend, scripted, cache, base_url, api_key_env;
    std::string gen_model, score_model, infer_model, embed_model;
    int n_examples = 10, parallelism = 1, limit = -1, fallback_k = 3;
    int rpm = 0, retries = 3, request_timeout = 60000, exec_timeout = 30000;
    double theta = 8.0, alpha = 1.0 / 3, beta = 1.0 / 3, gamma = 1.0 / 3;
    std::vector<double> census_thresholds, sweep_thresholds;
    std::uint64_t seed = 0;
    bool no_reasoning = false, no_filtering = false, no_schema_linking = false,
         no_examples = false, force = false;

    std::vector<std::function<void(RunConfig&)>> appliers;

    void bind(CLI::App* cmd) {
        auto opt = [this, cmd](const char* name, auto& slot, const char* help, auto member) {
            CLI::Option* o = cmd->add_option(name, slot, help);
            appliers.push_back([o, &slot, member](RunConfig& c) {
                if (o->count()) c.*member = slot;
            });
            return o;
        };
        auto flag = [this, cmd](const char* name, bool& slot, const char* help,
                                auto setter) {
            CLI::Option* o = cmd->add_flag(name, slot, help);
            appliers.push_back([o, &slot, setter](RunConfig& c) {
                if (o->count()) setter(c, slot);
            });
            return o;
        };

        cmd->add_option("--run-dir", run_dir, "run directory for all stage artifacts")
            ->required();
        opt("--tables", tables, "Spider tables.json", &RunConfig::tables_file);
        opt("--questions", questions, "Spider dev.json/train.json",
            &RunConfig::questions_file);
        opt("--db-dir", db_dir, "directory with <db_id>/<db_id>.sqlite",
            &RunConfig::db_dir);
        {
            CLI::Option* o = cmd->add_option(
                "--backend", backend, "http | scripted | hash | replay");
            appliers.push_back([o, this](RunConfig& c) {
                if (o->count()) c.backend = selfsql::backend_kind_from_string(backend);
            });
        }
        opt("--scripted", scripted, "responses file for the scripted backend",
            &RunConfig::scripted_file);
        opt("--cache", cache, "LLM response cache (JSONL)", &RunConfig::cache_file);
        opt("--base-url", base_url, "OpenAI-compatible endpoint, e.g. https://host/v1",
            &RunConfig::base_url);
        opt("--api-key-env", api_key_env, "env var holding the bearer token",
            &RunConfig::api_key_env);
        opt("--generation-model", gen_model, "model for schema linking + example generation",
            &RunConfig::generation_model);
        opt("--scoring-model", score_model, "model for relevance judging",
            &RunConfig::scoring_model);
        opt("--inference-model", infer_model, "model for final SQL inference",
            &RunConfig::inference_model);
        opt("--embedding-model", embed_model, "model for similarity analysis",
            &RunConfig::embedding_model);
        opt("--n-examples", n_examples, "examples generated per case",
            &RunConfig::n_examples);
        opt("--theta", theta, "relevance threshold in [0,10]", &RunConfig::theta);
        opt("--parallelism", parallelism, "bounded parallel cases", &RunConfig::parallelism);
        opt("--limit", limit, "grade only the first k cases", &RunConfig::limit);
        opt("--seed", seed, "seed for mock backends", &RunConfig::seed);
        opt("--fallback-k", fallback_k, "top-k kept when nothing passes the threshold",
            &RunConfig::fallback_k);
        opt("--rpm", rpm, "requests per minute (0 = unlimited)",
            &RunConfig::requests_per_minute);
        opt("--retries", retries, "transport retry attempts", &RunConfig::retry_attempts);
        opt("--request-timeout-ms", request_timeout, "HTTP timeout",
            &RunConfig::request_timeout_ms);
        opt("--exec-timeout-ms", exec_timeout, "SQLite query timeout",
            &RunConfig::exec_timeout_ms);
        {
            CLI::Option* a = cmd->add_option("--alpha", alpha, "semantic weight");
            CLI::Option* b = cmd->add_option("--beta", beta, "structural weight");
            CLI::Option* g = cmd->add_option("--gamma", gamma, "reasoning weight");
            appliers.push_back([a, b, g, this](RunConfig& c) {
                if (a->count()) c.weights.alpha = alpha;
                if (b->count()) c.weights.beta = beta;
                if (g->count()) c.weights.gamma = gamma;
            });
        }
        opt("--census-thresholds", census_thresholds,
            "thresholds for the score census analysis", &RunConfig::census_thresholds);
        opt("--sweep-thresholds", sweep_thresholds,
            "thresholds for the EX sweep analysis", &RunConfig::sweep_thresholds);
        flag("--no-reasoning", no_reasoning, "ablation: drop reasoning paths from prompts",
             [](RunConfig& c, bool v) { c.ablations.no_reasoning = v; });
        flag("--no-filtering", no_filtering, "ablation: pass all examples unfiltered",
             [](RunConfig& c, bool v) { c.ablations.no_filtering = v; });
        flag("--no-schema-linking", no_schema_linking,
             "ablation: leave the schema-linking slot empty",
             [](RunConfig& c, bool v) { c.ablations.no_schema_linking = v; });
        flag("--no-examples", no_examples, "ablation: zero-shot inference",
             [](RunConfig& c, bool v) { c.ablations.no_examples = v; });
        flag("--force", force, "recompute stages even when artifacts exist",
             [](RunConfig& c, bool v) { c.force = v; });
    }

    RunConfig resolve() const {
        RunConfig config;
        auto config_file = std::filesystem::path(run_dir) / "config.json";
        if (std::filesystem::exists(config_file))
            config = RunConfig::from_json(selfsql::json::parse(selfsql::read_file(config_file)));
        for (const auto& apply : appliers) apply(config);
        return config;
    }
};

int dispatch(const std::string& stage, const Flags& flags, const std::string& pred_file) {
    RunConfig config = flags.resolve();
    selfsql::Pipeline pipeline(config, flags.run_dir);
    if (stage == "run") return pipeline.run_all();
    if (stage == "ingest")
        pipeline.ingest();
    else if (stage == "generate")
        pipeline.generate();
    else if (stage == "score")
        pipeline.score();
    else if (stage == "infer")
        pipeline.infer();
    else if (stage == "evaluate")
        pipeline.evaluate(pred_file.empty()
                              ? std::nullopt
                              : std::optional<std::filesystem::path>(pred_file));
    else if (stage == "analyze")
        pipeline.analyze();
    else if (stage == "report")
        fputs(pipeline.report_text().c_str(), stdout);
    return pipeline.hard_failures() > 0 ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-augmented in-context text-to-SQL pipeline"};
    app.require_subcommand(1);

    const char* stages[] = {"run",      "ingest",  "generate", "score",
                            "infer",    "evaluate", "analyze",  "report"};
    const char* help[] = {
        "run every stage in order",
        "load the dataset and snapshot normalized schemas",
        "schema linking + example generation",
        "relevance judging, combination and threshold filtering",
        "final SQL inference and pred.sql export",
        "execution accuracy / exact match grading",
        "score census, similarity bins, threshold sweep, weight grid",
        "re-render the evaluation report",
    };

    std::vector<std::unique_ptr<Flags>> all_flags;
    std::string stage_to_run;
    std::string pred_file;
    for (size_t i = 0; i < std::size(stages); ++i) {
        CLI::App* cmd = app.add_subcommand(stages[i], help[i]);
        auto flags = std::make_unique<Flags>();
        flags->bind(cmd);
        if (std::string(stages[i]) == "evaluate")
            cmd->add_option("--pred", pred_file, "grade an external pred.sql instead");
        std::string name = stages[i];
        cmd->callback([&stage_to_run, name] { stage_to_run = name; });
        all_flags.push_back(std::move(flags));
    }

    std::string demo_dir;
    CLI::App* demo = app.add_subcommand("demo-data",
                                        "write a self-contained offline demo dataset");
    demo->add_option("--out", demo_dir, "output directory")->required();
    demo->callback([&stage_to_run] { stage_to_run = "demo-data"; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (stage_to_run == "demo-data") {
            selfsql::write_demo_dataset(demo_dir);
            printf("demo dataset written to %s\n", demo_dir.c_str());
            printf("try: selfsql run --run-dir <dir> --tables %s/tables.json --questions "
                   "%s/dev.json --db-dir %s/database --backend scripted --scripted "
                   "%s/responses.json\n",
                   demo_dir.c_str(), demo_dir.c_str(), demo_dir.c_str(), demo_dir.c_str());
            return 0;
        }
        for (size_t i = 0; i < std::size(stages); ++i)
            if (stage_to_run == stages[i]) return dispatch(stage_to_run, *all_flags[i], pred_file);
        return 2;
    } catch (const selfsql::ConfigError& e) {
        fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const selfsql::StageOrderError& e) {
        fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const selfsql::Error& e) {
        fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
