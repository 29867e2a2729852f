#include "selfsql/pipeline.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "selfsql/prompts.hpp"

namespace selfsql {

json RunConfig::to_json() const {
    return json{
        {"tables_file", tables_file.string()},
        {"questions_file", questions_file.string()},
        {"db_dir", db_dir.string()},
        {"backend", to_string(backend)},
        {"generation_model", generation_model},
        {"scoring_model", scoring_model},
        {"inference_model", inference_model},
        {"embedding_model", embedding_model},
        {"generation_temperature", generation_temperature},
        {"scoring_temperature", scoring_temperature},
        {"inference_temperature", inference_temperature},
        {"max_tokens", max_tokens},
        {"n_examples", n_examples},
        {"theta", theta},
        {"weights", {{"alpha", weights.alpha}, {"beta", weights.beta}, {"gamma", weights.gamma}}},
        {"ablations",
         {{"no_reasoning", ablations.no_reasoning},
          {"no_filtering", ablations.no_filtering},
          {"no_schema_linking", ablations.no_schema_linking},
          {"no_examples", ablations.no_examples}}},
        {"parallelism", parallelism},
        {"limit", limit},
        {"seed", seed},
        {"cache_file", cache_file.string()},
        {"scripted_file", scripted_file.string()},
        {"base_url", base_url},
        {"api_key_env", api_key_env},
        {"request_timeout_ms", request_timeout_ms},
        {"retry_attempts", retry_attempts},
        {"requests_per_minute", requests_per_minute},
        {"exec_timeout_ms", exec_timeout_ms},
        {"fallback_k", fallback_k},
        {"census_thresholds", census_thresholds},
        {"sweep_thresholds", sweep_thresholds},
    };
}

RunConfig RunConfig::from_json(const json& doc) {
    RunConfig c;
    c.tables_file = doc.at("tables_file").get<std::string>();
    c.questions_file = doc.at("questions_file").get<std::string>();
    c.db_dir = doc.at("db_dir").get<std::string>();
    c.backend = backend_kind_from_string(doc.at("backend").get<std::string>());
    c.generation_model = doc.at("generation_model").get<std::string>();
    c.scoring_model = doc.at("scoring_model").get<std::string>();
    c.inference_model = doc.at("inference_model").get<std::string>();
    c.embedding_model = doc.at("embedding_model").get<std::string>();
    c.generation_temperature = doc.at("generation_temperature").get<double>();
    c.scoring_temperature = doc.at("scoring_temperature").get<double>();
    c.inference_temperature = doc.at("inference_temperature").get<double>();
    c.max_tokens = doc.at("max_tokens").get<int>();
    c.n_examples = doc.at("n_examples").get<int>();
    c.theta = doc.at("theta").get<double>();
    c.weights.alpha = doc.at("weights").at("alpha").get<double>();
    c.weights.beta = doc.at("weights").at("beta").get<double>();
    c.weights.gamma = doc.at("weights").at("gamma").get<double>();
    c.ablations.no_reasoning = doc.at("ablations").at("no_reasoning").get<bool>();
    c.ablations.no_filtering = doc.at("ablations").at("no_filtering").get<bool>();
    c.ablations.no_schema_linking = doc.at("ablations").at("no_schema_linking").get<bool>();
    c.ablations.no_examples = doc.at("ablations").at("no_examples").get<bool>();
    c.parallelism = doc.at("parallelism").get<int>();
    c.limit = doc.at("limit").get<int>();
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.cache_file = doc.at("cache_file").get<std::string>();
    c.scripted_file = doc.at("scripted_file").get<std::string>();
    c.base_url = doc.at("base_url").get<std::string>();
    c.api_key_env = doc.at("api_key_env").get<std::string>();
    c.request_timeout_ms = doc.at("request_timeout_ms").get<int>();
    c.retry_attempts = doc.at("retry_attempts").get<int>();
    c.requests_per_minute = doc.at("requests_per_minute").get<int>();
    c.exec_timeout_ms = doc.at("exec_timeout_ms").get<int>();
    c.fallback_k = doc.at("fallback_k").get<int>();
    c.census_thresholds = doc.at("census_thresholds").get<std::vector<double>>();
    c.sweep_thresholds = doc.at("sweep_thresholds").get<std::vector<double>>();
    return c;
}

Pipeline::Pipeline(RunConfig config, std::filesystem::path run_dir,
                   std::shared_ptr<Transport> transport_override)
    : config_(std::move(config)),
      paths_{std::move(run_dir)},
      transport_override_(std::move(transport_override)) {
    if (config_.theta < 0 || config_.theta > 10) throw ConfigError("theta must be in [0,10]");
    if (config_.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (config_.n_examples < 1) throw ConfigError("n_examples must be >= 1");
    config_.weights.validate();
    std::filesystem::create_directories(paths_.root);
}

bool Pipeline::stage_done(const std::filesystem::path& p) const {
    return !config_.force && std::filesystem::exists(p);
}

void Pipeline::require_artifact(const std::filesystem::path& p, const char* producer) const {
    if (!std::filesystem::exists(p))
        throw StageOrderError("missing " + p.string() + "; run `" + producer + "` first");
}

LlmClient& Pipeline::client() {
    if (client_) return *client_;
    LlmClient::Config cc;
    cc.kind = config_.backend;
    cc.retry.max_attempts = config_.retry_attempts;
    cc.rate.requests_per_minute = config_.requests_per_minute;
    if (!config_.cache_file.empty()) cc.cache_file = config_.cache_file;
    if (transport_override_) {
        cc.transport = transport_override_;
    } else {
        switch (config_.backend) {
            case BackendKind::http_api:
                cc.transport = std::make_shared<HttpTransport>(HttpTransport::Options{
                    config_.base_url, config_.api_key_env, config_.request_timeout_ms});
                break;
            case BackendKind::mock_scripted:
                if (config_.scripted_file.empty())
                    throw ConfigError("mock_scripted backend requires --scripted file");
                cc.transport =
                    ScriptedTransport::from_json_file(config_.scripted_file, config_.seed);
                break;
            case BackendKind::mock_hash:
                cc.transport = std::make_shared<HashTransport>(config_.seed);
                break;
            case BackendKind::replay_cache:
                break;
        }
    }
    client_ = std::make_unique<LlmClient>(std::move(cc));
    return *client_;
}

std::uint64_t Pipeline::llm_transport_calls() const {
    return client_ ? client_->transport_calls() : 0;
}

StageOptions Pipeline::stage_options(StageTag tag) const {
    switch (tag) {
        case StageTag::generation:
            return {config_.generation_model, config_.generation_temperature, config_.max_tokens,
                    tag};
        case StageTag::scoring:
            return {config_.scoring_model, config_.scoring_temperature, config_.max_tokens, tag};
        case StageTag::inference:
            return {config_.inference_model, config_.inference_temperature, config_.max_tokens,
                    tag};
    }
    throw Error("bad stage tag");
}

void Pipeline::ensure_dataset() {
    if (dataset_loaded_) return;
    if (std::filesystem::exists(paths_.schemas_norm())) {
        schemas_ = schemas_from_json(json::parse(read_file(paths_.schemas_norm())));
    } else {
        std::vector<std::string> warnings;
        schemas_ = load_schemas(config_.tables_file, config_.db_dir, &warnings);
        for (const auto& w : warnings) fprintf(stderr, "warning: %s\n", w.c_str());
    }
    cases_ = load_testcases(config_.questions_file, schemas_);
    dataset_loaded_ = true;
}

std::vector<TestCase> Pipeline::active_cases() {
    ensure_dataset();
    std::vector<TestCase> cases = cases_;
    if (config_.limit >= 0 && static_cast<size_t>(config_.limit) < cases.size())
        cases.resize(static_cast<size_t>(config_.limit));
    return cases;
}

void Pipeline::ingest() {
    if (stage_done(paths_.schemas_norm())) return;
    dataset_loaded_ = false; // reload from source files
    std::vector<std::string> warnings;
    schemas_ = load_schemas(config_.tables_file, config_.db_dir, &warnings);
    for (const auto& w : warnings) fprintf(stderr, "warning: %s\n", w.c_str());
    cases_ = load_testcases(config_.questions_file, schemas_);
    dataset_loaded_ = true;
    write_file_atomic(paths_.schemas_norm(), schemas_to_json(schemas_).dump(2) + "\n");
    write_file_atomic(paths_.config(), config_.to_json().dump(2) + "\n");
}

void Pipeline::generate() {
    if (stage_done(paths_.examples())) return;
    require_artifact(paths_.schemas_norm(), "ingest");
    auto cases = active_cases();

    struct CaseResult {
        json linking_row;
        std::vector<json> example_rows;
    };
    std::vector<CaseResult> results(cases.size());
    StageOptions opts = stage_options(StageTag::generation);
    LlmClient& llm = client();

    parallel_for(static_cast<int>(cases.size()), config_.parallelism, [&](int i) {
        const TestCase& tc = cases[static_cast<size_t>(i)];
        const SchemaDb* db = find_schema(schemas_, tc.db_id);
        if (!db) throw SchemaError("case " + std::to_string(tc.id) + ": unknown db " + tc.db_id);
        CaseResult& result = results[static_cast<size_t>(i)];

        SchemaLinking linking;
        linking.test_case_id = tc.id;
        bool skipped = config_.ablations.no_schema_linking;
        std::string link_error;
        if (!skipped) {
            try {
                linking = link_schema(tc, *db, llm, opts);
            } catch (const Error& e) {
                link_error = e.what(); // proceed with an empty slot
            }
        }
        result.linking_row = json{{"case_id", tc.id},
                                  {"ok", linking.ok},
                                  {"skipped", skipped},
                                  {"summary", linking.linked_elements},
                                  {"referenced_tables", linking.referenced_tables}};
        if (!link_error.empty()) result.linking_row["error"] = link_error;

        try {
            auto examples = generate_examples(tc, *db, linking, llm, opts, config_.n_examples);
            for (const auto& ex : examples)
                result.example_rows.push_back(json{{"case_id", ex.test_case_id},
                                                   {"ordinal", ex.ordinal},
                                                   {"parse_ok", ex.parse_ok},
                                                   {"question", ex.question},
                                                   {"sql", ex.sql},
                                                   {"reasoning", ex.reasoning_path},
                                                   {"raw", ex.raw}});
        } catch (const GenerationFailedError& e) {
            for (int k = 0; k < config_.n_examples; ++k)
                result.example_rows.push_back(json{{"case_id", tc.id},
                                                   {"ordinal", k},
                                                   {"parse_ok", false},
                                                   {"question", ""},
                                                   {"sql", ""},
                                                   {"reasoning", ""},
                                                   {"raw", e.raw()},
                                                   {"error", e.what()}});
        } catch (const Error& e) {
            for (int k = 0; k < config_.n_examples; ++k)
                result.example_rows.push_back(json{{"case_id", tc.id},
                                                   {"ordinal", k},
                                                   {"parse_ok", false},
                                                   {"question", ""},
                                                   {"sql", ""},
                                                   {"reasoning", ""},
                                                   {"raw", ""},
                                                   {"error", e.what()}});
        }
    });

    std::vector<json> linking_rows, example_rows;
    for (auto& r : results) {
        linking_rows.push_back(std::move(r.linking_row));
        for (auto& row : r.example_rows) example_rows.push_back(std::move(row));
    }
    write_jsonl(paths_.linking(), linking_rows);
    write_jsonl(paths_.examples(), example_rows);
}

namespace {

GeneratedExample example_from_row(const json& row) {
    GeneratedExample ex;
    ex.test_case_id = row.at("case_id").get<int>();
    ex.ordinal = row.at("ordinal").get<int>();
    ex.parse_ok = row.at("parse_ok").get<bool>();
    ex.question = row.at("question").get<std::string>();
    ex.sql = row.at("sql").get<std::string>();
    ex.reasoning_path = row.at("reasoning").get<std::string>();
    ex.raw = row.value("raw", "");
    return ex;
}

} // namespace

void Pipeline::score() {
    if (stage_done(paths_.scores())) return;
    require_artifact(paths_.examples(), "generate");
    auto cases = active_cases();

    std::map<int, std::vector<GeneratedExample>> by_case;
    for (const auto& row : read_jsonl(paths_.examples()))
        by_case[row.at("case_id").get<int>()].push_back(example_from_row(row));

    StageOptions opts = stage_options(StageTag::scoring);
    LlmClient& llm = client();
    std::vector<std::vector<json>> rows(cases.size());

    parallel_for(static_cast<int>(cases.size()), config_.parallelism, [&](int i) {
        const TestCase& tc = cases[static_cast<size_t>(i)];
        auto it = by_case.find(tc.id);
        if (it == by_case.end()) return;

        std::vector<ScoredExample> scored;
        for (const auto& ex : it->second) {
            ScoredExample item;
            item.example = ex;
            if (ex.parse_ok) {
                JudgeResult jr = judge_components(tc.question, ex, llm, opts);
                item.score.s_semantic = jr.s;
                item.score.a_structural = jr.a;
                item.score.r_reasoning = jr.r;
                item.scoring_failed = jr.failed;
            } else {
                item.scoring_failed = true; // stubs score (0,0,0)
            }
            item.score.rel = combine(item.score.s_semantic, item.score.a_structural,
                                     item.score.r_reasoning, config_.weights);
            scored.push_back(std::move(item));
        }
        scored = filter_by_threshold(std::move(scored), config_.theta);
        bool fallback = fallback_selection(scored, config_.fallback_k);
        for (const auto& item : scored)
            rows[static_cast<size_t>(i)].push_back(
                json{{"case_id", item.example.test_case_id},
                     {"ordinal", item.example.ordinal},
                     {"s", item.score.s_semantic},
                     {"a", item.score.a_structural},
                     {"r", item.score.r_reasoning},
                     {"rel", item.score.rel},
                     {"selected", item.selected},
                     {"fallback", fallback},
                     {"scoring_failed", item.scoring_failed}});
    });

    std::vector<json> flat;
    for (auto& case_rows : rows)
        for (auto& row : case_rows) flat.push_back(std::move(row));
    write_jsonl(paths_.scores(), flat);
}

Pipeline::LoadedScores Pipeline::load_scored() {
    require_artifact(paths_.examples(), "generate");
    require_artifact(paths_.scores(), "score");
    auto cases = active_cases();

    std::map<std::pair<int, int>, GeneratedExample> examples;
    for (const auto& row : read_jsonl(paths_.examples())) {
        GeneratedExample ex = example_from_row(row);
        examples[{ex.test_case_id, ex.ordinal}] = ex;
    }

    std::map<int, size_t> case_index;
    for (size_t i = 0; i < cases.size(); ++i) case_index[cases[i].id] = i;

    LoadedScores out;
    out.per_case.resize(cases.size());
    out.fallback.assign(cases.size(), false);
    for (const auto& row : read_jsonl(paths_.scores())) {
        int case_id = row.at("case_id").get<int>();
        auto idx = case_index.find(case_id);
        if (idx == case_index.end()) continue;
        ScoredExample item;
        auto ex_it = examples.find({case_id, row.at("ordinal").get<int>()});
        if (ex_it == examples.end())
            throw StageOrderError("score row without matching example (case " +
                                  std::to_string(case_id) + ")");
        item.example = ex_it->second;
        item.score.s_semantic = row.at("s").get<double>();
        item.score.a_structural = row.at("a").get<double>();
        item.score.r_reasoning = row.at("r").get<double>();
        item.score.rel = row.at("rel").get<double>();
        item.selected = row.at("selected").get<bool>();
        item.scoring_failed = row.at("scoring_failed").get<bool>();
        out.fallback[idx->second] = row.at("fallback").get<bool>();
        out.per_case[idx->second].push_back(std::move(item));
    }
    return out;
}

namespace {

std::string flatten_sql(const std::string& sql) {
    std::string out = sql;
    for (char& c : out)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    return trim(out);
}

// The selection the inference prompt actually sees under the active ablations.
void apply_ablations(const AblationFlags& ablations, std::vector<ScoredExample>& selection,
                     bool& fallback) {
    if (ablations.no_examples) {
        selection.clear();
        fallback = false;
    } else if (ablations.no_filtering) {
        for (auto& item : selection) item.selected = item.example.parse_ok;
        fallback = false;
    }
}

} // namespace

void Pipeline::infer() {
    if (stage_done(paths_.predictions())) return;
    auto scored = load_scored();
    auto cases = active_cases();

    StageOptions opts = stage_options(StageTag::inference);
    LlmClient& llm = client();
    InferenceFlags flags{!config_.ablations.no_reasoning};
    std::vector<json> rows(cases.size());
    std::vector<std::string> pred_lines(cases.size());

    parallel_for(static_cast<int>(cases.size()), config_.parallelism, [&](int i) {
        const TestCase& tc = cases[static_cast<size_t>(i)];
        const SchemaDb* db = find_schema(schemas_, tc.db_id);
        std::vector<ScoredExample> selection = scored.per_case[static_cast<size_t>(i)];
        bool fallback = scored.fallback[static_cast<size_t>(i)];
        apply_ablations(config_.ablations, selection, fallback);

        Prediction pred;
        try {
            pred = infer_sql(tc, *db, selection, llm, opts, flags, fallback);
        } catch (const Error& e) {
            pred.test_case_id = tc.id;
            pred.ok = false;
            pred.diagnostics = e.what();
            pred.fallback_used = fallback;
        }
        rows[static_cast<size_t>(i)] = json{{"case_id", pred.test_case_id},
                                            {"ok", pred.ok},
                                            {"sql", pred.sql},
                                            {"n_examples_used", pred.n_examples_used},
                                            {"fallback_used", pred.fallback_used},
                                            {"raw_response", pred.raw_response},
                                            {"diagnostics", pred.diagnostics}};
        pred_lines[static_cast<size_t>(i)] = pred.ok ? flatten_sql(pred.sql) : "";
    });

    write_jsonl(paths_.predictions(), rows);
    std::string pred_file;
    for (const auto& line : pred_lines) {
        pred_file += line;
        pred_file += '\n';
    }
    write_file_atomic(paths_.pred_sql(), pred_file);
}

std::vector<Prediction> Pipeline::load_predictions() {
    require_artifact(paths_.predictions(), "infer");
    std::vector<Prediction> preds;
    for (const auto& row : read_jsonl(paths_.predictions())) {
        Prediction p;
        p.test_case_id = row.at("case_id").get<int>();
        p.ok = row.at("ok").get<bool>();
        p.sql = row.at("sql").get<std::string>();
        p.n_examples_used = row.at("n_examples_used").get<int>();
        p.fallback_used = row.at("fallback_used").get<bool>();
        p.raw_response = row.at("raw_response").get<std::string>();
        p.diagnostics = row.at("diagnostics").get<std::string>();
        preds.push_back(std::move(p));
    }
    return preds;
}

void Pipeline::evaluate(const std::optional<std::filesystem::path>& external_pred) {
    if (stage_done(paths_.eval())) return;
    auto cases = active_cases();

    std::vector<Prediction> preds;
    std::vector<bool> fallback_flags(cases.size(), false);
    if (external_pred) {
        auto lines = split_lines(read_file(*external_pred));
        if (lines.size() < cases.size())
            throw Error("external pred file has " + std::to_string(lines.size()) +
                        " lines for " + std::to_string(cases.size()) + " cases");
        for (size_t i = 0; i < cases.size(); ++i) {
            Prediction p;
            p.test_case_id = cases[i].id;
            p.sql = trim(lines[i]);
            p.ok = !p.sql.empty();
            if (!p.ok) p.diagnostics = "empty prediction line";
            preds.push_back(std::move(p));
        }
    } else {
        preds = load_predictions();
        if (std::filesystem::exists(paths_.scores()))
            fallback_flags = load_scored().fallback;
    }
    if (preds.size() != cases.size())
        throw Error("prediction count " + std::to_string(preds.size()) +
                    " does not match case count " + std::to_string(cases.size()));

    struct CaseEval {
        bool gold_invalid = false;
        std::string gold_error;
        EvalOutcome outcome;
    };
    std::vector<CaseEval> evals(cases.size());

    parallel_for(static_cast<int>(cases.size()), config_.parallelism, [&](int i) {
        const TestCase& tc = cases[static_cast<size_t>(i)];
        const SchemaDb* db = find_schema(schemas_, tc.db_id);
        const Prediction& pred = preds[static_cast<size_t>(i)];
        CaseEval& ce = evals[static_cast<size_t>(i)];
        ce.outcome.test_case_id = tc.id;
        try {
            ce.outcome.difficulty = classify_difficulty(tc.gold_sql);
            ce.outcome.em = pred.ok && exact_match(pred.sql, tc.gold_sql);
            if (!pred.ok) {
                ce.outcome.ex = false;
                ce.outcome.diagnostics = pred.diagnostics.empty() ? "inference failed"
                                                                  : pred.diagnostics;
            } else {
                ce.outcome.ex = execution_match(pred.sql, tc.gold_sql, *db,
                                                config_.exec_timeout_ms);
                if (!ce.outcome.ex) {
                    // keep the engine message when the prediction itself failed
                    try {
                        execute(pred.sql, *db, config_.exec_timeout_ms);
                    } catch (const Error& e) {
                        ce.outcome.diagnostics = e.what();
                    }
                }
            }
        } catch (const GoldInvalidError& e) {
            ce.gold_invalid = true;
            ce.gold_error = e.what();
        }
    });

    std::vector<EvalOutcome> outcomes;
    std::vector<bool> fallback_kept;
    json gold_invalid = json::array();
    for (size_t i = 0; i < evals.size(); ++i) {
        if (evals[i].gold_invalid) {
            gold_invalid.push_back(
                json{{"case_id", cases[i].id}, {"error", evals[i].gold_error}});
            continue;
        }
        outcomes.push_back(evals[i].outcome);
        fallback_kept.push_back(fallback_flags[i]);
    }
    EvalReport report =
        aggregate(outcomes, fallback_kept, static_cast<int>(gold_invalid.size()));

    json out;
    json outcome_rows = json::array();
    for (const auto& o : outcomes) {
        json row{{"case_id", o.test_case_id},
                 {"ex", o.ex},
                 {"em", o.em},
                 {"difficulty", to_string(o.difficulty)}};
        if (o.diagnostics) row["diagnostics"] = *o.diagnostics;
        outcome_rows.push_back(std::move(row));
    }
    out["outcomes"] = outcome_rows;
    out["gold_invalid"] = gold_invalid;
    out["summary"] = report_to_json(report);
    write_file_atomic(paths_.eval(), out.dump(2) + "\n");
    write_file_atomic(paths_.report(), render_report(report));
}

std::string Pipeline::report_text() {
    require_artifact(paths_.eval(), "evaluate");
    json doc = json::parse(read_file(paths_.eval()));
    std::vector<EvalOutcome> outcomes;
    for (const auto& row : doc.at("outcomes")) {
        EvalOutcome o;
        o.test_case_id = row.at("case_id").get<int>();
        o.ex = row.at("ex").get<bool>();
        o.em = row.at("em").get<bool>();
        std::string d = row.at("difficulty").get<std::string>();
        o.difficulty = d == "easy"     ? Difficulty::easy
                       : d == "medium" ? Difficulty::medium
                       : d == "hard"   ? Difficulty::hard
                                       : Difficulty::extra;
        outcomes.push_back(o);
    }
    int gold_invalid = static_cast<int>(doc.at("gold_invalid").size());
    int fallback_count = doc.at("summary").at("fallback_count").get<int>();
    std::vector<bool> fallback(outcomes.size(), false);
    for (int i = 0; i < fallback_count && i < static_cast<int>(fallback.size()); ++i)
        fallback[static_cast<size_t>(i)] = true;
    EvalReport report = aggregate(outcomes, fallback, gold_invalid);
    std::string text = render_report(report);
    write_file_atomic(paths_.report(), text);
    return text;
}

namespace {

std::string fmt(double v, int precision = 4) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(precision) << v;
    return ss.str();
}

std::string report_csv_columns() { return "n,ex_overall,ex_easy,ex_medium,ex_hard,ex_extra"; }

std::string report_csv_cells(const EvalReport& r) {
    std::string out = std::to_string(r.overall.count) + "," + fmt(r.overall.ex_pct(), 2);
    for (int d = 0; d < 4; ++d) out += "," + fmt(r.per_difficulty[d].ex_pct(), 2);
    return out;
}

} // namespace

void Pipeline::analyze() {
    auto census_csv = paths_.analysis_dir() / "score_census.csv";
    if (stage_done(census_csv)) return;
    require_artifact(paths_.eval(), "evaluate");
    auto scored = load_scored();
    auto cases = active_cases();
    auto preds = load_predictions();
    std::filesystem::create_directories(paths_.analysis_dir());

    LlmClient& llm = client();

    // Question-pair cosines. Stub examples (no question text) contribute 0.
    std::vector<std::vector<double>> cosines(cases.size());
    for (size_t i = 0; i < cases.size(); ++i) {
        cosines[i].resize(scored.per_case[i].size(), 0.0);
        for (size_t k = 0; k < scored.per_case[i].size(); ++k) {
            const auto& ex = scored.per_case[i][k].example;
            if (!ex.parse_ok || ex.question.empty()) continue;
            EmbeddingVector a = llm.embed(cases[i].question, config_.embedding_model);
            EmbeddingVector b = llm.embed(ex.question, config_.embedding_model);
            cosines[i][k] = cosine(a, b);
        }
    }

    std::vector<ScoredExample> all_scored;
    std::vector<double> all_cosines;
    for (size_t i = 0; i < cases.size(); ++i)
        for (size_t k = 0; k < scored.per_case[i].size(); ++k) {
            all_scored.push_back(scored.per_case[i][k]);
            all_cosines.push_back(cosines[i][k]);
        }
    auto cosine_of = [&](const ScoredExample& item) {
        size_t offset = static_cast<size_t>(&item - all_scored.data());
        return all_cosines[offset];
    };

    // Table-3-shaped census
    ScoreCensus census = score_census(all_scored, cosine_of, config_.census_thresholds);
    {
        std::string csv = "threshold,mean_cosine,retained,filtered_pct\n";
        for (const auto& row : census.rows)
            csv += fmt(row.threshold, 1) + "," + fmt(row.mean_cosine) + "," +
                   std::to_string(row.retained) + "," + fmt(row.filtered_pct, 2) + "\n";
        write_file_atomic(census_csv, csv);
    }

    // Per-case EX from the main run
    json eval_doc = json::parse(read_file(paths_.eval()));
    std::map<int, bool> ex_by_case;
    for (const auto& row : eval_doc.at("outcomes"))
        ex_by_case[row.at("case_id").get<int>()] = row.at("ex").get<bool>();

    // Similarity bins over (normalized cosine of each parsed example, its case's EX)
    std::vector<double> bin_cosines;
    std::vector<bool> bin_ex;
    for (size_t i = 0; i < cases.size(); ++i) {
        auto it = ex_by_case.find(cases[i].id);
        if (it == ex_by_case.end()) continue;
        for (size_t k = 0; k < scored.per_case[i].size(); ++k) {
            if (!scored.per_case[i][k].example.parse_ok) continue;
            bin_cosines.push_back(cosines[i][k]);
            bin_ex.push_back(it->second);
        }
    }
    std::vector<double> normalized = normalize_minmax(bin_cosines);
    std::vector<std::pair<double, bool>> pairs;
    for (size_t i = 0; i < normalized.size(); ++i) pairs.emplace_back(normalized[i], bin_ex[i]);
    SimilarityBins bins = similarity_ex_bins(pairs);
    {
        std::string csv = "bin_lo,bin_hi,population,mean_ex\n";
        std::string dat; // gnuplot-friendly
        for (size_t b = 0; b < bins.bins.size(); ++b) {
            if (!bins.bins[b]) continue;
            double lo = 0.1 * static_cast<double>(b), hi = lo + 0.1;
            csv += fmt(lo, 1) + "," + fmt(hi, 1) + "," + std::to_string(bins.bins[b]->population) +
                   "," + fmt(bins.bins[b]->mean_ex) + "\n";
            dat += fmt(lo + 0.05, 2) + " " + fmt(bins.bins[b]->mean_ex) + "\n";
        }
        write_file_atomic(paths_.analysis_dir() / "similarity_bins.csv", csv);
        write_file_atomic(paths_.analysis_dir() / "figure3_bins.dat", dat);
    }

    // Re-inference plumbing shared by the sweep and the weight grid
    StageOptions opts = stage_options(StageTag::inference);
    InferenceFlags flags{!config_.ablations.no_reasoning};
    ReinferFn reinfer = [&](int case_idx, const std::vector<ScoredExample>& selected,
                            bool fallback) {
        const TestCase& tc = cases[static_cast<size_t>(case_idx)];
        const SchemaDb* db = find_schema(schemas_, tc.db_id);
        std::vector<ScoredExample> selection = selected;
        apply_ablations(config_.ablations, selection, fallback);
        return infer_sql(tc, *db, selection, llm, opts, flags, fallback);
    };
    EvaluateFn evaluate_fn = [&](int case_idx,
                                 const Prediction& pred) -> std::optional<EvalOutcome> {
        const TestCase& tc = cases[static_cast<size_t>(case_idx)];
        const SchemaDb* db = find_schema(schemas_, tc.db_id);
        EvalOutcome o;
        o.test_case_id = tc.id;
        try {
            o.difficulty = classify_difficulty(tc.gold_sql);
            o.em = pred.ok && exact_match(pred.sql, tc.gold_sql);
            o.ex = pred.ok && execution_match(pred.sql, tc.gold_sql, *db,
                                              config_.exec_timeout_ms);
        } catch (const GoldInvalidError&) {
            return std::nullopt;
        }
        return o;
    };

    auto sweep = threshold_sweep(scored.per_case, config_.sweep_thresholds, config_.fallback_k,
                                 reinfer, evaluate_fn);
    {
        std::string csv = "theta," + report_csv_columns() + "\n";
        std::string dat;
        for (const auto& row : sweep) {
            csv += fmt(row.theta, 1) + "," + report_csv_cells(row.report) + "\n";
            dat += fmt(row.theta, 1) + " " + fmt(row.report.overall.ex_pct(), 2) + "\n";
        }
        write_file_atomic(paths_.analysis_dir() / "threshold_sweep.csv", csv);
        write_file_atomic(paths_.analysis_dir() / "figure4_sweep.dat", dat);
    }

    auto grid = weight_grid(scored.per_case, default_weight_grid(), config_.theta,
                            config_.fallback_k, reinfer, evaluate_fn);
    {
        std::string csv = "alpha,beta,gamma," + report_csv_columns() + "\n";
        for (const auto& row : grid)
            csv += fmt(row.weights.alpha, 2) + "," + fmt(row.weights.beta, 2) + "," +
                   fmt(row.weights.gamma, 2) + "," + report_csv_cells(row.report) + "\n";
        write_file_atomic(paths_.analysis_dir() / "weight_grid.csv", csv);
    }

    // Correlation between mean retained cosine and EX across the sweep
    ScoreCensus sweep_census = score_census(all_scored, cosine_of, config_.sweep_thresholds);
    std::string corr_text;
    try {
        std::vector<double> xs, ys;
        for (size_t i = 0; i < sweep.size(); ++i) {
            xs.push_back(sweep_census.rows[i].mean_cosine);
            ys.push_back(sweep[i].report.overall.ex_pct());
        }
        corr_text = fmt(correlation(xs, ys), 4);
    } catch (const UndefinedCorrelationError&) {
        corr_text = "n/a (zero variance)";
    }

    std::string md = "# Run analysis\n\n";
    md += "Generated examples: " + std::to_string(census.total) + "\n\n";
    md += "## Score census\n\n| threshold | mean cosine | retained | filtered % |\n";
    md += "|---|---|---|---|\n";
    for (const auto& row : census.rows)
        md += "| >= " + fmt(row.threshold, 0) + " | " + fmt(row.mean_cosine) + " | " +
              std::to_string(row.retained) + " | " + fmt(row.filtered_pct, 2) + " |\n";
    md += "\n## Threshold sweep (overall EX)\n\n| theta | EX |\n|---|---|\n";
    for (const auto& row : sweep)
        md += "| " + fmt(row.theta, 1) + " | " + fmt(row.report.overall.ex_pct(), 2) + " |\n";
    md += "\n## Weight grid (overall EX)\n\n| alpha | beta | gamma | EX |\n|---|---|---|---|\n";
    for (const auto& row : grid)
        md += "| " + fmt(row.weights.alpha, 2) + " | " + fmt(row.weights.beta, 2) + " | " +
              fmt(row.weights.gamma, 2) + " | " + fmt(row.report.overall.ex_pct(), 2) + " |\n";
    md += "\nCorrelation (mean retained cosine vs EX over the sweep): " + corr_text + "\n";
    write_file_atomic(paths_.analysis_dir() / "report.md", md);
}

int Pipeline::hard_failures() {
    int failures = 0;
    if (std::filesystem::exists(paths_.examples())) {
        std::map<int, int> parsed_per_case;
        for (const auto& row : read_jsonl(paths_.examples())) {
            parsed_per_case.try_emplace(row.at("case_id").get<int>(), 0);
            if (row.at("parse_ok").get<bool>()) ++parsed_per_case[row.at("case_id").get<int>()];
        }
        for (const auto& [case_id, parsed] : parsed_per_case)
            if (parsed == 0) ++failures;
    }
    if (std::filesystem::exists(paths_.predictions()))
        for (const auto& row : read_jsonl(paths_.predictions()))
            if (!row.at("ok").get<bool>()) ++failures;
    return failures;
}

int Pipeline::run_all() {
    ingest();
    generate();
    score();
    infer();
    evaluate();
    analyze();
    return hard_failures() > 0 ? 1 : 0;
}

int run_pipeline(const RunConfig& config, const std::filesystem::path& run_dir,
                 std::shared_ptr<Transport> transport_override) {
    Pipeline pipeline(config, run_dir, std::move(transport_override));
    return pipeline.run_all();
}

} // namespace selfsql
