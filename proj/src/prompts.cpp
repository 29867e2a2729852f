#include "selfsql/prompts.hpp"

#include <algorithm>

namespace selfsql {

// Template texts are frozen; a checksum test pins the exact bytes. Edit only
// together with that test.

namespace {

const char* kGenerationBody =
    R"(You are a powerful text-to-SQL reasoner. Your task is to generate ten similar questions, ten SQL queries, and ten reasoning paths for how the SQL queries are derived.
To ensure high-quality examples, focus on the following three key aspects:

**Semantic Similarity**
Ensure that all generated questions have the same underlying meaning as the test question. Variations in wording, synonyms, and phrasing are allowed as long as they preserve the intended query objective.
Avoid introducing ambiguity or additional constraints that alter the intent.
**Structural Similarity**
While key terms (such as table names, column names, and numerical values) may vary, their functional roles and relationships should remain intact.
**Reasoning Path Similarity**
The logical reasoning required to construct the SQL query should remain consistent across examples.Clearly outline each step, including how key conditions are identified and mapped to SQL operations.Maintain coherence in how joins, aggregations, filters, and sorting operations are applied.

Do not explain me about the result and just give me ten examples.

## Schema linking: {schema_linking}
## Tables: {tables}
## Foreign keys: {foreign_keys}
## Question: {question}

## Similar Question:
## SQL query:
## Reasoning Path:
)";

const char* kFilteringBody =
    R"(You are a powerful text-to-SQL reasoner. Given a test question and a set of examples, compute the relevance score for each example based on the following criteria. Do not explain me about the answer, just give me scores.

**Semantic Similarity of Questions
Compare the overall meaning of the test question and the example question.
Higher scores should be assigned if the two questions have the same intent, even if they are phrased differently.
Consider synonyms, paraphrasing, and minor wording variations that do not alter the fundamental meaning.
Assign lower scores if the test and example questions focus on different database operations (e.g., aggregation vs. filtering) or require fundamentally different types of information.(up to 10 points).
10: Almost identical meaning and intent.
7–9: Minor paraphrasing but highly relevant.
4–6: Some overlap but different focus.
1–3: Mostly unrelated meaning.
0: Completely different intent.

**Keyword & Structural Similarity
Evaluate the structural alignment between the test question and the example question by analyzing how key elements (such as entities, attributes, and numerical values) are connected. Even if individual nouns, verbs, or numbers differ, the overall relational structure should be considered. Focus on whether the dependencies between key components (e.g., how entities relate to each other in the database) remain consistent.(up to 10 points).
10: Nearly identical structural relationships and dependencies.
7–9: Mostly similar structure, with minor differences in entity connections.
4–6: Some overlap, but noticeable differences in how key components interact.
1–3: Few shared structural relationships, making alignment weak.
0: No meaningful structural similarities.

**Reasoning Path Similarity
Evaluate whether the logical steps needed to answer the example question align with those required for the test question. Consider whether the database operations (e.g., filtering, aggregation, joins, subqueries) are similar.A high score should be given if the example follows the same logical sequence to derive the SQL query.Lower scores should be assigned if the reasoning process differs significantly, even if the questions seem similar at a surface level.(up to 10  points).
10: Exact reasoning process to get right SQL query.
7–9: Mostly similar but with minor differences.
4–6: Some alignment but different key steps.
1–3: Largely different reasoning.
0: Completely unrelated logic.

## Question: {question}
## Similar Question: {similar_question}
## Reasoning Path: {reasoning_path}
## Relevance score:
)";

const char* kInferenceBody =
    R"(You are a powerful text-to-SQL reasoner. Your task is to generate the final SQL query using a set of selected examples that provide guidance on query construction. Utilizing Selected Examples. Do not explain me about the answer, just give me SQL query.
A set of chosen examples, each containing:
A natural language question similar to the test question
A corresponding SQL query
A detailed reasoning path explaining how the SQL query was derived
These examples are selected based on three key criteria:

**Semantic Similarity of Questions**
The selected examples closely match the intent of the test question.
Variations in wording do not change the meaning.

**Structural Similarity**
The database schema elements (tables, columns, joins) used in the examples align with the test question.
The SQL syntax and structure are relevant to the expected query.

**Reasoning Path Similarity**
The logical steps used to construct the SQL query align with the reasoning required for the test question.
Key transformations, filtering conditions, and aggregation logic are similar.

**Final SQL Query Construction**
Using the selected examples, generate the final SQL query that correctly retrieves the desired result for the given test question.
Follow the reasoning patterns observed in the examples.
Maintain correct table joins, filters, aggregations, and conditions based on schema constraints. Ensure that the final query accurately represents the intent of the test question while leveraging the insights from the selected examples. Now, generate the final SQL query for the given test question:

##Tables: {tables}
##Foreign_keys: {foreign_keys}
##Question: {question}
##Filtered_example: {filtered_examples}
)";

PromptTemplate make_template(PromptStage stage, const char* body,
                             std::vector<std::string> slots) {
    return PromptTemplate{stage, body, std::move(slots)};
}

} // namespace

const PromptTemplate& generation_template() {
    static const PromptTemplate t =
        make_template(PromptStage::example_generation, kGenerationBody,
                      {"schema_linking", "tables", "foreign_keys", "question"});
    return t;
}

const PromptTemplate& filtering_template() {
    static const PromptTemplate t =
        make_template(PromptStage::example_filtering, kFilteringBody,
                      {"question", "similar_question", "reasoning_path"});
    return t;
}

const PromptTemplate& inference_template() {
    static const PromptTemplate t =
        make_template(PromptStage::final_inference, kInferenceBody,
                      {"tables", "foreign_keys", "question", "filtered_examples"});
    return t;
}

std::string fill_template(const PromptTemplate& tmpl,
                          const std::vector<std::pair<std::string, std::string>>& slots) {
    std::string out;
    out.reserve(tmpl.body.size());
    const std::string& body = tmpl.body;
    size_t pos = 0;
    while (pos < body.size()) {
        size_t open = body.find('{', pos);
        if (open == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        size_t close = body.find('}', open);
        if (close == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        std::string name = body.substr(open + 1, close - open - 1);
        auto it = std::find_if(slots.begin(), slots.end(),
                               [&](const auto& kv) { return kv.first == name; });
        if (it == slots.end())
            throw TemplateError("template has no value for slot {" + name + "}");
        out.append(body, pos, open - pos);
        out += it->second;
        pos = close + 1;
    }
    return out;
}

namespace {

void require_slot(const std::string& value, const char* name) {
    if (trim(value).empty())
        throw TemplateError(std::string("missing mandatory slot: ") + name);
}

} // namespace

std::string build_generation_prompt(const std::string& schema_linking, const std::string& tables,
                                    const std::string& foreign_keys,
                                    const std::string& question) {
    require_slot(tables, "tables");
    require_slot(foreign_keys, "foreign_keys");
    require_slot(question, "question");
    return fill_template(generation_template(), {{"schema_linking", schema_linking},
                                                 {"tables", tables},
                                                 {"foreign_keys", foreign_keys},
                                                 {"question", question}});
}

std::string build_filtering_prompt(const std::string& test_question,
                                   const std::string& similar_question,
                                   const std::string& reasoning_path) {
    require_slot(test_question, "question");
    require_slot(similar_question, "similar_question");
    require_slot(reasoning_path, "reasoning_path");
    return fill_template(filtering_template(), {{"question", test_question},
                                                {"similar_question", similar_question},
                                                {"reasoning_path", reasoning_path}});
}

std::string build_inference_prompt(const std::string& tables, const std::string& foreign_keys,
                                   const std::string& question,
                                   const std::string& filtered_examples) {
    require_slot(tables, "tables");
    require_slot(foreign_keys, "foreign_keys");
    require_slot(question, "question");
    std::string examples = filtered_examples.empty() ? kNoExamplesSentinel : filtered_examples;
    return fill_template(inference_template(), {{"tables", tables},
                                                {"foreign_keys", foreign_keys},
                                                {"question", question},
                                                {"filtered_examples", examples}});
}

std::string format_filtered_examples(std::vector<ExampleForPrompt> examples,
                                     bool include_reasoning) {
    if (examples.empty()) return "";
    std::stable_sort(examples.begin(), examples.end(),
                     [](const auto& a, const auto& b) { return a.rel > b.rel; });
    std::string out;
    for (size_t i = 0; i < examples.size(); ++i) {
        if (i) out += "\n";
        out += "Example " + std::to_string(i + 1) + ":\n";
        out += "Question: " + examples[i].question + "\n";
        out += "SQL: " + examples[i].sql + "\n";
        if (include_reasoning) out += "Reasoning: " + examples[i].reasoning + "\n";
    }
    return out;
}

} // namespace selfsql
