#pragma once

#include <string>
#include <vector>

#include "selfsql/util.hpp"

namespace selfsql {

enum class PromptStage { example_generation, example_filtering, final_inference };

struct PromptTemplate {
    PromptStage stage;
    std::string body; // contains {slot} placeholders, LF newlines only
    std::vector<std::string> slot_names;
};

const PromptTemplate& generation_template();
const PromptTemplate& filtering_template();
const PromptTemplate& inference_template();

// Single-pass slot substitution; values are inserted verbatim and never
// re-scanned, so a value containing "{question}" stays literal.
std::string fill_template(const PromptTemplate& tmpl,
                          const std::vector<std::pair<std::string, std::string>>& slots);

// schema_linking may be empty (schema-linking ablation); the rest must be
// non-empty or a TemplateError names the offending slot.
std::string build_generation_prompt(const std::string& schema_linking, const std::string& tables,
                                    const std::string& foreign_keys, const std::string& question);

std::string build_filtering_prompt(const std::string& test_question,
                                   const std::string& similar_question,
                                   const std::string& reasoning_path);

// filtered_examples may be empty; the defined fallback renders "(no examples)".
std::string build_inference_prompt(const std::string& tables, const std::string& foreign_keys,
                                   const std::string& question,
                                   const std::string& filtered_examples);

// One selected example as it appears in the final-inference prompt.
struct ExampleForPrompt {
    std::string question;
    std::string sql;
    std::string reasoning;
    double rel = 0.0;
};

// Serializes examples as numbered blocks in descending rel order (stable on
// ties). include_reasoning=false drops the Reasoning line (ablation).
std::string format_filtered_examples(std::vector<ExampleForPrompt> examples,
                                     bool include_reasoning = true);

inline constexpr const char* kNoExamplesSentinel = "(no examples)";

} // namespace selfsql
