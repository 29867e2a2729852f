#pragma once

#include <filesystem>

#include "selfsql/pipeline.hpp"

namespace selfsql {

// Materializes a self-contained 5-case demo dataset: Spider-format
// tables.json and dev.json, a SQLite database, and a scripted-responses
// file covering every prompt the pipeline issues. Fully offline and
// deterministic; used by the test suites and the `demo-data` subcommand.
void write_demo_dataset(const std::filesystem::path& dir);

// RunConfig preconfigured against a directory produced by write_demo_dataset.
RunConfig demo_run_config(const std::filesystem::path& dir);

} // namespace selfsql
