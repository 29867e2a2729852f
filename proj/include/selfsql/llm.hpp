#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "selfsql/util.hpp"

namespace selfsql {

// Cache partitioning tag; one value per pipeline stage that talks to a model.
enum class StageTag { generation, scoring, inference };
const char* to_string(StageTag tag);

struct ChatRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 2048;
    StageTag stage_tag = StageTag::generation;
};

struct EmbeddingVector {
    std::vector<double> values;
    std::string model;
};

// dot(a,b) / (|a||b|), in [-1, 1]. Throws DegenerateVectorError on zero norm,
// Error on length mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

enum class BackendKind { http_api, mock_scripted, mock_hash, replay_cache };
BackendKind backend_kind_from_string(std::string_view s);
const char* to_string(BackendKind kind);

// Raw provider interface. Implementations must be safe for concurrent calls.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string complete(const ChatRequest& req) = 0;
    virtual EmbeddingVector embed(const std::string& text, const std::string& model) = 0;
};

// Deterministic mock: completions answered from exact-prompt and ordered
// substring rules; embeddings are hash-derived. Records every request so
// tests can inspect the prompts a pipeline actually issued.
class ScriptedTransport : public Transport {
public:
    explicit ScriptedTransport(std::uint64_t seed = 0) : seed_(seed) {}

    void add_exact(std::string prompt, std::string response);
    // First matching rule wins; optional stage restricts the rule to one stage tag.
    void add_pattern(std::string contains, std::string response,
                     std::optional<StageTag> stage = std::nullopt);
    void set_default(std::string response);

    // File format: {"exact": {prompt: response, ...},
    //               "patterns": [{"contains": s, "response": s, "stage": s?}, ...],
    //               "default": s?}
    static std::shared_ptr<ScriptedTransport> from_json_file(
        const std::filesystem::path& p, std::uint64_t seed = 0);

    std::string complete(const ChatRequest& req) override;
    EmbeddingVector embed(const std::string& text, const std::string& model) override;

    std::vector<ChatRequest> recorded() const;

private:
    struct Rule {
        std::string contains;
        std::string response;
        std::optional<StageTag> stage;
    };
    std::uint64_t seed_;
    std::map<std::string, std::string> exact_;
    std::vector<Rule> rules_;
    std::optional<std::string> default_;
    mutable std::mutex mu_;
    std::vector<ChatRequest> recorded_;
};

// Fully deterministic backend: completion text and embedding vector are both
// derived from a seeded hash of the input.
class HashTransport : public Transport {
public:
    explicit HashTransport(std::uint64_t seed = 0, int dim = 64) : seed_(seed), dim_(dim) {}
    std::string complete(const ChatRequest& req) override;
    EmbeddingVector embed(const std::string& text, const std::string& model) override;

private:
    std::uint64_t seed_;
    int dim_;
};

// Deterministic unit vector from a seeded hash of the text (Box-Muller over
// mt19937_64 so the bytes do not depend on the platform's distribution impl).
EmbeddingVector hash_embedding(const std::string& text, const std::string& model,
                               std::uint64_t seed, int dim = 64);

// OpenAI-compatible chat/embeddings client. base_url like
// "https://api.openai.com/v1"; the bearer token is read from the environment
// variable named by api_key_env.
class HttpTransport : public Transport {
public:
    struct Options {
        std::string base_url;
        std::string api_key_env = "OPENAI_API_KEY";
        int timeout_ms = 60000;
    };
    explicit HttpTransport(Options opts);
    std::string complete(const ChatRequest& req) override;
    EmbeddingVector embed(const std::string& text, const std::string& model) override;

private:
    json post(const std::string& path, const json& body);
    Options opts_;
    std::string host_;        // scheme://host[:port]
    std::string path_prefix_; // e.g. "/v1"
};

// Append-only JSONL store of model responses, content-addressed by
// hash(model, prompt, temperature, stage_tag). Writes are serialized.
class ResponseCache {
public:
    // When create is false the file must already exist (replay mode).
    ResponseCache(std::filesystem::path file, bool create);

    static std::string key_of(const ChatRequest& req);
    static std::string embed_key_of(const std::string& text, const std::string& model);

    std::optional<std::string> lookup(const std::string& key) const;
    void store(const std::string& key, StageTag tag, const std::string& model,
               const std::string& prompt_sha, const std::string& response);

    size_t size() const;

private:
    std::filesystem::path file_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> entries_;
};

struct RetryPolicy {
    int max_attempts = 3;
    int initial_backoff_ms = 250;
};

// Minimum-interval limiter: at most requests_per_minute transport calls,
// evenly spaced. 0 disables limiting.
struct RateLimit {
    int requests_per_minute = 0;
};

// Front door used by every pipeline stage. Owns read-through caching, retry
// with exponential backoff, rate limiting, and call accounting. Safe for
// concurrent use.
class LlmClient {
public:
    struct Config {
        BackendKind kind = BackendKind::mock_hash;
        std::shared_ptr<Transport> transport; // required unless replay_cache
        std::optional<std::filesystem::path> cache_file;
        RetryPolicy retry;
        RateLimit rate;
    };
    explicit LlmClient(Config config);

    std::string complete(const ChatRequest& req);
    EmbeddingVector embed(const std::string& text, const std::string& model);

    // Variant that skips the cache read (still writes); used for judge retries
    // where serving the identical cached reply would defeat the retry.
    std::string complete_nocache_read(const ChatRequest& req);

    std::uint64_t transport_calls() const { return transport_calls_.load(); }
    std::uint64_t cache_hits() const { return cache_hits_.load(); }

private:
    std::string complete_impl(const ChatRequest& req, bool read_cache);
    std::string call_with_retry(const ChatRequest& req);
    void rate_wait();

    Config config_;
    std::unique_ptr<ResponseCache> cache_;
    std::atomic<std::uint64_t> transport_calls_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
    std::mutex rate_mu_;
    std::chrono::steady_clock::time_point next_allowed_{};
};

// Model/temperature bundle for one pipeline stage.
struct StageOptions {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 2048;
    StageTag tag = StageTag::generation;
};

} // namespace selfsql
