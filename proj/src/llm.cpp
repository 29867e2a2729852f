#include "selfsql/llm.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace selfsql {

const char* to_string(StageTag tag) {
    switch (tag) {
        case StageTag::generation: return "generation";
        case StageTag::scoring: return "scoring";
        case StageTag::inference: return "inference";
    }
    return "unknown";
}

static std::optional<StageTag> stage_from_string(std::string_view s) {
    if (s == "generation") return StageTag::generation;
    if (s == "scoring") return StageTag::scoring;
    if (s == "inference") return StageTag::inference;
    return std::nullopt;
}

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "http" || s == "http_api") return BackendKind::http_api;
    if (s == "scripted" || s == "mock_scripted") return BackendKind::mock_scripted;
    if (s == "hash" || s == "mock_hash") return BackendKind::mock_hash;
    if (s == "replay" || s == "replay_cache") return BackendKind::replay_cache;
    throw ConfigError("unknown backend kind: " + std::string(s));
}

const char* to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::http_api: return "http_api";
        case BackendKind::mock_scripted: return "mock_scripted";
        case BackendKind::mock_hash: return "mock_hash";
        case BackendKind::replay_cache: return "replay_cache";
    }
    return "unknown";
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.values.size() != b.values.size())
        throw Error("cosine: length mismatch (" + std::to_string(a.values.size()) + " vs " +
                    std::to_string(b.values.size()) + ")");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw DegenerateVectorError("cosine: zero-norm vector");
    double v = dot / (std::sqrt(na) * std::sqrt(nb));
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    return v;
}

// ---------------------------------------------------------------------------
// ScriptedTransport

void ScriptedTransport::add_exact(std::string prompt, std::string response) {
    std::lock_guard<std::mutex> lock(mu_);
    exact_[std::move(prompt)] = std::move(response);
}

void ScriptedTransport::add_pattern(std::string contains, std::string response,
                                    std::optional<StageTag> stage) {
    std::lock_guard<std::mutex> lock(mu_);
    rules_.push_back(Rule{std::move(contains), std::move(response), stage});
}

void ScriptedTransport::set_default(std::string response) {
    std::lock_guard<std::mutex> lock(mu_);
    default_ = std::move(response);
}

std::shared_ptr<ScriptedTransport> ScriptedTransport::from_json_file(
    const std::filesystem::path& p, std::uint64_t seed) {
    json doc;
    try {
        doc = json::parse(read_file(p));
    } catch (const json::parse_error& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
    auto t = std::make_shared<ScriptedTransport>(seed);
    if (doc.contains("exact"))
        for (auto& [prompt, response] : doc["exact"].items())
            t->add_exact(prompt, response.get<std::string>());
    if (doc.contains("patterns"))
        for (const auto& rule : doc["patterns"]) {
            std::optional<StageTag> stage;
            if (rule.contains("stage")) {
                stage = stage_from_string(rule["stage"].get<std::string>());
                if (!stage)
                    throw ConfigError(p.string() + ": bad stage in scripted rule: " +
                                      rule["stage"].get<std::string>());
            }
            t->add_pattern(rule["contains"].get<std::string>(),
                           rule["response"].get<std::string>(), stage);
        }
    if (doc.contains("default")) t->set_default(doc["default"].get<std::string>());
    return t;
}

std::string ScriptedTransport::complete(const ChatRequest& req) {
    std::lock_guard<std::mutex> lock(mu_);
    recorded_.push_back(req);
    if (auto it = exact_.find(req.prompt); it != exact_.end()) return it->second;
    for (const auto& rule : rules_) {
        if (rule.stage && *rule.stage != req.stage_tag) continue;
        if (req.prompt.find(rule.contains) != std::string::npos) return rule.response;
    }
    if (default_) return *default_;
    throw TransportError("scripted backend: no response for prompt (stage " +
                         std::string(to_string(req.stage_tag)) + ")");
}

EmbeddingVector ScriptedTransport::embed(const std::string& text, const std::string& model) {
    return hash_embedding(text, model, seed_);
}

std::vector<ChatRequest> ScriptedTransport::recorded() const {
    std::lock_guard<std::mutex> lock(mu_);
    return recorded_;
}

// ---------------------------------------------------------------------------
// HashTransport

std::string HashTransport::complete(const ChatRequest& req) {
    return "mock-response " + sha256_hex(req.prompt).substr(0, 12);
}

EmbeddingVector HashTransport::embed(const std::string& text, const std::string& model) {
    return hash_embedding(text, model, seed_, dim_);
}

EmbeddingVector hash_embedding(const std::string& text, const std::string& model,
                               std::uint64_t seed, int dim) {
    std::mt19937_64 rng(fnv1a64(text) ^ fnv1a64(model) ^ (seed * 0x9e3779b97f4a7c15ull));
    auto uniform = [&rng] {
        // 53-bit mantissa in [0, 1)
        return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    };
    EmbeddingVector v;
    v.model = model;
    v.values.resize(static_cast<size_t>(dim));
    for (int i = 0; i < dim; i += 2) {
        double u1 = uniform(), u2 = uniform();
        if (u1 <= 0.0) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        v.values[static_cast<size_t>(i)] = r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < dim) v.values[static_cast<size_t>(i) + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    double norm = 0.0;
    for (double x : v.values) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) { // astronomically unlikely; keep the vector valid
        v.values[0] = 1.0;
        norm = 1.0;
    }
    for (double& x : v.values) x /= norm;
    return v;
}

// ---------------------------------------------------------------------------
// HttpTransport

HttpTransport::HttpTransport(Options opts) : opts_(std::move(opts)) {
    const std::string& url = opts_.base_url;
    if (url.empty()) throw ConfigError("http backend requires a base URL");
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("base URL must include scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        host_ = url;
        path_prefix_.clear();
    } else {
        host_ = url.substr(0, path_start);
        path_prefix_ = url.substr(path_start);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
}

json HttpTransport::post(const std::string& path, const json& body) {
    httplib::Client cli(host_);
    cli.set_connection_timeout(std::chrono::milliseconds(opts_.timeout_ms));
    cli.set_read_timeout(std::chrono::milliseconds(opts_.timeout_ms));
    httplib::Headers headers;
    if (!opts_.api_key_env.empty()) {
        const char* key = std::getenv(opts_.api_key_env.c_str());
        if (!key || !*key)
            throw ConfigError("environment variable " + opts_.api_key_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = cli.Post(path_prefix_ + path, headers, body.dump(), "application/json");
    if (!res)
        throw TransportError("http request failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403)
        throw ConfigError("authentication failed (" + std::to_string(res->status) + "): " +
                          res->body);
    if (res->status != 200)
        throw TransportError("http status " + std::to_string(res->status) + ": " + res->body);
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("bad response body: ") + e.what());
    }
}

std::string HttpTransport::complete(const ChatRequest& req) {
    json body = {
        {"model", req.model},
        {"messages", json::array({json{{"role", "user"}, {"content", req.prompt}}})},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
    };
    json res = post("/chat/completions", body);
    try {
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected completion payload: ") + e.what());
    }
}

EmbeddingVector HttpTransport::embed(const std::string& text, const std::string& model) {
    json res = post("/embeddings", json{{"model", model}, {"input", text}});
    try {
        EmbeddingVector v;
        v.model = model;
        for (const auto& x : res.at("data").at(0).at("embedding")) v.values.push_back(x.get<double>());
        return v;
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected embedding payload: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// ResponseCache

ResponseCache::ResponseCache(std::filesystem::path file, bool create) : file_(std::move(file)) {
    if (std::filesystem::exists(file_)) {
        for (const auto& rec : read_jsonl(file_))
            entries_[rec.at("key").get<std::string>()] = rec.at("response").get<std::string>();
    } else if (!create) {
        throw ConfigError("cache file does not exist: " + file_.string());
    }
}

static std::string format_temperature(double t) {
    std::ostringstream ss;
    ss.precision(6);
    ss << t;
    return ss.str();
}

std::string ResponseCache::key_of(const ChatRequest& req) {
    std::string material = req.model;
    material += '\x1f';
    material += req.prompt;
    material += '\x1f';
    material += format_temperature(req.temperature);
    material += '\x1f';
    material += to_string(req.stage_tag);
    return sha256_hex(material);
}

std::string ResponseCache::embed_key_of(const std::string& text, const std::string& model) {
    std::string material = model;
    material += '\x1f';
    material += text;
    material += "\x1f""embedding";
    return sha256_hex(material);
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::store(const std::string& key, StageTag tag, const std::string& model,
                          const std::string& prompt_sha, const std::string& response) {
    std::lock_guard<std::mutex> lock(mu_);
    entries_[key] = response;
    json rec = {
        {"key", key},
        {"stage_tag", to_string(tag)},
        {"model", model},
        {"prompt_sha256", prompt_sha},
        {"response", response},
    };
    std::ofstream out(file_, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to cache: " + file_.string());
    out << rec.dump() << '\n';
}

size_t ResponseCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// LlmClient

LlmClient::LlmClient(Config config) : config_(std::move(config)) {
    bool replay = config_.kind == BackendKind::replay_cache;
    if (!replay && !config_.transport)
        throw ConfigError("backend " + std::string(to_string(config_.kind)) +
                          " requires a transport");
    if (config_.cache_file)
        cache_ = std::make_unique<ResponseCache>(*config_.cache_file, /*create=*/!replay);
    else if (replay)
        throw ConfigError("replay_cache backend requires a cache file");
}

void LlmClient::rate_wait() {
    if (config_.rate.requests_per_minute <= 0) return;
    auto interval = std::chrono::milliseconds(60000 / config_.rate.requests_per_minute);
    std::chrono::steady_clock::time_point wait_until;
    {
        std::lock_guard<std::mutex> lock(rate_mu_);
        auto now = std::chrono::steady_clock::now();
        if (next_allowed_ < now) next_allowed_ = now;
        wait_until = next_allowed_;
        next_allowed_ += interval;
    }
    std::this_thread::sleep_until(wait_until);
}

std::string LlmClient::call_with_retry(const ChatRequest& req) {
    int backoff_ms = config_.retry.initial_backoff_ms;
    for (int attempt = 1;; ++attempt) {
        try {
            rate_wait();
            ++transport_calls_;
            return config_.transport->complete(req);
        } catch (const TransportError&) {
            if (attempt >= config_.retry.max_attempts) throw;
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
    }
}

std::string LlmClient::complete_impl(const ChatRequest& req, bool read_cache) {
    if (req.prompt.empty()) throw Error("complete: empty prompt");
    if (!std::isfinite(req.temperature)) throw Error("complete: non-finite temperature");
    std::string key = ResponseCache::key_of(req);
    if (config_.kind == BackendKind::replay_cache) {
        if (auto hit = cache_->lookup(key)) {
            ++cache_hits_;
            return *hit;
        }
        throw CacheMissError("replay cache miss for key " + key + " (stage " +
                             to_string(req.stage_tag) + ")");
    }
    if (read_cache && cache_) {
        if (auto hit = cache_->lookup(key)) {
            ++cache_hits_;
            return *hit;
        }
    }
    std::string response = call_with_retry(req);
    if (cache_)
        cache_->store(key, req.stage_tag, req.model, sha256_hex(req.prompt), response);
    return response;
}

std::string LlmClient::complete(const ChatRequest& req) { return complete_impl(req, true); }

std::string LlmClient::complete_nocache_read(const ChatRequest& req) {
    return complete_impl(req, false);
}

EmbeddingVector LlmClient::embed(const std::string& text, const std::string& model) {
    if (text.empty()) throw Error("embed: empty text");
    std::string key = ResponseCache::embed_key_of(text, model);
    if (config_.kind == BackendKind::replay_cache) {
        if (auto hit = cache_->lookup(key)) {
            ++cache_hits_;
            EmbeddingVector v;
            v.model = model;
            for (const auto& x : json::parse(*hit)) v.values.push_back(x.get<double>());
            return v;
        }
        throw CacheMissError("replay cache miss for embedding key " + key);
    }
    if (cache_) {
        if (auto hit = cache_->lookup(key)) {
            ++cache_hits_;
            EmbeddingVector v;
            v.model = model;
            for (const auto& x : json::parse(*hit)) v.values.push_back(x.get<double>());
            return v;
        }
    }
    rate_wait();
    ++transport_calls_;
    EmbeddingVector v = config_.transport->embed(text, model);
    for (double x : v.values)
        if (!std::isfinite(x)) throw TransportError("embedding contains non-finite value");
    if (cache_) {
        json arr = json::array();
        for (double x : v.values) arr.push_back(x);
        cache_->store(key, StageTag::scoring, model, sha256_hex(text), arr.dump());
    }
    return v;
}

} // namespace selfsql
