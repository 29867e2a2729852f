#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cmath>
#include <random>
#include <thread>

#include "selfsql/llm.hpp"
#include "testutil.hpp"

using namespace selfsql;

namespace {

ChatRequest req(const std::string& prompt, StageTag tag = StageTag::generation) {
    return ChatRequest{"test-model", prompt, 0.0, 256, tag};
}

LlmClient scripted_client(std::shared_ptr<ScriptedTransport> transport,
                          std::optional<std::filesystem::path> cache = std::nullopt) {
    LlmClient::Config cc;
    cc.kind = BackendKind::mock_scripted;
    cc.transport = std::move(transport);
    cc.cache_file = std::move(cache);
    return LlmClient(std::move(cc));
}

} // namespace

TEST_CASE("scripted backend echoes preloaded responses") {
    auto transport = std::make_shared<ScriptedTransport>();
    transport->add_exact("promptA", "SELECT 1");
    auto client = scripted_client(transport);
    CHECK(client.complete(req("promptA")) == "SELECT 1");
    CHECK_THROWS_AS(client.complete(req("unknown")), TransportError);
}

TEST_CASE("scripted pattern rules respect stage and order") {
    auto transport = std::make_shared<ScriptedTransport>();
    transport->add_pattern("needle", "first", StageTag::scoring);
    transport->add_pattern("needle", "second");
    auto client = scripted_client(transport);
    CHECK(client.complete(req("a needle b", StageTag::scoring)) == "first");
    CHECK(client.complete(req("a needle b", StageTag::inference)) == "second");
    CHECK(transport->recorded().size() == 2);
}

TEST_CASE("second identical request is served from the cache") {
    testutil::TmpDir tmp;
    auto transport = std::make_shared<ScriptedTransport>();
    transport->set_default("hello");
    auto client = scripted_client(transport, tmp.path / "cache.jsonl");
    CHECK(client.complete(req("p1")) == "hello");
    CHECK(client.transport_calls() == 1);
    CHECK(client.complete(req("p1")) == "hello");
    CHECK(client.transport_calls() == 1); // zero extra backend calls
    CHECK(client.cache_hits() == 1);
    // distinct stage tag -> distinct cache key
    CHECK(client.complete(req("p1", StageTag::scoring)) == "hello");
    CHECK(client.transport_calls() == 2);
}

TEST_CASE("replay backend serves recorded responses and fails on misses") {
    testutil::TmpDir tmp;
    auto cache_file = tmp.path / "cache.jsonl";
    {
        auto transport = std::make_shared<ScriptedTransport>();
        transport->set_default("recorded-answer");
        auto recorder = scripted_client(transport, cache_file);
        CHECK(recorder.complete(req("p1")) == "recorded-answer");
    }
    LlmClient::Config cc;
    cc.kind = BackendKind::replay_cache;
    cc.cache_file = cache_file;
    LlmClient replay(std::move(cc));
    CHECK(replay.complete(req("p1")) == "recorded-answer");
    CHECK(replay.transport_calls() == 0);
    CHECK_THROWS_AS(replay.complete(req("never-recorded")), CacheMissError);
}

TEST_CASE("replay backend requires an existing cache file") {
    LlmClient::Config cc;
    cc.kind = BackendKind::replay_cache;
    cc.cache_file = "/nonexistent/cache.jsonl";
    CHECK_THROWS_AS(LlmClient(std::move(cc)), ConfigError);
}

TEST_CASE("cache file format carries key, stage, model and prompt hash") {
    testutil::TmpDir tmp;
    auto cache_file = tmp.path / "cache.jsonl";
    auto transport = std::make_shared<ScriptedTransport>();
    transport->set_default("resp");
    auto client = scripted_client(transport, cache_file);
    client.complete(req("the prompt"));
    auto records = read_jsonl(cache_file);
    REQUIRE(records.size() == 1);
    CHECK(records[0]["stage_tag"] == "generation");
    CHECK(records[0]["model"] == "test-model");
    CHECK(records[0]["prompt_sha256"] == sha256_hex("the prompt"));
    CHECK(records[0]["response"] == "resp");
    CHECK(records[0]["key"] == ResponseCache::key_of(req("the prompt")));
}

TEST_CASE("hash embeddings are deterministic unit vectors") {
    HashTransport transport(7);
    auto a = transport.embed("abc", "m");
    auto b = transport.embed("abc", "m");
    REQUIRE(a.values.size() == 64);
    CHECK(a.values == b.values); // bit-exact
    double norm = 0;
    for (double v : a.values) norm += v * v;
    CHECK(std::fabs(std::sqrt(norm) - 1.0) < 1e-9);
    auto c = transport.embed("different text", "m");
    double cos = cosine(a, c);
    CHECK(cos >= -1.0);
    CHECK(cos <= 1.0);
    CHECK(a.values != c.values);
}

TEST_CASE("cosine closed forms") {
    EmbeddingVector v{{0.3, -0.7, 2.0}, "m"};
    CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-12));
    EmbeddingVector e1{{1, 0}, "m"}, e2{{0, 1}, "m"};
    CHECK(cosine(e1, e2) == doctest::Approx(0.0));
    EmbeddingVector d{{1, 1}, "m"};
    CHECK(cosine(d, e1) == doctest::Approx(0.7071).epsilon(1e-4)); // 1/sqrt(2)
    EmbeddingVector zero{{0, 0}, "m"};
    CHECK_THROWS_AS(cosine(zero, e1), DegenerateVectorError);
    EmbeddingVector mismatched{{1.0, 2.0, 3.0}, "m"};
    CHECK_THROWS_AS(cosine(e1, mismatched), Error);
}

TEST_CASE("cosine symmetry and scale invariance") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int trial = 0; trial < 100; ++trial) {
        EmbeddingVector a, b;
        a.model = b.model = "m";
        for (int i = 0; i < 16; ++i) {
            a.values.push_back(dist(rng));
            b.values.push_back(dist(rng));
        }
        double k = scale(rng);
        EmbeddingVector ka = a;
        for (double& v : ka.values) v *= k;
        CHECK(cosine(a, b) == doctest::Approx(cosine(b, a)).epsilon(1e-12));
        CHECK(cosine(ka, b) == doctest::Approx(cosine(a, b)).epsilon(1e-9));
    }
}

TEST_CASE("embeddings are cached and replayable") {
    testutil::TmpDir tmp;
    auto cache_file = tmp.path / "cache.jsonl";
    std::vector<double> recorded;
    {
        LlmClient::Config cc;
        cc.kind = BackendKind::mock_hash;
        cc.transport = std::make_shared<HashTransport>(3);
        cc.cache_file = cache_file;
        LlmClient client(std::move(cc));
        recorded = client.embed("hello", "m").values;
        CHECK(client.embed("hello", "m").values == recorded); // cache hit
        CHECK(client.transport_calls() == 1);
    }
    LlmClient::Config cc;
    cc.kind = BackendKind::replay_cache;
    cc.cache_file = cache_file;
    LlmClient replay(std::move(cc));
    CHECK(replay.embed("hello", "m").values == recorded);
    CHECK_THROWS_AS(replay.embed("other", "m"), CacheMissError);
}

TEST_CASE("http transport speaks the OpenAI JSON protocol") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request& r, httplib::Response& res) {
        auto body = json::parse(r.body);
        REQUIRE(body["messages"][0]["role"] == "user");
        if (r.get_header_value("Authorization") != "Bearer sekrit") {
            res.status = 401;
            res.set_content("{}", "application/json");
            return;
        }
        json reply = {{"choices",
                       json::array({json{{"message",
                                          {{"role", "assistant"},
                                           {"content", "pong: " +
                                                           body["messages"][0]["content"]
                                                               .get<std::string>()}}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
        json reply = {{"data", json::array({json{{"embedding", {0.6, 0.8}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("SELFSQL_TEST_KEY", "sekrit", 1);
    HttpTransport transport({"http://127.0.0.1:" + std::to_string(port) + "/v1",
                             "SELFSQL_TEST_KEY", 5000});
    CHECK(transport.complete(req("ping")) == "pong: ping");
    auto emb = transport.embed("x", "m");
    REQUIRE(emb.values.size() == 2);
    CHECK(emb.values[0] == doctest::Approx(0.6));

    setenv("SELFSQL_TEST_KEY", "wrong", 1);
    CHECK_THROWS_AS(transport.complete(req("ping")), ConfigError); // auth -> config error

    server.stop();
    server_thread.join();
}

TEST_CASE("transient http failures are retried with backoff") {
    std::atomic<int> attempts{0};
    httplib::Server server;
    server.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        if (attempts.fetch_add(1) < 2) {
            res.status = 503;
            res.set_content("busy", "text/plain");
            return;
        }
        json reply = {{"choices",
                       json::array({json{{"message", {{"content", "ok"}}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    LlmClient::Config cc;
    cc.kind = BackendKind::http_api;
    cc.transport = std::make_shared<HttpTransport>(HttpTransport::Options{
        "http://127.0.0.1:" + std::to_string(port), "", 5000});
    cc.retry.max_attempts = 3;
    cc.retry.initial_backoff_ms = 1;
    LlmClient client(std::move(cc));
    CHECK(client.complete(req("p")) == "ok");
    CHECK(attempts.load() == 3);
    CHECK(client.transport_calls() == 3);

    server.stop();
    server_thread.join();
}
