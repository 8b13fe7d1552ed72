#include <doctest.h>

#include <random>

#include "harness/llm.hpp"
#include "harness/stub_transport.hpp"
#include "support.hpp"

using namespace harness;
using testsupport::FnTransport;
using testsupport::TempDir;

namespace {

ChatRequest stub_request(const std::string& model, const std::string& text,
                         std::uint64_t seed = 0) {
    ChatRequest req;
    req.model_id = model;
    req.messages.push_back({Role::user, text});
    req.temperature = 0.0;
    req.run_seed = seed;
    return req;
}

RetryPolicy no_backoff(int attempts) {
    RetryPolicy p;
    p.max_attempts = attempts;
    p.backoff_ms = {0};
    return p;
}

}  // namespace

TEST_CASE("cache key digests separate every field") {
    ChatRequest a = stub_request("stub:echo", "hello");
    ChatRequest b = a;
    CHECK(cache_key_digest(a) == cache_key_digest(b));
    b.run_seed = 1;
    CHECK(cache_key_digest(a) != cache_key_digest(b));
    b = a;
    b.temperature = 0.75;
    CHECK(cache_key_digest(a) != cache_key_digest(b));
    b = a;
    b.system_prompt = "sys";
    CHECK(cache_key_digest(a) != cache_key_digest(b));
    b = a;
    b.messages[0].content += "!";
    CHECK(cache_key_digest(a) != cache_key_digest(b));
    b = a;
    b.max_tokens = 100;
    CHECK(cache_key_digest(a) != cache_key_digest(b));
}

TEST_CASE("second identical request replays from cache with zero network") {
    TempDir dir("cache");
    Gateway gw(dir.path(), std::make_shared<StubTransport>(), no_backoff(3));
    auto first = gw.complete_chat(stub_request("stub:echo", "ping"));
    CHECK(first.text == "ping");
    CHECK_FALSE(first.cached);
    CHECK(gw.stats().network_calls == 1);
    auto second = gw.complete_chat(stub_request("stub:echo", "ping"));
    CHECK(second.text == "ping");
    CHECK(second.cached);
    CHECK(gw.stats().network_calls == 1);
    CHECK(gw.stats().cache_hits == 1);
}

TEST_CASE("empty responses are preserved through the cache") {
    TempDir dir("cache_empty");
    Gateway gw(dir.path(), std::make_shared<StubTransport>(), no_backoff(3));
    auto first = gw.complete_chat(stub_request("stub:empty", "anything"));
    CHECK(first.text.empty());
    CHECK(first.finish_reason == FinishReason::stop);
    auto replay = gw.complete_chat(stub_request("stub:empty", "anything"));
    CHECK(replay.text.empty());
    CHECK(replay.cached);
    CHECK(replay.finish_reason == FinishReason::stop);
}

TEST_CASE("provider refusal maps to filter, not an error") {
    TempDir dir("cache_filter");
    Gateway gw(dir.path(), std::make_shared<StubTransport>(), no_backoff(3));
    auto resp = gw.complete_chat(stub_request("stub:filter", "x"));
    CHECK(resp.finish_reason == FinishReason::filter);
    CHECK(resp.text.empty());
}

TEST_CASE("two failures then success within max_attempts") {
    TempDir dir("cache_retry");
    int calls = 0;
    auto transport = std::make_shared<FnTransport>([&](const ChatRequest&) -> ChatResponse {
        if (++calls < 3) throw TransportError("HTTP 503", true);
        ChatResponse ok;
        ok.text = "recovered";
        return ok;
    });
    Gateway gw(dir.path(), transport, no_backoff(3));
    auto resp = gw.complete_chat(stub_request("mock:m", "x"));
    CHECK(resp.text == "recovered");
    CHECK(calls == 3);
    CHECK(gw.stats().network_calls == 3);
    CHECK(gw.stats().retries == 2);
}

TEST_CASE("exhausted retries raise a transport error carrying the last status") {
    TempDir dir("cache_exhaust");
    auto transport = std::make_shared<FnTransport>(
        [](const ChatRequest&) -> ChatResponse { throw TransportError("HTTP 500", true); });
    Gateway gw(dir.path(), transport, no_backoff(3));
    try {
        gw.complete_chat(stub_request("mock:m", "x"));
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(std::string(e.what()).find("HTTP 500") != std::string::npos);
        CHECK(std::string(e.what()).find("3 attempt") != std::string::npos);
    }
    CHECK(gw.stats().network_calls == 3);
}

TEST_CASE("non-retryable failures do not retry") {
    TempDir dir("cache_noretry");
    int calls = 0;
    auto transport = std::make_shared<FnTransport>([&](const ChatRequest&) -> ChatResponse {
        ++calls;
        throw TransportError("HTTP 401", false);
    });
    Gateway gw(dir.path(), transport, no_backoff(3));
    CHECK_THROWS_AS(gw.complete_chat(stub_request("mock:m", "x")), TransportError);
    CHECK(calls == 1);
}

TEST_CASE("cache round trip is byte-faithful for random requests") {
    TempDir dir("cache_rt");
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> len(0, 60);
    std::uniform_int_distribution<int> ch(32, 126);
    Gateway gw(dir.path(), std::make_shared<StubTransport>(), no_backoff(3));
    for (int i = 0; i < 40; ++i) {
        std::string text;
        for (int j = len(rng); j > 0; --j) text.push_back(static_cast<char>(ch(rng)));
        auto req = stub_request("stub:echo", text, i % 3);
        auto original = gw.complete_chat(req);
        auto replayed = gw.complete_chat(req);
        CHECK(replayed.cached);
        CHECK(replayed.text == original.text);
        CHECK(replayed.finish_reason == original.finish_reason);
        CHECK(replayed.provider_meta == original.provider_meta);
    }
}

TEST_CASE("embedding batches are unit vectors of one dimension") {
    TempDir dir("embed");
    Gateway gw(dir.path(), std::make_shared<StubTransport>(), no_backoff(3));
    auto vecs = gw.embed_texts({"alpha", "beta", "gamma"}, "stub:hash64");
    REQUIRE(vecs.size() == 3);
    for (const auto& v : vecs) {
        CHECK(v.size() == 64);
        double norm = 0;
        for (float x : v) norm += double(x) * x;
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("determinism: same text, same vector") {
        auto again = gw.embed_texts({"alpha"}, "stub:hash64");
        CHECK(again[0] == vecs[0]);
    }
    SUBCASE("empty text has a fixed vector") {
        auto e1 = gw.embed_texts({""}, "stub:hash64");
        auto e2 = gw.embed_texts({""}, "stub:hash64");
        CHECK(e1[0] == e2[0]);
        double norm = 0;
        for (float x : e1[0]) norm += double(x) * x;
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("cached embeddings skip the provider") {
        const auto before = gw.stats().network_calls;
        (void)gw.embed_texts({"alpha", "beta"}, "stub:hash64");
        CHECK(gw.stats().network_calls == before);
    }
}

TEST_CASE("embedding dimension mismatch is an integrity error") {
    TempDir dir("embed_dim");
    auto transport = std::make_shared<FnTransport>(
        nullptr, [](const std::vector<std::string>& texts, const std::string&) {
            std::vector<std::vector<float>> out;
            for (std::size_t i = 0; i < texts.size(); ++i) {
                out.push_back(std::vector<float>(i == 0 ? 4 : 8, 0.5f));
            }
            return out;
        });
    Gateway gw(dir.path(), transport, no_backoff(1));
    CHECK_THROWS(gw.embed_texts({"a", "b"}, "mock:e"));
}

TEST_CASE("request validation") {
    TempDir dir("validate");
    Gateway gw(dir.path(), std::make_shared<StubTransport>(), no_backoff(1));
    ChatRequest no_messages;
    no_messages.model_id = "stub:echo";
    CHECK_THROWS_AS(gw.complete_chat(no_messages), std::invalid_argument);
    auto bad_temp = stub_request("stub:echo", "x");
    bad_temp.temperature = -1.0;
    CHECK_THROWS_AS(gw.complete_chat(bad_temp), std::invalid_argument);
    CHECK_THROWS_AS(gw.embed_texts({}, "stub:hash64"), std::invalid_argument);
}
