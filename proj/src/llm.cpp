#include "harness/llm.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

#include "harness/fsutil.hpp"
#include "harness/sha256.hpp"

namespace harness {

using nlohmann::json;

std::string to_string(FinishReason r) {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::filter: return "filter";
        case FinishReason::error: return "error";
    }
    return "?";
}

FinishReason finish_reason_from_string(const std::string& s) {
    if (s == "stop") return FinishReason::stop;
    if (s == "length") return FinishReason::length;
    if (s == "filter") return FinishReason::filter;
    if (s == "error") return FinishReason::error;
    throw std::invalid_argument("unknown finish reason: " + s);
}

namespace {

json request_canonical_json(const ChatRequest& req) {
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", m.role == Role::user ? "user" : "assistant"},
                            {"content", m.content}});
    }
    json j{{"kind", "chat"},
           {"model_id", req.model_id},
           {"system_prompt", req.system_prompt ? json(*req.system_prompt) : json(nullptr)},
           {"messages", messages},
           {"temperature", req.temperature},
           {"thinking_budget", req.thinking_budget ? json(*req.thinking_budget) : json(nullptr)},
           {"max_tokens", req.max_tokens ? json(*req.max_tokens) : json(nullptr)},
           {"run_seed", req.run_seed}};
    return j;
}

json response_json(const ChatResponse& resp) {
    return json{{"text", resp.text},
                {"finish_reason", to_string(resp.finish_reason)},
                {"provider_meta", resp.provider_meta}};
}

ChatResponse response_from_json(const json& j) {
    ChatResponse resp;
    resp.text = j.at("text").get<std::string>();
    resp.finish_reason = finish_reason_from_string(j.at("finish_reason").get<std::string>());
    if (j.contains("provider_meta")) {
        resp.provider_meta = j.at("provider_meta").get<std::map<std::string, std::string>>();
    }
    return resp;
}

}  // namespace

std::string cache_key_digest(const ChatRequest& req) {
    return sha256_hex(request_canonical_json(req).dump());
}

std::string embed_cache_digest(const std::string& model_id, const std::string& text) {
    json j{{"kind", "embed"}, {"model_id", model_id}, {"text", text}};
    return sha256_hex(j.dump());
}

Gateway::Gateway(std::filesystem::path cache_dir, std::shared_ptr<Transport> transport,
                 RetryPolicy policy)
    : cache_dir_(std::move(cache_dir)), transport_(std::move(transport)), policy_(policy) {
    std::filesystem::create_directories(cache_dir_);
}

std::filesystem::path Gateway::cache_path(const std::string& digest) const {
    return cache_dir_ / digest.substr(0, 2) / (digest + ".json");
}

std::optional<ChatResponse> Gateway::load_cached(const std::string& digest) const {
    const auto path = cache_path(digest);
    if (!std::filesystem::exists(path)) return std::nullopt;
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.contains("response")) return std::nullopt;  // corrupt entry: miss
    ChatResponse resp = response_from_json(j.at("response"));
    resp.cached = true;
    return resp;
}

void Gateway::store(const std::string& digest, const ChatRequest& req, const ChatResponse& resp) {
    json j{{"created_unix",
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count()},
           {"request", request_canonical_json(req)},
           {"response", response_json(resp)}};
    atomic_write_file(cache_path(digest), j.dump(2) + "\n");
}

ChatResponse Gateway::complete_chat(const ChatRequest& req) {
    if (req.messages.empty()) throw std::invalid_argument("chat request with no messages");
    if (!std::isfinite(req.temperature) || req.temperature < 0.0) {
        throw std::invalid_argument("chat temperature must be finite and nonnegative");
    }
    const std::string digest = cache_key_digest(req);
    if (auto cached = load_cached(digest)) {
        cache_hits_.fetch_add(1, std::memory_order_relaxed);
        return *cached;
    }
    cache_misses_.fetch_add(1, std::memory_order_relaxed);

    std::string last_error;
    for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
        try {
            network_calls_.fetch_add(1, std::memory_order_relaxed);
            ChatResponse resp = transport_->send_chat(req);
            resp.cached = false;
            store(digest, req, resp);
            return resp;
        } catch (const TransportError& e) {
            last_error = e.what();
            if (!e.retryable || attempt == policy_.max_attempts) {
                throw TransportError("chat failed after " + std::to_string(attempt) +
                                         " attempt(s): " + last_error,
                                     false);
            }
            retries_.fetch_add(1, std::memory_order_relaxed);
            const auto& back = policy_.backoff_ms;
            int sleep_ms = back.empty()
                               ? 0
                               : back[std::min<std::size_t>(attempt - 1, back.size() - 1)];
            if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
        }
    }
    throw TransportError("chat failed: " + last_error, false);
}

std::vector<std::vector<float>> Gateway::embed_texts(const std::vector<std::string>& texts,
                                                     const std::string& model_id) {
    if (texts.empty()) throw std::invalid_argument("embed_texts: no inputs");

    std::vector<std::vector<float>> out(texts.size());
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto path = cache_path(embed_cache_digest(model_id, texts[i]));
        if (std::filesystem::exists(path)) {
            json j = json::parse(read_file(path), nullptr, false);
            if (!j.is_discarded() && j.contains("vector")) {
                out[i] = j.at("vector").get<std::vector<float>>();
                cache_hits_.fetch_add(1, std::memory_order_relaxed);
                continue;
            }
        }
        missing.push_back(i);
    }

    if (!missing.empty()) {
        cache_misses_.fetch_add(missing.size(), std::memory_order_relaxed);
        std::vector<std::string> batch;
        batch.reserve(missing.size());
        for (auto i : missing) batch.push_back(texts[i]);
        network_calls_.fetch_add(1, std::memory_order_relaxed);
        auto vectors = transport_->send_embed(batch, model_id);
        if (vectors.size() != batch.size()) {
            throw std::runtime_error("embedding provider returned wrong batch size");
        }
        for (std::size_t b = 0; b < missing.size(); ++b) {
            auto& vec = vectors[b];
            double norm = 0.0;
            for (float v : vec) norm += double(v) * v;
            norm = std::sqrt(norm);
            if (norm > 0.0) {
                for (float& v : vec) v = static_cast<float>(v / norm);
            }
            out[missing[b]] = vec;
            json j{{"model_id", model_id}, {"vector", vec}};
            atomic_write_file(cache_path(embed_cache_digest(model_id, batch[b])), j.dump() + "\n");
        }
    }

    const std::size_t dim = out[0].size();
    for (const auto& vec : out) {
        if (vec.size() != dim) {
            throw std::runtime_error("embedding dimension mismatch within batch");
        }
    }
    return out;
}

GatewayStats Gateway::stats() const {
    GatewayStats s;
    s.cache_hits = cache_hits_.load(std::memory_order_relaxed);
    s.cache_misses = cache_misses_.load(std::memory_order_relaxed);
    s.network_calls = network_calls_.load(std::memory_order_relaxed);
    s.retries = retries_.load(std::memory_order_relaxed);
    return s;
}

}  // namespace harness
