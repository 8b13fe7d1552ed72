#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace harness {

enum class Role { user, assistant };

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct ChatRequest {
    std::string model_id;  // "<provider>:<model>"; "stub:*" is the built-in test provider
    std::optional<std::string> system_prompt;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<std::int64_t> thinking_budget;
    std::optional<std::int64_t> max_tokens;
    // Folded into the cache key so repeated samples of one prompt within a
    // run stay distinguishable; the orchestrator increments it per node.
    std::uint64_t run_seed = 0;
};

enum class FinishReason { stop, length, filter, error };

std::string to_string(FinishReason r);
FinishReason finish_reason_from_string(const std::string& s);

struct ChatResponse {
    std::string text;  // empty text is a legal, preserved value
    FinishReason finish_reason = FinishReason::stop;
    std::map<std::string, std::string> provider_meta;
    bool cached = false;
};

class TransportError : public std::runtime_error {
public:
    TransportError(const std::string& msg, bool retryable)
        : std::runtime_error(msg), retryable(retryable) {}
    bool retryable;
};

/// Provider backend: one chat round trip or one embedding batch.
class Transport {
public:
    virtual ~Transport() = default;
    virtual ChatResponse send_chat(const ChatRequest& req) = 0;
    virtual std::vector<std::vector<float>> send_embed(const std::vector<std::string>& texts,
                                                       const std::string& model_id) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::vector<int> backoff_ms = {1000, 4000};
};

struct GatewayStats {
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t network_calls = 0;  // transport sends, including stubs
    std::uint64_t retries = 0;
};

/// Content hash of every request field plus run_seed; equal requests under
/// one seed collide, any field change separates them.
std::string cache_key_digest(const ChatRequest& req);
std::string embed_cache_digest(const std::string& model_id, const std::string& text);

/// Provider-agnostic chat/embedding client with an on-disk
/// content-addressed response cache and retry policy. Thread-safe.
class Gateway {
public:
    Gateway(std::filesystem::path cache_dir, std::shared_ptr<Transport> transport,
            RetryPolicy policy = {});

    /// Cache hit -> replay without touching the transport; miss -> up to
    /// max_attempts sends with backoff, response persisted before return.
    ChatResponse complete_chat(const ChatRequest& req);

    /// One unit-normalized vector per input text, cached per (model, text).
    std::vector<std::vector<float>> embed_texts(const std::vector<std::string>& texts,
                                                const std::string& model_id);

    GatewayStats stats() const;

    const std::filesystem::path& cache_dir() const { return cache_dir_; }

private:
    std::filesystem::path cache_path(const std::string& digest) const;
    std::optional<ChatResponse> load_cached(const std::string& digest) const;
    void store(const std::string& digest, const ChatRequest& req, const ChatResponse& resp);

    std::filesystem::path cache_dir_;
    std::shared_ptr<Transport> transport_;
    RetryPolicy policy_;
    mutable std::atomic<std::uint64_t> cache_hits_{0};
    mutable std::atomic<std::uint64_t> cache_misses_{0};
    mutable std::atomic<std::uint64_t> network_calls_{0};
    mutable std::atomic<std::uint64_t> retries_{0};
};

}  // namespace harness
