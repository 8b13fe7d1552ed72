#pragma once

#include <map>
#include <memory>
#include <string>

#include "harness/llm.hpp"

namespace harness {

struct ProviderConfig {
    std::string name;
    std::string base_url;  // e.g. "http://localhost:8000/v1"
    std::string auth_env;  // env var holding the bearer token
    std::string kind;      // "chat" or "embedding"
};

/// Speaks the OpenAI-compatible /chat/completions and /embeddings JSON
/// shapes against providers declared in config. Model ids are
/// "<provider>:<model>".
class HttpTransport : public Transport {
public:
    explicit HttpTransport(std::map<std::string, ProviderConfig> providers);

    ChatResponse send_chat(const ChatRequest& req) override;
    std::vector<std::vector<float>> send_embed(const std::vector<std::string>& texts,
                                               const std::string& model_id) override;

private:
    const ProviderConfig& provider_for(const std::string& model_id, std::string& model_name) const;

    std::map<std::string, ProviderConfig> providers_;
};

/// Routes "stub:*" models to the built-in stub and everything else to the
/// HTTP transport.
class RoutingTransport : public Transport {
public:
    RoutingTransport(std::shared_ptr<Transport> stub, std::shared_ptr<Transport> http)
        : stub_(std::move(stub)), http_(std::move(http)) {}

    ChatResponse send_chat(const ChatRequest& req) override;
    std::vector<std::vector<float>> send_embed(const std::vector<std::string>& texts,
                                               const std::string& model_id) override;

private:
    std::shared_ptr<Transport> stub_;
    std::shared_ptr<Transport> http_;
};

}  // namespace harness
