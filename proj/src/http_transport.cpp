#include "harness/http_transport.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "harness/stub_transport.hpp"

namespace harness {

using nlohmann::json;

HttpTransport::HttpTransport(std::map<std::string, ProviderConfig> providers)
    : providers_(std::move(providers)) {}

const ProviderConfig& HttpTransport::provider_for(const std::string& model_id,
                                                  std::string& model_name) const {
    auto colon = model_id.find(':');
    if (colon == std::string::npos) {
        throw TransportError("model id \"" + model_id + "\" is not <provider>:<model>", false);
    }
    const std::string provider = model_id.substr(0, colon);
    model_name = model_id.substr(colon + 1);
    auto it = providers_.find(provider);
    if (it == providers_.end()) {
        throw TransportError("no provider configured for model " + model_id, false);
    }
    return it->second;
}

namespace {

struct HttpReply {
    int status = 0;
    std::string body;
};

// "http://host:port/prefix" -> origin for the client, path prefix for routes
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    auto scheme = base_url.find("://");
    if (scheme == std::string::npos) return {base_url, ""};
    auto slash = base_url.find('/', scheme + 3);
    if (slash == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, slash), prefix};
}

HttpReply post_json(const ProviderConfig& provider, const std::string& route, const json& body) {
    const auto [origin, prefix] = split_base_url(provider.base_url);
    httplib::Client client(origin);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);
    httplib::Headers headers;
    if (!provider.auth_env.empty()) {
        const char* token = std::getenv(provider.auth_env.c_str());
        if (!token) {
            throw TransportError("provider " + provider.name + ": env var " + provider.auth_env +
                                     " is not set",
                                 false);
        }
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    auto result = client.Post(prefix + route, headers, body.dump(), "application/json");
    if (!result) {
        throw TransportError("provider " + provider.name + ": " + httplib::to_string(result.error()),
                             true);
    }
    if (result->status == 429 || result->status >= 500) {
        throw TransportError("provider " + provider.name + ": HTTP " +
                                 std::to_string(result->status),
                             true);
    }
    if (result->status >= 400) {
        throw TransportError("provider " + provider.name + ": HTTP " +
                                 std::to_string(result->status) + ": " + result->body,
                             false);
    }
    return {result->status, result->body};
}

}  // namespace

ChatResponse HttpTransport::send_chat(const ChatRequest& req) {
    std::string model_name;
    const ProviderConfig& provider = provider_for(req.model_id, model_name);

    json messages = json::array();
    if (req.system_prompt) {
        messages.push_back({{"role", "system"}, {"content", *req.system_prompt}});
    }
    for (const auto& m : req.messages) {
        messages.push_back(
            {{"role", m.role == Role::user ? "user" : "assistant"}, {"content", m.content}});
    }
    json body{{"model", model_name}, {"messages", messages}, {"temperature", req.temperature}};
    if (req.max_tokens) body["max_tokens"] = *req.max_tokens;
    if (req.thinking_budget) body["thinking_budget"] = *req.thinking_budget;

    const HttpReply reply = post_json(provider, "/chat/completions", body);
    json j = json::parse(reply.body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
        throw TransportError("provider " + provider.name + ": malformed completion body", true);
    }
    const json& choice = j["choices"][0];
    ChatResponse resp;
    if (choice.contains("message") && choice["message"].contains("content") &&
        !choice["message"]["content"].is_null()) {
        resp.text = choice["message"]["content"].get<std::string>();
    }
    const std::string finish = choice.value("finish_reason", "stop");
    if (finish == "length") {
        resp.finish_reason = FinishReason::length;
    } else if (finish == "content_filter" || finish == "filter" || finish == "safety") {
        resp.finish_reason = FinishReason::filter;
        resp.text.clear();
    } else {
        resp.finish_reason = FinishReason::stop;
    }
    resp.provider_meta["provider"] = provider.name;
    if (j.contains("model") && j["model"].is_string()) {
        resp.provider_meta["model"] = j["model"].get<std::string>();
    }
    return resp;
}

std::vector<std::vector<float>> HttpTransport::send_embed(const std::vector<std::string>& texts,
                                                          const std::string& model_id) {
    std::string model_name;
    const ProviderConfig& provider = provider_for(model_id, model_name);
    json body{{"model", model_name}, {"input", texts}};
    const HttpReply reply = post_json(provider, "/embeddings", body);
    json j = json::parse(reply.body, nullptr, false);
    if (j.is_discarded() || !j.contains("data")) {
        throw TransportError("provider " + provider.name + ": malformed embedding body", true);
    }
    std::vector<std::vector<float>> out;
    for (const auto& item : j["data"]) {
        out.push_back(item.at("embedding").get<std::vector<float>>());
    }
    return out;
}

ChatResponse RoutingTransport::send_chat(const ChatRequest& req) {
    if (StubTransport::handles(req.model_id)) return stub_->send_chat(req);
    return http_->send_chat(req);
}

std::vector<std::vector<float>> RoutingTransport::send_embed(const std::vector<std::string>& texts,
                                                             const std::string& model_id) {
    if (StubTransport::handles(model_id)) return stub_->send_embed(texts, model_id);
    return http_->send_embed(texts, model_id);
}

}  // namespace harness
