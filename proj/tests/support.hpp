#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "harness/llm.hpp"
#include "harness/stub_transport.hpp"

namespace testsupport {

inline std::filesystem::path fixtures_dir() { return FIXTURES_DIR; }
inline std::filesystem::path assets_dir() { return ASSETS_DIR; }

/// Unique temp directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("harness_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Transport driven by a lambda; embeds fail unless a handler is given.
class FnTransport : public harness::Transport {
public:
    using ChatFn = std::function<harness::ChatResponse(const harness::ChatRequest&)>;
    using EmbedFn = std::function<std::vector<std::vector<float>>(
        const std::vector<std::string>&, const std::string&)>;

    explicit FnTransport(ChatFn chat, EmbedFn embed = nullptr)
        : chat_(std::move(chat)), embed_(std::move(embed)) {}

    harness::ChatResponse send_chat(const harness::ChatRequest& req) override {
        chat_calls.fetch_add(1);
        return chat_(req);
    }
    std::vector<std::vector<float>> send_embed(const std::vector<std::string>& texts,
                                               const std::string& model_id) override {
        if (!embed_) throw harness::TransportError("no embed handler in test transport", false);
        return embed_(texts, model_id);
    }

    std::atomic<int> chat_calls{0};

private:
    ChatFn chat_;
    EmbedFn embed_;
};

/// Fails every call; replay tests use it to prove nothing hits the network.
class PoisonTransport : public harness::Transport {
public:
    harness::ChatResponse send_chat(const harness::ChatRequest&) override {
        throw harness::TransportError("poison transport: network call during replay", false);
    }
    std::vector<std::vector<float>> send_embed(const std::vector<std::string>&,
                                               const std::string&) override {
        throw harness::TransportError("poison transport: network call during replay", false);
    }
};

inline const char* kGoldenSolverModel = "mock:solver";
inline const char* kGoldenJudgeModel = "stub:judge";

/// Canned solver for the three fixture problems, keyed on statement
/// content; stub models pass through. 2021-1 solves perfectly, 2022-3
/// partially, 2023-5 never produces JSON (format failure).
inline std::shared_ptr<harness::Transport> golden_transport() {
    auto stub = std::make_shared<harness::StubTransport>();
    auto chat = [stub](const harness::ChatRequest& req) -> harness::ChatResponse {
        if (harness::StubTransport::handles(req.model_id)) return stub->send_chat(req);
        if (req.model_id != kGoldenSolverModel) {
            throw harness::TransportError("unexpected model " + req.model_id, false);
        }
        std::string prompt;
        for (const auto& m : req.messages) prompt += m.content + "\n";
        harness::ChatResponse resp;
        if (prompt.find("Kuvari") != std::string::npos) {
            resp.text =
                "{\"answers\": {\"p1\": \"kasvosta\", \"p2\": [\"talo\", \"kivi\"]}, "
                "\"explanation\": \"The suffix -sta marks movement away from or out of an "
                "object. The verb always stands last in the sentence.\"}";
        } else if (prompt.find("Semal") != std::string::npos) {
            resp.text =
                "{\"answers\": {\"q1\": \"matar\", \"q2\": \"rain falls on the mountain\"}, "
                "\"explanation\": \"Nouns take the suffix -im in the plural.\"}";
        } else if (prompt.find("Ilqan") != std::string::npos) {
            resp.text = "I am sorry, I can only answer in prose about these numerals.";
        } else {
            throw harness::TransportError("no canned response for prompt", false);
        }
        return resp;
    };
    auto embed = [stub](const std::vector<std::string>& texts, const std::string& model_id) {
        return stub->send_embed(texts, model_id);
    };
    return std::make_shared<FnTransport>(chat, embed);
}

}  // namespace testsupport
