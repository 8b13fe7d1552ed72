#include "harness/stub_transport.hpp"

#include <set>

#include "harness/grading.hpp"
#include "harness/text.hpp"

namespace harness {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t xorshift64(std::uint64_t& state) {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
}

std::string last_user_message(const ChatRequest& req) {
    for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
        if (it->role == Role::user) return it->content;
    }
    return {};
}

std::string after_marker(const std::string& text, const std::string& marker) {
    auto pos = text.rfind(marker);
    if (pos == std::string::npos) return text;
    return trim(text.substr(pos + marker.size()));
}

std::string between(const std::string& text, const std::string& from, const std::string& to) {
    auto b = text.find(from);
    if (b == std::string::npos) return {};
    b += from.size();
    auto e = text.find(to, b);
    if (e == std::string::npos) e = text.size();
    return text.substr(b, e - b);
}

std::set<std::string> token_set(const std::string& s) {
    auto tokens = word_tokens(s);
    return {tokens.begin(), tokens.end()};
}

// Word-overlap Jaccard >= 1/2 counts as semantically equivalent.
std::string judge_fuzzy(const std::string& prompt) {
    const std::string ref = between(prompt, "Reference: ", "\nCandidate: ");
    const std::string cand = between(prompt, "\nCandidate: ", "\nAnswer exactly");
    auto a = token_set(ref);
    auto b = token_set(cand);
    std::size_t inter = 0;
    for (const auto& t : a) {
        if (b.count(t)) ++inter;
    }
    std::size_t uni = a.size() + b.size() - inter;
    return (uni > 0 && 2 * inter >= uni) ? "YES" : "NO";
}

std::string squash_spaces(const std::string& s) {
    std::string out;
    bool prev_space = true;
    for (char c : s) {
        bool space = std::isspace(static_cast<unsigned char>(c));
        if (space) {
            if (!prev_space) out.push_back(' ');
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        prev_space = space;
    }
    return out;
}

// A rule counts as described when its text occurs in the explanation
// (case- and whitespace-insensitive).
std::string judge_checklist(const std::string& prompt) {
    const std::string rules_block = between(prompt, "Rules:\n", "Explanation:\n");
    const std::string explanation = squash_spaces(between(prompt, "Explanation:\n", "\nRespond with"));
    std::string out = "[";
    std::size_t pos = 0;
    int index = 1;
    bool first = true;
    while (true) {
        const std::string needle = std::to_string(index) + ". ";
        auto b = rules_block.find(needle, pos);
        if (b == std::string::npos) break;
        b += needle.size();
        auto e = rules_block.find('\n', b);
        if (e == std::string::npos) e = rules_block.size();
        const std::string rule = squash_spaces(rules_block.substr(b, e - b));
        const bool hit = !rule.empty() && explanation.find(rule) != std::string::npos;
        if (!first) out += ", ";
        out += hit ? "true" : "false";
        first = false;
        pos = e;
        ++index;
    }
    out += "]";
    return out;
}

std::string judge_scorecard() {
    static const char* codes[] = {"SLVS_i", "ISC", "HGA", "RIC",      "IJC", "CCS",
                                  "SCR",    "SLVS_iv", "ACR", "CDA", "ETS"};
    std::string out = "{";
    bool first = true;
    for (const char* code : codes) {
        if (!first) out += ", ";
        out += std::string("\"") + code +
               "\": {\"score\": 3, \"justification\": \"Partially consistent with the reference.\"}";
        first = false;
    }
    out += "}";
    return out;
}

}  // namespace

bool StubTransport::handles(const std::string& model_id) {
    return model_id.rfind("stub:", 0) == 0;
}

ChatResponse StubTransport::send_chat(const ChatRequest& req) {
    if (!handles(req.model_id)) {
        throw TransportError("stub transport cannot serve model " + req.model_id, false);
    }
    const std::string kind = req.model_id.substr(5);
    const std::string prompt = last_user_message(req);
    ChatResponse resp;

    if (kind == "echo") {
        resp.text = prompt;
    } else if (kind == "echo-input") {
        resp.text = after_marker(prompt, "Input: ");
    } else if (kind.rfind("echo-input-unless:", 0) == 0) {
        const std::string needle = kind.substr(std::string("echo-input-unless:").size());
        resp.text = prompt.find(needle) != std::string::npos ? "" : after_marker(prompt, "Input: ");
    } else if (kind == "empty") {
        resp.text = "";
    } else if (kind.rfind("fixed:", 0) == 0) {
        resp.text = kind.substr(6);
    } else if (kind == "yes") {
        resp.text = "YES";
    } else if (kind == "filter") {
        resp.text = "";
        resp.finish_reason = FinishReason::filter;
    } else if (kind == "judge") {
        if (prompt.rfind(kFuzzyJudgePromptPrefix, 0) == 0) {
            resp.text = judge_fuzzy(prompt);
        } else if (prompt.find("rule checklist") != std::string::npos) {
            resp.text = judge_checklist(prompt);
        } else if ((req.system_prompt &&
                    req.system_prompt->rfind("Given the evaluation rules", 0) == 0) ||
                   prompt.rfind("Given the evaluation rules", 0) == 0) {
            resp.text = judge_scorecard();
        } else {
            resp.text = "YES";
        }
    } else {
        throw TransportError("unknown stub chat model: " + req.model_id, false);
    }
    resp.provider_meta["provider"] = "stub";
    return resp;
}

std::vector<std::vector<float>> StubTransport::send_embed(const std::vector<std::string>& texts,
                                                          const std::string& model_id) {
    if (model_id != "stub:hash64") {
        throw TransportError("unknown stub embedding model: " + model_id, false);
    }
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::uint64_t state = fnv1a64(text);
        if (state == 0) state = 0x9E3779B97F4A7C15ULL;
        std::vector<float> vec(64);
        for (auto& v : vec) {
            const std::uint64_t bits = xorshift64(state);
            // top 24 bits -> [-1, 1); exact in float
            v = static_cast<float>(static_cast<std::int64_t>(bits >> 40) - (1 << 23)) /
                static_cast<float>(1 << 23);
        }
        out.push_back(std::move(vec));
    }
    return out;
}

}  // namespace harness
