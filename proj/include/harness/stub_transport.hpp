#pragma once

#include "harness/llm.hpp"

namespace harness {

/// In-process deterministic provider for "stub:*" model ids. Responses are
/// pure functions of the request text, so cached runs replay bit-exactly.
///
/// Chat models:
///   stub:echo                      last user message
///   stub:echo-input                text after the last "Input: " marker
///   stub:echo-input-unless:<s>     empty text when the prompt contains <s>
///   stub:empty                     empty text
///   stub:fixed:<payload>           <payload> verbatim
///   stub:yes                       "YES"
///   stub:filter                    empty text with finish_reason=filter
///   stub:judge                     heuristic grader: YES/NO for fuzzy
///                                  prompts (word-overlap >= 1/2), a boolean
///                                  array for checklist prompts (rule text
///                                  contained in the explanation), a fixed
///                                  scorecard for reasoning-evaluation prompts
/// Embedding models:
///   stub:hash64                    64-dim hash vector per text
class StubTransport : public Transport {
public:
    ChatResponse send_chat(const ChatRequest& req) override;
    std::vector<std::vector<float>> send_embed(const std::vector<std::string>& texts,
                                               const std::string& model_id) override;

    static bool handles(const std::string& model_id);
};

}  // namespace harness
