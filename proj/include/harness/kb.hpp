#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "harness/problem.hpp"

namespace harness {

struct KbDocument {
    std::string doc_id;
    std::string title;
    std::string glottocode;
    std::string family;
    std::string languoid_name;
    std::set<std::string> macroareas;
    std::set<std::string> countries;
    std::string body_markdown;
};

struct KbMeta {
    std::string doc_id;
    std::string title;
    std::string glottocode;
    std::string family;
    std::string languoid_name;
    std::set<std::string> macroareas;
    std::set<std::string> countries;
};

struct KbChunk {
    std::string chunk_id;  // "<doc_id>#<seq>", ties everywhere break on this
    std::string doc_id;
    std::string context_header;  // section title path, "" at top level
    std::string text;
    int token_count = 0;
    std::size_t span_begin = 0;  // byte span into the source body
    std::size_t span_end = 0;
    std::vector<float> embedding;  // empty before indexing
    KbMeta metadata;

    /// What gets embedded and lexically indexed.
    std::string embed_text() const {
        return context_header.empty() ? text : context_header + "\n" + text;
    }
};

/// Counts tokens in a piece of text. The default counts
/// whitespace-delimited units; a model tokenizer can be plugged in.
using TokenCounter = std::function<int(const std::string&)>;

TokenCounter whitespace_token_counter();

/// Splits a Markdown body at heading boundaries, then greedily packs
/// paragraphs (splitting oversized ones) so every chunk stays within
/// max_tokens. Each chunk carries its section-title path.
std::vector<KbChunk> chunk_markdown(const std::string& body, const TokenCounter& count_tokens,
                                    int max_tokens = 256);

enum class SearchMode { FullText, Vector, Hybrid };

struct SearchFilters {
    std::set<std::string> glottocodes;
    std::set<std::string> families;
    std::set<std::string> macroareas;
    std::set<std::string> countries;
};

struct SearchQuery {
    std::string text;
    SearchMode mode = SearchMode::Hybrid;
    SearchFilters filters;
    int top_k = 5;
};

struct SearchHit {
    const KbChunk* chunk = nullptr;
    double score = 0.0;
};

using EmbedBatchFn =
    std::function<std::vector<std::vector<float>>(const std::vector<std::string>&)>;

/// In-memory chunk index with single-directory persistence (JSON manifest
/// plus a raw float32 vector file). Many concurrent readers, one writer.
class KbIndex {
public:
    /// Chunks, embeds and indexes one document; re-ingesting a doc_id
    /// replaces its chunks. Returns the new chunk ids.
    std::vector<std::string> ingest_document(const KbDocument& doc, const TokenCounter& tokens,
                                             const EmbedBatchFn& embed, int max_tokens = 256);

    /// FullText ranks by BM25 (k1=1.2, b=0.75), Vector by cosine, Hybrid
    /// by reciprocal-rank fusion sum 1/(60+rank) over both rankings.
    /// Filters are hard predicates applied before ranking.
    std::vector<SearchHit> search(const SearchQuery& query, const EmbedBatchFn& embed) const;

    std::size_t chunk_count() const;
    std::vector<const KbChunk*> chunks() const;

    void save(const std::filesystem::path& dir) const;
    static KbIndex load(const std::filesystem::path& dir);

private:
    // behind a pointer so the index stays movable
    mutable std::unique_ptr<std::shared_mutex> mutex_ = std::make_unique<std::shared_mutex>();
    std::vector<KbChunk> chunks_;
};

struct GrammarBrief {
    std::optional<std::string> text;
    bool no_reference = false;  // no chunk matched; comparisons may filter on this
    std::string warning;
};

using ChatFn = std::function<std::string(const std::string& system, const std::string& user)>;

/// Summarizes retrieved grammar chunks for a problem via one chat call.
/// Empty hits or a failing chat degrade to an absent brief.
GrammarBrief summarize_grammar(const Problem& problem, const std::vector<SearchHit>& hits,
                               const ChatFn& chat, int max_chunks = 5);

/// Default retrieval for a problem: hybrid search filtered to the
/// problem's glottocode, query = language name + head of the statement.
SearchQuery grammar_query_for(const Problem& problem, int top_k = 5);

}  // namespace harness
