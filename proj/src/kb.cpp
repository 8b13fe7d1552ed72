#include "harness/kb.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "harness/fsutil.hpp"
#include "harness/text.hpp"

namespace harness {

using nlohmann::json;

TokenCounter whitespace_token_counter() {
    return [](const std::string& text) {
        int count = 0;
        bool in_token = false;
        for (unsigned char c : text) {
            const bool space = std::isspace(c) != 0;
            if (!space && !in_token) ++count;
            in_token = !space;
        }
        return count;
    };
}

namespace {

struct Section {
    std::string header_path;  // "H1 > H2"
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

int heading_level(const std::string& line, std::string& title) {
    std::size_t hashes = 0;
    while (hashes < line.size() && line[hashes] == '#') ++hashes;
    if (hashes == 0 || hashes > 6 || hashes >= line.size() || line[hashes] != ' ') return 0;
    title = trim(line.substr(hashes + 1));
    return static_cast<int>(hashes);
}

std::vector<Section> split_sections(const std::string& body) {
    std::vector<Section> sections;
    std::vector<std::pair<int, std::string>> title_stack;
    auto path_of = [&] {
        std::string path;
        for (const auto& [level, title] : title_stack) {
            if (!path.empty()) path += " > ";
            path += title;
        }
        return path;
    };

    Section current;
    std::size_t pos = 0;
    auto flush = [&](std::size_t end_pos) {
        current.end = end_pos;
        if (!trim(current.text).empty()) sections.push_back(current);
        current = Section{};
    };

    while (pos <= body.size()) {
        std::size_t eol = body.find('\n', pos);
        const bool last = eol == std::string::npos;
        const std::string line = body.substr(pos, last ? std::string::npos : eol - pos);
        std::string title;
        const int level = heading_level(line, title);
        if (level > 0) {
            flush(pos);
            while (!title_stack.empty() && title_stack.back().first >= level) title_stack.pop_back();
            title_stack.emplace_back(level, title);
            current.header_path = path_of();
            current.begin = last ? body.size() : eol + 1;
        } else {
            if (current.text.empty() && trim(line).empty()) {
                current.begin = last ? body.size() : eol + 1;
            } else {
                current.text += line;
                current.text += '\n';
            }
            if (current.header_path.empty()) current.header_path = path_of();
        }
        if (last) break;
        pos = eol + 1;
    }
    flush(body.size());
    return sections;
}

std::vector<std::string> split_paragraphs(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += line;
            cur += '\n';
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

std::vector<std::string> split_by_token_budget(const std::string& text,
                                               const TokenCounter& count_tokens, int budget) {
    std::vector<std::string> words;
    std::string word;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!word.empty()) {
                words.push_back(word);
                word.clear();
            }
        } else {
            word.push_back(c);
        }
    }
    if (!word.empty()) words.push_back(word);

    std::vector<std::string> pieces;
    std::string piece;
    for (const auto& w : words) {
        const std::string candidate = piece.empty() ? w : piece + " " + w;
        if (!piece.empty() && count_tokens(candidate) > budget) {
            pieces.push_back(piece);
            piece = w;
        } else {
            piece = candidate;
        }
    }
    if (!piece.empty()) pieces.push_back(piece);
    return pieces;
}

}  // namespace

std::vector<KbChunk> chunk_markdown(const std::string& body, const TokenCounter& count_tokens,
                                    int max_tokens) {
    std::vector<KbChunk> chunks;
    for (const auto& section : split_sections(body)) {
        std::vector<std::string> units;
        for (const auto& paragraph : split_paragraphs(section.text)) {
            if (count_tokens(paragraph) > max_tokens) {
                for (auto& piece : split_by_token_budget(paragraph, count_tokens, max_tokens)) {
                    units.push_back(std::move(piece));
                }
            } else {
                units.push_back(paragraph);
            }
        }
        std::string packed;
        auto flush = [&] {
            if (packed.empty()) return;
            KbChunk chunk;
            chunk.context_header = section.header_path;
            chunk.text = packed;
            chunk.token_count = count_tokens(packed);
            chunk.span_begin = section.begin;
            chunk.span_end = section.end;
            chunks.push_back(std::move(chunk));
            packed.clear();
        };
        for (const auto& unit : units) {
            const std::string candidate = packed.empty() ? unit : packed + "\n\n" + unit;
            if (!packed.empty() && count_tokens(candidate) > max_tokens) {
                flush();
                packed = unit;
            } else {
                packed = candidate;
            }
        }
        flush();
    }
    return chunks;
}

namespace {

KbMeta meta_of(const KbDocument& doc) {
    return KbMeta{doc.doc_id, doc.title,      doc.glottocode, doc.family,
                  doc.languoid_name, doc.macroareas, doc.countries};
}

bool passes_filters(const KbMeta& meta, const SearchFilters& filters) {
    if (!filters.glottocodes.empty() && !filters.glottocodes.count(meta.glottocode)) return false;
    if (!filters.families.empty() && !filters.families.count(meta.family)) return false;
    if (!filters.macroareas.empty()) {
        bool any = false;
        for (const auto& m : meta.macroareas) {
            if (filters.macroareas.count(m)) {
                any = true;
                break;
            }
        }
        if (!any) return false;
    }
    if (!filters.countries.empty()) {
        bool any = false;
        for (const auto& c : meta.countries) {
            if (filters.countries.count(c)) {
                any = true;
                break;
            }
        }
        if (!any) return false;
    }
    return true;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        dot += double(a[i]) * double(b[i]);
        na += double(a[i]) * double(a[i]);
        nb += double(b[i]) * double(b[i]);
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Ranked indices by BM25 over the candidate set; zero-scoring chunks are
// left out of the lexical ranking.
std::vector<std::size_t> bm25_ranking(const std::vector<const KbChunk*>& candidates,
                                      const std::string& query,
                                      std::vector<double>* scores_out) {
    constexpr double k1 = 1.2;
    constexpr double b = 0.75;
    const std::size_t n = candidates.size();

    std::vector<std::map<std::string, int>> term_counts(n);
    std::vector<int> lengths(n);
    double total_len = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto tokens = word_tokens(candidates[i]->embed_text());
        lengths[i] = static_cast<int>(tokens.size());
        total_len += lengths[i];
        for (auto& t : tokens) term_counts[i][t]++;
    }
    const double avgdl = n > 0 ? std::max(total_len / double(n), 1e-9) : 1.0;

    std::map<std::string, int> df;
    auto query_terms = word_tokens(query);
    std::sort(query_terms.begin(), query_terms.end());
    query_terms.erase(std::unique(query_terms.begin(), query_terms.end()), query_terms.end());
    for (const auto& term : query_terms) {
        int d = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (term_counts[i].count(term)) ++d;
        }
        df[term] = d;
    }

    std::vector<double> scores(n, 0.0);
    for (const auto& term : query_terms) {
        if (df[term] == 0) continue;
        const double idf = std::log(1.0 + (double(n) - df[term] + 0.5) / (df[term] + 0.5));
        for (std::size_t i = 0; i < n; ++i) {
            auto it = term_counts[i].find(term);
            if (it == term_counts[i].end()) continue;
            const double tf = it->second;
            scores[i] += idf * (tf * (k1 + 1.0)) /
                         (tf + k1 * (1.0 - b + b * double(lengths[i]) / avgdl));
        }
    }

    std::vector<std::size_t> ranked;
    for (std::size_t i = 0; i < n; ++i) {
        if (scores[i] > 0.0) ranked.push_back(i);
    }
    std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b2) {
        if (scores[a] != scores[b2]) return scores[a] > scores[b2];
        return candidates[a]->chunk_id < candidates[b2]->chunk_id;
    });
    if (scores_out) *scores_out = std::move(scores);
    return ranked;
}

std::vector<std::size_t> cosine_ranking(const std::vector<const KbChunk*>& candidates,
                                        const std::vector<float>& query_vec,
                                        std::vector<double>* scores_out) {
    const std::size_t n = candidates.size();
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = cosine(candidates[i]->embedding, query_vec);
    std::vector<std::size_t> ranked(n);
    for (std::size_t i = 0; i < n; ++i) ranked[i] = i;
    std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return candidates[a]->chunk_id < candidates[b]->chunk_id;
    });
    if (scores_out) *scores_out = std::move(scores);
    return ranked;
}

}  // namespace

std::vector<std::string> KbIndex::ingest_document(const KbDocument& doc, const TokenCounter& tokens,
                                                  const EmbedBatchFn& embed, int max_tokens) {
    if (doc.doc_id.empty()) throw std::invalid_argument("kb: document without doc_id");
    if (!is_valid_glottocode(doc.glottocode)) {
        throw std::invalid_argument("kb: document " + doc.doc_id + " has invalid glottocode \"" +
                                    doc.glottocode + "\"");
    }
    if (doc.body_markdown.empty()) {
        throw std::invalid_argument("kb: document " + doc.doc_id + " has an empty body");
    }

    // Chunk and embed outside the write lock; either everything lands or
    // nothing does.
    std::vector<KbChunk> fresh = chunk_markdown(doc.body_markdown, tokens, max_tokens);
    const KbMeta meta = meta_of(doc);
    std::vector<std::string> ids;
    std::vector<std::string> embed_inputs;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        auto& chunk = fresh[i];
        char seq[8];
        std::snprintf(seq, sizeof seq, "%04zu", i);
        chunk.chunk_id = doc.doc_id + "#" + seq;
        chunk.doc_id = doc.doc_id;
        chunk.metadata = meta;
        ids.push_back(chunk.chunk_id);
        embed_inputs.push_back(chunk.embed_text());
    }
    if (!fresh.empty()) {
        auto vectors = embed(embed_inputs);
        if (vectors.size() != fresh.size()) {
            throw std::runtime_error("kb: embedding batch size mismatch during ingest");
        }
        for (std::size_t i = 0; i < fresh.size(); ++i) fresh[i].embedding = std::move(vectors[i]);
    }

    std::unique_lock lock(*mutex_);
    std::erase_if(chunks_, [&](const KbChunk& c) { return c.doc_id == doc.doc_id; });
    for (auto& chunk : fresh) chunks_.push_back(std::move(chunk));
    std::sort(chunks_.begin(), chunks_.end(),
              [](const KbChunk& a, const KbChunk& b) { return a.chunk_id < b.chunk_id; });
    return ids;
}

std::vector<SearchHit> KbIndex::search(const SearchQuery& query, const EmbedBatchFn& embed) const {
    if (trim(query.text).empty()) throw std::invalid_argument("kb: empty query text");
    if (query.top_k < 1) throw std::invalid_argument("kb: top_k must be >= 1");

    std::shared_lock lock(*mutex_);
    std::vector<const KbChunk*> candidates;
    for (const auto& chunk : chunks_) {
        if (passes_filters(chunk.metadata, query.filters)) candidates.push_back(&chunk);
    }
    if (candidates.empty()) return {};

    std::vector<SearchHit> hits;
    switch (query.mode) {
        case SearchMode::FullText: {
            std::vector<double> scores;
            for (std::size_t idx : bm25_ranking(candidates, query.text, &scores)) {
                hits.push_back({candidates[idx], scores[idx]});
            }
            break;
        }
        case SearchMode::Vector: {
            const auto query_vec = embed({query.text}).at(0);
            std::vector<double> scores;
            for (std::size_t idx : cosine_ranking(candidates, query_vec, &scores)) {
                hits.push_back({candidates[idx], scores[idx]});
            }
            break;
        }
        case SearchMode::Hybrid: {
            const auto query_vec = embed({query.text}).at(0);
            const auto lexical = bm25_ranking(candidates, query.text, nullptr);
            const auto semantic = cosine_ranking(candidates, query_vec, nullptr);
            std::vector<double> fused(candidates.size(), 0.0);
            for (std::size_t r = 0; r < lexical.size(); ++r) {
                fused[lexical[r]] += 1.0 / (60.0 + double(r + 1));
            }
            for (std::size_t r = 0; r < semantic.size(); ++r) {
                fused[semantic[r]] += 1.0 / (60.0 + double(r + 1));
            }
            std::vector<std::size_t> ranked;
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                if (fused[i] > 0.0) ranked.push_back(i);
            }
            std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
                if (fused[a] != fused[b]) return fused[a] > fused[b];
                return candidates[a]->chunk_id < candidates[b]->chunk_id;
            });
            for (std::size_t idx : ranked) hits.push_back({candidates[idx], fused[idx]});
            break;
        }
    }
    if (hits.size() > static_cast<std::size_t>(query.top_k)) {
        hits.resize(static_cast<std::size_t>(query.top_k));
    }
    return hits;
}

std::size_t KbIndex::chunk_count() const {
    std::shared_lock lock(*mutex_);
    return chunks_.size();
}

std::vector<const KbChunk*> KbIndex::chunks() const {
    std::shared_lock lock(*mutex_);
    std::vector<const KbChunk*> out;
    out.reserve(chunks_.size());
    for (const auto& chunk : chunks_) out.push_back(&chunk);
    return out;
}

void KbIndex::save(const std::filesystem::path& dir) const {
    std::shared_lock lock(*mutex_);
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["embedding_dim"] = chunks_.empty() ? 0 : chunks_[0].embedding.size();
    json chunk_list = json::array();
    std::string vectors;
    for (const auto& chunk : chunks_) {
        chunk_list.push_back({{"chunk_id", chunk.chunk_id},
                              {"doc_id", chunk.doc_id},
                              {"context_header", chunk.context_header},
                              {"text", chunk.text},
                              {"token_count", chunk.token_count},
                              {"span_begin", chunk.span_begin},
                              {"span_end", chunk.span_end},
                              {"metadata",
                               {{"doc_id", chunk.metadata.doc_id},
                                {"title", chunk.metadata.title},
                                {"glottocode", chunk.metadata.glottocode},
                                {"family", chunk.metadata.family},
                                {"languoid_name", chunk.metadata.languoid_name},
                                {"macroareas", chunk.metadata.macroareas},
                                {"countries", chunk.metadata.countries}}}});
        const auto* raw = reinterpret_cast<const char*>(chunk.embedding.data());
        vectors.append(raw, chunk.embedding.size() * sizeof(float));
    }
    manifest["chunks"] = chunk_list;
    atomic_write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    atomic_write_file(dir / "vectors.bin", vectors);
}

KbIndex KbIndex::load(const std::filesystem::path& dir) {
    KbIndex index;
    json manifest = json::parse(read_file(dir / "manifest.json"));
    const std::size_t dim = manifest.at("embedding_dim").get<std::size_t>();
    std::string vectors = read_file(dir / "vectors.bin");
    std::size_t offset = 0;
    for (const auto& cj : manifest.at("chunks")) {
        KbChunk chunk;
        chunk.chunk_id = cj.at("chunk_id").get<std::string>();
        chunk.doc_id = cj.at("doc_id").get<std::string>();
        chunk.context_header = cj.at("context_header").get<std::string>();
        chunk.text = cj.at("text").get<std::string>();
        chunk.token_count = cj.at("token_count").get<int>();
        chunk.span_begin = cj.at("span_begin").get<std::size_t>();
        chunk.span_end = cj.at("span_end").get<std::size_t>();
        const auto& mj = cj.at("metadata");
        chunk.metadata.doc_id = mj.at("doc_id").get<std::string>();
        chunk.metadata.title = mj.at("title").get<std::string>();
        chunk.metadata.glottocode = mj.at("glottocode").get<std::string>();
        chunk.metadata.family = mj.at("family").get<std::string>();
        chunk.metadata.languoid_name = mj.at("languoid_name").get<std::string>();
        chunk.metadata.macroareas = mj.at("macroareas").get<std::set<std::string>>();
        chunk.metadata.countries = mj.at("countries").get<std::set<std::string>>();
        if (offset + dim * sizeof(float) > vectors.size()) {
            throw std::runtime_error("kb: vectors.bin shorter than manifest expects");
        }
        chunk.embedding.resize(dim);
        std::memcpy(chunk.embedding.data(), vectors.data() + offset, dim * sizeof(float));
        offset += dim * sizeof(float);
        index.chunks_.push_back(std::move(chunk));
    }
    return index;
}

SearchQuery grammar_query_for(const Problem& problem, int top_k) {
    SearchQuery query;
    query.mode = SearchMode::Hybrid;
    query.filters.glottocodes = {problem.annotation.glottocode};
    query.top_k = top_k;
    std::string head = problem.statement.substr(0, 240);
    query.text = problem.annotation.language + " " + head;
    return query;
}

GrammarBrief summarize_grammar(const Problem& problem, const std::vector<SearchHit>& hits,
                               const ChatFn& chat, int max_chunks) {
    GrammarBrief brief;
    if (hits.empty()) {
        brief.no_reference = true;
        return brief;
    }
    std::string user = "Summarize the grammatical features of " + problem.annotation.language +
                       " that are relevant to the task below, based only on these reference "
                       "grammar excerpts.\n\nTask:\n" +
                       problem.statement.substr(0, 400) + "\n\nExcerpts:\n";
    int used = 0;
    for (const auto& hit : hits) {
        if (used >= max_chunks) break;
        user += "---\n";
        if (!hit.chunk->context_header.empty()) user += "[" + hit.chunk->context_header + "]\n";
        user += hit.chunk->text + "\n";
        ++used;
    }
    user += "---\nWrite a concise brief of the key grammatical facts.";
    try {
        brief.text = chat("You are a field linguist summarizing reference grammar material.", user);
    } catch (const std::exception& e) {
        brief.warning = std::string("grammar summarization failed: ") + e.what();
    }
    return brief;
}

}  // namespace harness
