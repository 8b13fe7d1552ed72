#include "harness/chrf.hpp"

#include <map>
#include <stdexcept>

#include "harness/text.hpp"

namespace harness {

namespace {

std::vector<char32_t> score_chars(const std::string& s, bool strip_ws) {
    std::vector<char32_t> cps = utf8_decode(s);
    if (!strip_ws) return cps;
    std::vector<char32_t> out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        if (!is_unicode_space(cp)) out.push_back(cp);
    }
    return out;
}

using NgramCounts = std::map<std::u32string, int>;

NgramCounts ngrams(const std::vector<char32_t>& chars, int n) {
    NgramCounts counts;
    if (static_cast<int>(chars.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= chars.size(); ++i) {
        counts[std::u32string(chars.begin() + i, chars.begin() + i + n)]++;
    }
    return counts;
}

}  // namespace

double chrf(const std::string& hypothesis, const std::string& reference, const ChrfParams& params) {
    if (reference.empty()) throw std::invalid_argument("chrf: empty reference");
    if (params.char_order < 1) throw std::invalid_argument("chrf: char_order must be >= 1");
    if (!(params.beta > 0)) throw std::invalid_argument("chrf: beta must be positive");
    if (hypothesis.empty()) return 0.0;

    const auto hyp = score_chars(hypothesis, params.whitespace_stripped);
    const auto ref = score_chars(reference, params.whitespace_stripped);

    double precision_sum = 0.0;
    double recall_sum = 0.0;
    int effective_orders = 0;
    for (int n = 1; n <= params.char_order; ++n) {
        NgramCounts ref_counts = ngrams(ref, n);
        if (ref_counts.empty()) continue;  // order carries no reference n-grams
        NgramCounts hyp_counts = ngrams(hyp, n);
        long long hyp_total = 0;
        long long ref_total = 0;
        long long matches = 0;
        for (const auto& [gram, count] : hyp_counts) {
            hyp_total += count;
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) matches += std::min(count, it->second);
        }
        for (const auto& [gram, count] : ref_counts) ref_total += count;
        precision_sum += hyp_total > 0 ? double(matches) / double(hyp_total) : 0.0;
        recall_sum += double(matches) / double(ref_total);
        ++effective_orders;
    }
    if (effective_orders == 0) return 0.0;

    const double precision = precision_sum / effective_orders;
    const double recall = recall_sum / effective_orders;
    if (precision == 0.0 && recall == 0.0) return 0.0;
    const double b2 = params.beta * params.beta;
    const double denom = b2 * precision + recall;
    if (denom == 0.0) return 0.0;
    return 100.0 * (1.0 + b2) * precision * recall / denom;
}

CorpusChrf corpus_chrf(const std::vector<std::pair<std::string, std::string>>& pairs,
                       const ChrfParams& params, bool skip_empty) {
    if (pairs.empty()) throw std::invalid_argument("corpus_chrf: no pairs");
    CorpusChrf result;
    double sum = 0.0;
    for (const auto& [hyp, ref] : pairs) {
        const bool missing = trim(hyp).empty();
        if (missing) {
            ++result.n_missing;
            if (skip_empty) continue;
        }
        sum += chrf(hyp, ref, params);
        ++result.n_scored;
    }
    result.mean_score = result.n_scored > 0 ? sum / result.n_scored : 0.0;
    return result;
}

}  // namespace harness
