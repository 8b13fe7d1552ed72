#pragma once

#include <string>
#include <utility>
#include <vector>

namespace harness {

struct ChrfParams {
    int char_order = 6;
    double beta = 2.0;
    bool whitespace_stripped = true;
};

/// Character n-gram F-score on the 0-100 scale. Precision and recall are
/// clipped-count ratios per order, macro-averaged over orders 1..char_order
/// (orders with no reference n-grams are skipped), then combined as
/// (1+beta^2)*P*R / (beta^2*P + R), 0 when P=R=0. n-grams run over code
/// points with whitespace removed when whitespace_stripped is set.
/// Empty reference -> std::invalid_argument; empty hypothesis -> 0.
double chrf(const std::string& hypothesis, const std::string& reference, const ChrfParams& params);

struct CorpusChrf {
    double mean_score = 0.0;
    int n_scored = 0;
    int n_missing = 0;
};

/// Arithmetic mean of sentence-level scores. Hypotheses that are empty
/// after trimming count as missing and, when skip_empty, are excluded
/// from the mean.
CorpusChrf corpus_chrf(const std::vector<std::pair<std::string, std::string>>& pairs,
                       const ChrfParams& params, bool skip_empty);

}  // namespace harness
