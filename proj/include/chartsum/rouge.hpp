#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace chartsum::rouge {

using TokenSeq = std::vector<std::string>;

struct TokenizeOptions {
    bool stem = false;
    bool remove_stopwords = false;
};

/// Lowercases ASCII and splits on runs of characters that are not ASCII
/// alphanumerics. Bytes >= 0x80 count as word characters, so UTF-8 words
/// stay whole.
TokenSeq tokenize(std::string_view text, const TokenizeOptions& opts = {});

/// Porter (1980) suffix stripper on a lowercase ASCII word.
std::string porter_stem(std::string_view word);
bool is_stopword(std::string_view token);

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    friend bool operator==(const RougeScore&, const RougeScore&) = default;
};

/// Builds a score from raw counts; any zero denominator gives all zeros.
RougeScore make_score(std::size_t overlap, std::size_t candidate_total, std::size_t reference_total);

/// Clipped n-gram overlap.
RougeScore rouge_n(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n);
std::size_t ngram_overlap(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);
/// Whole-text LCS (not the summary-level union variant).
RougeScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

struct DocumentScores {
    std::string id;
    RougeScore rouge1;
    RougeScore rouge2;
    RougeScore rougeL;
};

struct AggregateScores {
    RougeScore rouge1;
    RougeScore rouge2;
    RougeScore rougeL;
    std::vector<DocumentScores> per_document;  // input order
};

struct ScoringPair {
    std::string id;
    std::string candidate;
    std::string reference;
};

DocumentScores score_document(const ScoringPair& pair, const TokenizeOptions& opts = {});

/// Unweighted mean of per-document scores. Throws EmptyEvaluation on no pairs.
/// Means are summed in sorted-value order, so permuting the input cannot
/// change a single bit of the aggregate.
AggregateScores corpus_rouge(const std::vector<ScoringPair>& pairs, const TokenizeOptions& opts = {},
                             std::size_t jobs = 1);

/// Order-independent arithmetic mean (see corpus_rouge).
double stable_mean(std::vector<double> values);

}  // namespace chartsum::rouge
