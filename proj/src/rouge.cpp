#include "chartsum/rouge.hpp"

#include "chartsum/error.hpp"
#include "chartsum/util.hpp"

#include <algorithm>
#include <array>
#include <map>

namespace chartsum::rouge {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

// Short English function-word list; only used with remove_stopwords.
constexpr std::array<std::string_view, 64> kStopwords = {
    "a",     "about", "all",   "am",    "an",   "and",   "any",  "are",   "as",    "at",    "be",
    "been",  "but",   "by",    "can",   "did",  "do",    "does", "for",   "from",  "had",   "has",
    "have",  "he",    "her",   "his",   "i",    "if",    "in",   "into",  "is",    "it",    "its",
    "me",    "my",    "no",    "not",   "of",   "on",    "or",   "our",   "she",   "so",    "that",
    "the",   "their", "them",  "then",  "there", "these", "they", "this",  "to",    "was",   "we",
    "were",  "what",  "when",  "which", "who",  "will",  "with", "you",   "your",
};

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(const TokenSeq& seq, std::size_t n) {
    NgramCounts counts;
    if (seq.size() < n) {
        return counts;
    }
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
        std::vector<std::string_view> gram(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                           seq.begin() + static_cast<std::ptrdiff_t>(i + n));
        ++counts[gram];
    }
    return counts;
}

std::size_t ngram_total(const TokenSeq& seq, std::size_t n) { return seq.size() >= n ? seq.size() - n + 1 : 0; }

}  // namespace

bool is_stopword(std::string_view token) {
    return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

TokenSeq tokenize(std::string_view text, const TokenizeOptions& opts) {
    TokenSeq tokens;
    std::string current;
    auto flush = [&] {
        if (current.empty()) {
            return;
        }
        if (!(opts.remove_stopwords && is_stopword(current))) {
            tokens.push_back(opts.stem ? porter_stem(current) : current);
        }
        current.clear();
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

RougeScore make_score(std::size_t overlap, std::size_t candidate_total, std::size_t reference_total) {
    if (candidate_total == 0 || reference_total == 0) {
        return {};
    }
    RougeScore s;
    s.precision = static_cast<double>(overlap) / static_cast<double>(candidate_total);
    s.recall = static_cast<double>(overlap) / static_cast<double>(reference_total);
    // 2pr/(p+r) == 2o/(c+r); the count form rounds once, so f1 never
    // exceeds max(p, r) by an ulp.
    s.f1 = static_cast<double>(2 * overlap) / static_cast<double>(candidate_total + reference_total);
    return s;
}

std::size_t ngram_overlap(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n) {
    if (n == 0) {
        throw Error(ErrorKind::InvalidArgument, "rouge_n needs n >= 1");
    }
    auto cand = count_ngrams(candidate, n);
    auto ref = count_ngrams(reference, n);
    std::size_t overlap = 0;
    auto ci = cand.begin();
    auto ri = ref.begin();
    while (ci != cand.end() && ri != ref.end()) {
        if (ci->first < ri->first) {
            ++ci;
        } else if (ri->first < ci->first) {
            ++ri;
        } else {
            overlap += std::min(ci->second, ri->second);
            ++ci;
            ++ri;
        }
    }
    return overlap;
}

RougeScore rouge_n(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n) {
    auto overlap = ngram_overlap(candidate, reference, n);
    return make_score(overlap, ngram_total(candidate, n), ngram_total(reference, n));
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
    if (a.empty() || b.empty()) {
        return 0;
    }
    // Two rolling rows of the standard DP table.
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
    return make_score(lcs_length(candidate, reference), candidate.size(), reference.size());
}

DocumentScores score_document(const ScoringPair& pair, const TokenizeOptions& opts) {
    auto cand = tokenize(pair.candidate, opts);
    auto ref = tokenize(pair.reference, opts);
    return DocumentScores{pair.id, rouge_n(cand, ref, 1), rouge_n(cand, ref, 2), rouge_l(cand, ref)};
}

double stable_mean(std::vector<double> values) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

AggregateScores corpus_rouge(const std::vector<ScoringPair>& pairs, const TokenizeOptions& opts, std::size_t jobs) {
    if (pairs.empty()) {
        throw Error(ErrorKind::EmptyEvaluation, "no candidate/reference pairs to score");
    }
    AggregateScores agg;
    agg.per_document.resize(pairs.size());
    parallel_for(pairs.size(), jobs, [&](std::size_t i) { agg.per_document[i] = score_document(pairs[i], opts); });

    auto mean_of = [&](auto field) {
        std::vector<double> p, r, f;
        for (const auto& d : agg.per_document) {
            const RougeScore& s = d.*field;
            p.push_back(s.precision);
            r.push_back(s.recall);
            f.push_back(s.f1);
        }
        return RougeScore{stable_mean(p), stable_mean(r), stable_mean(f)};
    };
    agg.rouge1 = mean_of(&DocumentScores::rouge1);
    agg.rouge2 = mean_of(&DocumentScores::rouge2);
    agg.rougeL = mean_of(&DocumentScores::rougeL);
    return agg;
}

}  // namespace chartsum::rouge
