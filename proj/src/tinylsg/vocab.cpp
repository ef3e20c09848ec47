#include "chartsum/tinylsg/vocab.hpp"

#include "chartsum/error.hpp"
#include "chartsum/rouge.hpp"

#include <algorithm>
#include <map>

namespace chartsum::tinylsg {

Vocab::Vocab() : tokens_{"<pad>", "<bos>", "<eos>", "<unk>", "<global>"} { index(); }

void Vocab::index() {
    ids_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        auto [it, inserted] = ids_.emplace(tokens_[i], static_cast<TokenId>(i));
        if (!inserted) {
            throw Error(ErrorKind::MalformedFile, "duplicate vocabulary entry \"" + tokens_[i] + "\"", tokens_[i]);
        }
    }
}

Vocab Vocab::build(const std::vector<std::string>& texts, std::size_t min_freq) {
    std::vector<std::vector<std::string>> seqs;
    seqs.reserve(texts.size());
    for (const auto& t : texts) {
        seqs.push_back(rouge::tokenize(t));
    }
    return build_from_tokens(seqs, min_freq);
}

Vocab Vocab::build_from_tokens(const std::vector<std::vector<std::string>>& sequences, std::size_t min_freq) {
    if (min_freq < 1) {
        throw Error(ErrorKind::InvalidArgument, "min_freq must be >= 1");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& seq : sequences) {
        for (const auto& tok : seq) {
            ++counts[tok];
        }
    }
    if (counts.empty()) {
        throw Error(ErrorKind::EmptyCorpus, "no tokens to build a vocabulary from");
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [tok, n] : counts) {
        if (n >= min_freq) {
            kept.emplace_back(tok, n);
        }
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocab v;
    for (auto& [tok, n] : kept) {
        if (v.ids_.count(tok) == 0) {
            v.tokens_.push_back(tok);
        }
    }
    v.index();
    return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
    Vocab reserved;
    if (tokens.size() < reserved.tokens_.size() ||
        !std::equal(reserved.tokens_.begin(), reserved.tokens_.end(), tokens.begin())) {
        throw Error(ErrorKind::MalformedFile, "vocabulary does not start with the reserved entries");
    }
    Vocab v;
    v.tokens_ = std::move(tokens);
    v.index();
    return v;
}

TokenId Vocab::id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw Error(ErrorKind::DimensionMismatch, "token id " + std::to_string(id) + " outside vocabulary");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

std::vector<TokenId> Vocab::encode(const std::vector<std::string>& tokens) const {
    std::vector<TokenId> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        out.push_back(id(t));
    }
    return out;
}

std::vector<TokenId> Vocab::encode_text(std::string_view text) const { return encode(rouge::tokenize(text)); }

std::vector<std::string> Vocab::decode(const std::vector<TokenId>& ids) const {
    std::vector<std::string> out;
    for (auto id : ids) {
        if (id >= kNumReserved) {
            out.push_back(token(id));
        }
    }
    return out;
}

}  // namespace chartsum::tinylsg
