#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chartsum::tinylsg {

using TokenId = std::int32_t;

class Vocab {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kBos = 1;
    static constexpr TokenId kEos = 2;
    static constexpr TokenId kUnk = 3;
    static constexpr TokenId kGlobal = 4;
    static constexpr TokenId kNumReserved = 5;

    /// Reserved entries only.
    Vocab();

    /// Tokenizes with rouge::tokenize, then build_from_tokens.
    static Vocab build(const std::vector<std::string>& texts, std::size_t min_freq = 1);
    /// Tokens seen at least `min_freq` times, ordered by frequency (desc),
    /// then lexicographically. Throws EmptyCorpus if nothing was seen.
    static Vocab build_from_tokens(const std::vector<std::vector<std::string>>& sequences, std::size_t min_freq = 1);
    /// Rebuilds from a stored token list (reserved entries included).
    static Vocab from_tokens(std::vector<std::string> tokens);

    std::size_t size() const noexcept { return tokens_.size(); }
    TokenId id(std::string_view token) const;
    const std::string& token(TokenId id) const;
    bool contains(std::string_view token) const;
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    std::vector<TokenId> encode(const std::vector<std::string>& tokens) const;
    std::vector<TokenId> encode_text(std::string_view text) const;
    /// Drops reserved ids.
    std::vector<std::string> decode(const std::vector<TokenId>& ids) const;

    friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

private:
    void index();

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace chartsum::tinylsg
