#include "midthink/tokenizer.hpp"

#include "midthink/error.hpp"

namespace midthink {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

// Calls emit(begin, end) for every token span of the whitespace rule.
template <typename Emit>
void scan_whitespace_tokens(std::string_view text, Emit&& emit) {
    std::size_t start = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();
    bool seen_word = false;
    while (i < n) {
        // leading separator run
        std::size_t j = i;
        while (j < n && is_space(text[j])) ++j;
        if (j == n) break;  // trailing whitespace
        std::size_t k = j;
        while (k < n && !is_space(text[k])) ++k;
        if (seen_word) emit(start, i);
        start = i;
        seen_word = true;
        i = k;
    }
    if (seen_word)
        emit(start, n);
    else if (n > 0)
        emit(std::size_t{0}, n);
}

}  // namespace

std::string_view to_string(TokenizerKind kind) {
    switch (kind) {
        case TokenizerKind::reference_whitespace: return "reference";
        case TokenizerKind::remote_endpoint: return "remote";
    }
    return "unknown";
}

TokenizerKind tokenizer_kind_from_string(std::string_view text) {
    if (text == "reference" || text == "reference-whitespace" || text == "whitespace")
        return TokenizerKind::reference_whitespace;
    if (text == "remote" || text == "remote-endpoint" || text == "endpoint")
        return TokenizerKind::remote_endpoint;
    throw ConfigError("unknown tokenizer kind '" + std::string(text) +
                      "'; expected 'reference' or 'remote'");
}

TokenSeq WhitespaceTokenizer::encode(std::string_view text) const {
    TokenSeq out;
    scan_whitespace_tokens(text, [&](std::size_t b, std::size_t e) {
        out.push_back(Token{std::string(text.substr(b, e - b)), std::nullopt});
    });
    return out;
}

std::string WhitespaceTokenizer::decode(std::span<const Token> tokens) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!tokens[i].piece)
            throw TokenizerError("token " + std::to_string(i) + " has no text piece",
                                 static_cast<long>(i));
        out += *tokens[i].piece;
    }
    return out;
}

std::size_t whitespace_token_count(std::string_view text) {
    std::size_t count = 0;
    scan_whitespace_tokens(text, [&](std::size_t, std::size_t) { ++count; });
    return count;
}

}  // namespace midthink
