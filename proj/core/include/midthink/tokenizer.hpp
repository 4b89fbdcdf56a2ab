#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace midthink {

/// One token. Local tokenizers always fill `piece`; remote endpoints may
/// only return ids, in which case decoding needs the endpoint again.
struct Token {
    std::optional<std::string> piece;
    std::optional<std::int64_t> id;

    bool operator==(const Token&) const = default;
};

using TokenSeq = std::vector<Token>;

enum class TokenizerKind { reference_whitespace, remote_endpoint };

std::string_view to_string(TokenizerKind kind);
TokenizerKind tokenizer_kind_from_string(std::string_view text);

class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    virtual std::string name() const = 0;
    virtual TokenizerKind kind() const = 0;
    virtual TokenSeq encode(std::string_view text) const = 0;
    virtual std::string decode(std::span<const Token> tokens) const = 0;

    std::size_t count(std::string_view text) const { return encode(text).size(); }
};

/// Splits on runs of whitespace. Each run of whitespace is kept with the
/// token that follows it; trailing whitespace stays on the last token. A
/// whitespace-only string is one token, so decode(encode(s)) == s always.
///
///   "a b  c"  ->  ["a", " b", "  c"]
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::string name() const override { return "reference-whitespace"; }
    TokenizerKind kind() const override { return TokenizerKind::reference_whitespace; }
    TokenSeq encode(std::string_view text) const override;
    std::string decode(std::span<const Token> tokens) const override;
};

/// Fast path used by the mock server and metrics: number of tokens the
/// whitespace tokenizer would produce, without materializing them.
std::size_t whitespace_token_count(std::string_view text);

}  // namespace midthink
