#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qapt::textcodec {

enum class TextKind { Question, Program };

/// Questions split on whitespace with "?,.!;:" as separate tokens; programs
/// split into DSL lexemes (identifiers, numbers, parens, commas). Case is kept.
std::vector<std::string> tokenize(std::string_view text, TextKind kind);

/// Program if the text opens with a query function call, else Question.
TextKind detect_kind(std::string_view text);

/// Inverse of tokenize: questions get single spaces except before
/// punctuation; programs are concatenated.
std::string join_tokens(std::span<const std::string> tokens, TextKind kind);

bool is_number_token(std::string_view token);

class Vocab {
public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kBos = 1;
  static constexpr std::int32_t kEos = 2;
  static constexpr std::int32_t kUnk = 3;
  static constexpr std::int32_t kValue = 4;
  static constexpr std::int32_t kReserved = 5;

  /// Reserved tokens only.
  Vocab();

  /// Appends a token unless present; returns its id.
  std::int32_t add(const std::string& token);

  std::optional<std::int32_t> find(std::string_view token) const;
  /// UNK for unknown tokens.
  std::int32_t id(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// One token per line; line index is the id.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Reserved tokens first, then every non-numeric token in first-encounter
/// order. The kind of each text is detected.
Vocab build_vocab(std::span<const std::string> corpus);

struct TokenSequence {
  std::vector<std::int32_t> ids;  // BOS ... EOS
  std::vector<double> values;     // masked literals, in encounter order

  bool operator==(const TokenSequence&) const = default;
};

TokenSequence encode(std::string_view text, const Vocab& vocab, std::optional<TextKind> kind = std::nullopt);

struct Decoded {
  std::string text;
  std::vector<std::string> warnings;
};

/// Stops at the first EOS. Surplus VALUE ids render as "VALUE" with a
/// warning; unused dictionary entries are dropped with a warning.
Decoded decode(const TokenSequence& seq, const Vocab& vocab, std::optional<TextKind> kind = std::nullopt);

nlohmann::ordered_json to_json(const TokenSequence& seq);
TokenSequence sequence_from_json(const nlohmann::json& j);

}  // namespace qapt::textcodec
