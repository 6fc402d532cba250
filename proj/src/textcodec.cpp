#include "qapt/textcodec.hpp"

#include "qapt/dsl.hpp"
#include "qapt/error.hpp"

#include <cctype>
#include <fstream>

namespace qapt::textcodec {

namespace {

constexpr std::string_view kQuestionPunct = "?,.!;:";
constexpr std::string_view kSplitPunct = "?,!;:";  // '.' may sit inside numbers

const std::string kReservedTokens[] = {"<pad>", "<bos>", "<eos>", "<unk>", "VALUE"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void tokenize_chunk(std::string_view chunk, std::vector<std::string>& out) {
  while (!chunk.empty()) {
    if (kSplitPunct.find(chunk.front()) != std::string_view::npos) {
      out.emplace_back(1, chunk.front());
      chunk.remove_prefix(1);
      continue;
    }
    std::size_t n = 0;
    while (n < chunk.size() && kSplitPunct.find(chunk[n]) == std::string_view::npos) ++n;
    std::string_view run = chunk.substr(0, n);
    chunk.remove_prefix(n);

    std::size_t trailing_dots = 0;
    if (!is_number_token(run))
      while (trailing_dots < run.size() && run[run.size() - 1 - trailing_dots] == '.') ++trailing_dots;
    if (trailing_dots < run.size()) out.emplace_back(run.substr(0, run.size() - trailing_dots));
    for (std::size_t i = 0; i < trailing_dots; ++i) out.emplace_back(".");
  }
}

std::vector<std::string> tokenize_question(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokenize_chunk(text.substr(start, i - start), out);
  }
  return out;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<std::string> tokenize_program(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (ident_start(c)) {
      while (i < text.size() && ident_char(text[i])) ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
      ++i;
      while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.' ||
                                 text[i] == 'e' || text[i] == 'E' || text[i] == '+' || text[i] == '-'))
        ++i;
    } else {
      ++i;
    }
    out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

}  // namespace

bool is_number_token(std::string_view token) { return dsl::parse_number(token).has_value(); }

std::vector<std::string> tokenize(std::string_view text, TextKind kind) {
  return kind == TextKind::Program ? tokenize_program(text) : tokenize_question(text);
}

TextKind detect_kind(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && is_space(text[i])) ++i;
  const std::size_t start = i;
  while (i < text.size() && ident_char(text[i])) ++i;
  const std::string_view head = text.substr(start, i - start);
  while (i < text.size() && is_space(text[i])) ++i;
  const bool call = i < text.size() && text[i] == '(';
  if (call && (dsl::query_from_name(head) || head == dsl::kRunFunction)) return TextKind::Program;
  return TextKind::Question;
}

std::string join_tokens(std::span<const std::string> tokens, TextKind kind) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    const bool punct = t.size() == 1 && kQuestionPunct.find(t[0]) != std::string_view::npos;
    if (kind == TextKind::Question && i > 0 && !punct) out += ' ';
    out += t;
  }
  return out;
}

Vocab::Vocab() {
  for (const auto& t : kReservedTokens) add(t);
}

std::int32_t Vocab::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<std::int32_t> Vocab::find(std::string_view token) const {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  return std::nullopt;
}

std::int32_t Vocab::id(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) return tokens_[kUnk];
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocab file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw Error("failed writing vocab file " + path.string());
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open vocab file " + path.string());
  Vocab v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno < static_cast<std::size_t>(kReserved)) {
      if (line != kReservedTokens[lineno])
        throw Error(path.string() + ": line " + std::to_string(lineno + 1) + " must be reserved token " +
                    kReservedTokens[lineno]);
    } else {
      if (v.find(line)) throw Error(path.string() + ": duplicate token '" + line + "'");
      v.add(line);
    }
    ++lineno;
  }
  if (lineno < static_cast<std::size_t>(kReserved)) throw Error(path.string() + ": missing reserved tokens");
  return v;
}

Vocab build_vocab(std::span<const std::string> corpus) {
  Vocab v;
  for (const auto& text : corpus)
    for (auto& t : tokenize(text, detect_kind(text)))
      if (!is_number_token(t)) v.add(t);
  return v;
}

TokenSequence encode(std::string_view text, const Vocab& vocab, std::optional<TextKind> kind) {
  TokenSequence seq;
  seq.ids.push_back(Vocab::kBos);
  for (const auto& t : tokenize(text, kind.value_or(detect_kind(text)))) {
    if (auto value = dsl::parse_number(t)) {
      seq.ids.push_back(Vocab::kValue);
      seq.values.push_back(*value);
    } else {
      seq.ids.push_back(vocab.id(t));
    }
  }
  seq.ids.push_back(Vocab::kEos);
  return seq;
}

Decoded decode(const TokenSequence& seq, const Vocab& vocab, std::optional<TextKind> kind) {
  Decoded out;
  std::vector<std::string> tokens;
  std::size_t next_value = 0;
  std::size_t surplus = 0;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    const auto id = seq.ids[i];
    if (id == Vocab::kEos) break;
    if (id == Vocab::kBos || id == Vocab::kPad) continue;
    if (id == Vocab::kValue) {
      if (next_value < seq.values.size()) {
        tokens.push_back(dsl::format_number(seq.values[next_value++]));
      } else {
        tokens.emplace_back("VALUE");
        ++surplus;
      }
      continue;
    }
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size())
      out.warnings.push_back("token id " + std::to_string(id) + " is outside the vocabulary");
    tokens.push_back(vocab.token(id));
  }
  if (surplus > 0)
    out.warnings.push_back(std::to_string(surplus) + " VALUE token(s) had no dictionary entry");
  if (next_value < seq.values.size())
    out.warnings.push_back(std::to_string(seq.values.size() - next_value) + " unused value(s) dropped");

  TextKind k = TextKind::Question;
  if (kind) {
    k = *kind;
  } else if (!tokens.empty() && (dsl::query_from_name(tokens.front()) || tokens.front() == dsl::kRunFunction)) {
    k = TextKind::Program;
  }
  out.text = join_tokens(tokens, k);
  return out;
}

nlohmann::ordered_json to_json(const TokenSequence& seq) {
  nlohmann::ordered_json j;
  j["ids"] = seq.ids;
  j["values"] = seq.values;
  return j;
}

TokenSequence sequence_from_json(const nlohmann::json& j) {
  TokenSequence seq;
  seq.ids = j.at("ids").get<std::vector<std::int32_t>>();
  seq.values = j.value("values", std::vector<double>{});
  return seq;
}

}  // namespace qapt::textcodec
