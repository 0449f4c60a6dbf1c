#include <cctype>
#include <charconv>
#include <sstream>

#include "bbj/assembler.hpp"

namespace bbj {

AssemblyError::AssemblyError(std::vector<std::string> messages)
    : std::runtime_error([&] {
        std::string s;
        for (const auto& m : messages) {
          if (!s.empty()) s += '\n';
          s += m;
        }
        return s;
      }()),
      messages_(std::move(messages)) {}

namespace {

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

}  // namespace

std::vector<Lexeme> lex_expr(std::string_view text) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (ident_char(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(text[j])) ++j;
      std::string word(text.substr(i, j - i));
      const bool digits = std::isdigit(static_cast<unsigned char>(word[0]));
      if (digits) {
        for (char d : word)
          if (!std::isdigit(static_cast<unsigned char>(d)))
            throw std::invalid_argument("malformed number '" + word + "'");
      }
      out.push_back({digits ? LexKind::Number : LexKind::Ident, std::move(word)});
      i = j;
      continue;
    }
    LexKind k;
    switch (c) {
      case '?': k = LexKind::Question; break;
      case '+': k = LexKind::Plus; break;
      case '-': k = LexKind::Minus; break;
      case '(': k = LexKind::LParen; break;
      case ')': k = LexKind::RParen; break;
      case '\'': k = LexKind::Quote; break;
      default:
        throw std::invalid_argument(std::string("unexpected character '") + c + "' in '" +
                                    std::string(text) + "'");
    }
    out.push_back({k, std::string(1, c)});
    ++i;
  }
  return out;
}

std::string lexemes_text(const std::vector<Lexeme>& lx) {
  std::string s;
  for (const auto& l : lx) s += l.text;
  return s;
}

std::string WordExpr::text() const { return lexemes_text(lexemes); }

namespace {

class ExprParser {
 public:
  explicit ExprParser(const std::vector<Lexeme>& lx) : lx_(lx) {}

  ParsedExpr parse() {
    if (lx_.empty()) fail("empty expression");
    ParsedExpr e;
    term(e.term, false);
    if (accept(LexKind::Quote)) {
      if (at_end()) fail("missing bit offset after '");
      term(e.offset, false);
    }
    if (!at_end()) fail("unexpected '" + lx_[pos_].text + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument(why + " in expression '" + lexemes_text(lx_) + "'");
  }
  bool at_end() const { return pos_ >= lx_.size(); }
  bool peek(LexKind k) const { return !at_end() && lx_[pos_].kind == k; }
  bool accept(LexKind k) {
    if (!peek(k)) return false;
    ++pos_;
    return true;
  }

  // term := ['-'|'+'] atom | '(' sum ')'
  void term(std::vector<Component>& out, bool negate) {
    if (accept(LexKind::LParen)) {
      sum(out, negate);
      if (!accept(LexKind::RParen)) fail("missing ')'");
      return;
    }
    signed_atom(out, negate);
  }

  void sum(std::vector<Component>& out, bool negate) {
    signed_atom(out, negate);
    while (true) {
      if (accept(LexKind::Plus)) {
        binary_operand(out, negate);
      } else if (accept(LexKind::Minus)) {
        binary_operand(out, !negate);
      } else {
        return;
      }
    }
  }

  // The operand after a binary operator; a second sign is unary.
  void binary_operand(std::vector<Component>& out, bool negate) { signed_atom(out, negate); }

  void signed_atom(std::vector<Component>& out, bool negate) {
    bool unary_minus = false;
    if (accept(LexKind::Minus)) {
      unary_minus = true;
    } else {
      accept(LexKind::Plus);
    }
    atom(out, negate, unary_minus);
  }

  void atom(std::vector<Component>& out, bool negate, bool unary_minus) {
    if (at_end()) fail("missing operand");
    const Lexeme& l = lx_[pos_];
    Component c;
    switch (l.kind) {
      case LexKind::Number: {
        ++pos_;
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(l.text.data(), l.text.data() + l.text.size(), v);
        if (ec != std::errc{}) fail("number '" + l.text + "' out of range");
        if (accept(LexKind::Question)) {
          if (v > static_cast<std::uint64_t>(INT32_MAX)) fail("relative offset too large");
          c.kind = Component::Kind::Relative;
          c.n = unary_minus ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
          c.negate = negate;
        } else {
          c.kind = Component::Kind::Literal;
          c.literal = v;
          c.negate = negate != unary_minus;
        }
        out.push_back(c);
        return;
      }
      case LexKind::Question:
        ++pos_;
        c.kind = Component::Kind::Relative;
        c.n = unary_minus ? -1 : 1;
        c.negate = negate;
        out.push_back(c);
        return;
      case LexKind::Ident:
        ++pos_;
        if (l.text == "w") {
          c.kind = Component::Kind::BuiltinW;
        } else if (l.text == "k") {
          c.kind = Component::Kind::BuiltinK;
        } else {
          c.kind = Component::Kind::Symbol;
          c.name = l.text;
        }
        c.negate = negate != unary_minus;
        out.push_back(c);
        return;
      case LexKind::LParen:
        ++pos_;
        sum(out, negate != unary_minus);
        if (!accept(LexKind::RParen)) fail("missing ')'");
        return;
      default:
        fail("unexpected '" + l.text + "'");
    }
  }

  const std::vector<Lexeme>& lx_;
  std::size_t pos_ = 0;
};

Word eval_sum(const std::vector<Component>& cs, BitAddress position,
              const std::map<std::string, BitAddress>& symbols, const WordSpec& spec) {
  Word acc = 0;
  for (const auto& c : cs) {
    Word v = 0;
    switch (c.kind) {
      case Component::Kind::Literal: v = c.literal; break;
      case Component::Kind::BuiltinW: v = spec.w; break;
      case Component::Kind::BuiltinK: v = spec.k; break;
      case Component::Kind::Relative:
        v = position + static_cast<Word>(c.n) * spec.word_size;
        break;
      case Component::Kind::Symbol: {
        auto it = symbols.find(c.name);
        if (it == symbols.end()) throw UnresolvedSymbol(c.name);
        v = it->second;
        break;
      }
    }
    acc += c.negate ? Word{0} - v : v;
  }
  return acc;
}

}  // namespace

ParsedExpr parse_expr(const std::vector<Lexeme>& lx) { return ExprParser(lx).parse(); }

Word eval_expr(const ParsedExpr& e, BitAddress position,
               const std::map<std::string, BitAddress>& symbols, const WordSpec& spec) {
  return spec.reduce(eval_sum(e.term, position, symbols, spec) +
                     eval_sum(e.offset, position, symbols, spec));
}

}  // namespace bbj
