#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bbj/object.hpp"
#include "bbj/word_spec.hpp"

namespace bbj {

struct SourceLoc {
  std::string file;
  int line = 0;
  std::string str() const { return file + ":" + std::to_string(line); }
};

// Thrown for any assembly failure. Every message carries a source location.
class AssemblyError : public std::runtime_error {
 public:
  explicit AssemblyError(std::vector<std::string> messages);
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

// ---------------------------------------------------------------------------
// Expressions

enum class LexKind { Ident, Number, Question, Plus, Minus, LParen, RParen, Quote };

struct Lexeme {
  LexKind kind;
  std::string text;
  friend bool operator==(const Lexeme&, const Lexeme&) = default;
};

std::vector<Lexeme> lex_expr(std::string_view text);
std::string lexemes_text(const std::vector<Lexeme>& lx);

// One signed summand of a word expression.
struct Component {
  enum class Kind { Literal, Symbol, Relative, BuiltinW, BuiltinK };
  Kind kind = Kind::Literal;
  bool negate = false;
  Word literal = 0;     // Literal (two's complement in 64 bits)
  std::int64_t n = 0;   // Relative: n cells from the containing cell
  std::string name;     // Symbol
};

struct ParsedExpr {
  std::vector<Component> term;
  std::vector<Component> offset;
};

ParsedExpr parse_expr(const std::vector<Lexeme>& lx);

// Thrown by eval_expr for a symbol missing from the table.
class UnresolvedSymbol : public std::runtime_error {
 public:
  explicit UnresolvedSymbol(std::string name)
      : std::runtime_error("unresolved symbol '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// (term + offset) mod 2^word_size, where n? means position + n * word_size.
Word eval_expr(const ParsedExpr& e, BitAddress position,
               const std::map<std::string, BitAddress>& symbols, const WordSpec& spec);

// ---------------------------------------------------------------------------
// Source lines and macros

struct WordExpr {
  std::vector<std::string> labels;
  std::vector<Lexeme> lexemes;  // term, optionally followed by ' and an offset
  std::string text() const;
};

struct SourceLine {
  enum class Kind { Words, Invocation };
  Kind kind = Kind::Words;
  std::vector<WordExpr> exprs;
  // Invocation: labels bound to the first cell of the expansion.
  // Words: labels after the last expression, bound to the next cell.
  std::vector<std::string> labels;
  std::string macro;
  std::vector<std::vector<Lexeme>> args;
  bool conditional = false;
  std::string trigger;
  SourceLoc loc;
};

struct MacroDef {
  std::string name;
  std::vector<std::string> formals;
  std::vector<std::string> externals;
  std::vector<SourceLine> body;
  std::set<std::string> locals;  // labels defined in the body
  SourceLoc loc;
};

struct ParsedSource {
  std::vector<SourceLine> lines;
  std::map<std::string, MacroDef> macros;
};

struct IncludedFile {
  std::string key;  // identity used for include-once
  std::string display_name;
  std::string text;
  std::filesystem::path dir;
};

class IncludeResolver {
 public:
  virtual ~IncludeResolver() = default;
  virtual std::optional<IncludedFile> resolve(const std::string& name,
                                              const std::filesystem::path& from_dir) const = 0;
  // Places searched, for error messages.
  virtual std::vector<std::string> search_description(
      const std::filesystem::path& from_dir) const = 0;
};

// Searches the including file's directory, then the given paths in order,
// then falls back to the generated library for the name "lib".
class FileIncludeResolver : public IncludeResolver {
 public:
  FileIncludeResolver(WordSpec spec, std::vector<std::filesystem::path> paths);
  std::optional<IncludedFile> resolve(const std::string& name,
                                      const std::filesystem::path& from_dir) const override;
  std::vector<std::string> search_description(
      const std::filesystem::path& from_dir) const override;

 private:
  WordSpec spec_;
  std::vector<std::filesystem::path> paths_;
};

inline constexpr const char* kBuiltinLibName = "lib";

ParsedSource parse(std::string_view text, const std::string& file_name,
                   const std::filesystem::path& dir, const IncludeResolver& resolver);

// ---------------------------------------------------------------------------
// Expansion

struct FlatExpr {
  std::vector<std::string> labels;
  std::string text;
  ParsedExpr expr;
};

struct FlatLine {
  std::vector<FlatExpr> exprs;
  std::vector<std::string> trailing_labels;
  bool conditional = false;
  std::string trigger;
  SourceLoc loc;
};

// Appends "?" to a line of exactly two expressions.
void pad_implicit_c(std::vector<WordExpr>& exprs);

// Replaces every macro invocation by its body, recursively. Body-local labels
// get a unique "$N" suffix per expansion. Warnings are appended to warnings.
std::vector<FlatLine> expand(const ParsedSource& src, std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Layout and resolution

struct Layout {
  std::vector<BitAddress> line_address;  // address of each line's first cell
  std::map<std::string, BitAddress> symbols;
  std::size_t cell_count = 0;
};

// Assigns consecutive cells to the active lines in order. Throws on duplicate labels.
Layout layout(const std::vector<FlatLine>& lines, const std::vector<bool>& active,
              const WordSpec& spec);

// Conditional-inclusion fixpoint: starting from seed (or from the
// unconditional lines), activates conditional lines whose trigger is
// referenced but undefined until nothing changes.
std::vector<bool> activate(const std::vector<FlatLine>& lines,
                           std::optional<std::vector<bool>> seed = std::nullopt);

struct AssembleOptions {
  unsigned word_size = 32;
  std::vector<std::filesystem::path> include_paths;
  std::uint64_t max_memory_bits = std::uint64_t{1} << 26;
};

ObjectProgram resolve_with_conditionals(const std::vector<FlatLine>& lines, const WordSpec& spec,
                                        std::uint64_t max_memory_bits,
                                        std::vector<std::string>* warnings = nullptr);

struct AssembleResult {
  ObjectProgram object;
  std::vector<std::string> warnings;
};

AssembleResult assemble(std::string_view text, const std::string& file_name,
                        const AssembleOptions& opts);
AssembleResult assemble_file(const std::filesystem::path& path, const AssembleOptions& opts);

// Post-expansion listing: one padded line per row, conditional rows prefixed
// with ":trigger:on" or ":trigger:off".
std::string expand_dump(std::string_view text, const std::string& file_name,
                        const AssembleOptions& opts);

}  // namespace bbj
