#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "bbj/assembler.hpp"
#include "bbj/stdlib.hpp"

namespace bbj {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  for (char c : s)
    if (!is_ident_char(c)) return false;
  return true;
}

bool is_builtin(std::string_view s) { return s == "w" || s == "k"; }

[[noreturn]] void fail(const SourceLoc& loc, const std::string& msg) {
  throw AssemblyError({loc.str() + ": error: " + msg});
}

// Whitespace split that keeps parenthesized groups together.
std::vector<std::string> tokenize(std::string_view line, const SourceLoc& loc) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : line) {
    if (std::isspace(static_cast<unsigned char>(c)) && depth == 0) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '(') ++depth;
    if (c == ')' && --depth < 0) fail(loc, "unbalanced ')'");
    cur += c;
  }
  if (depth != 0) fail(loc, "unbalanced '('");
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Strips leading "name:" prefixes from a token.
std::string_view take_labels(std::string_view tok, std::vector<std::string>& labels,
                             const SourceLoc& loc) {
  while (!tok.empty() && is_ident_start(tok[0])) {
    std::size_t j = 0;
    while (j < tok.size() && is_ident_char(tok[j])) ++j;
    if (j >= tok.size() || tok[j] != ':') break;
    std::string name(tok.substr(0, j));
    if (is_builtin(name)) fail(loc, "'" + name + "' is reserved and cannot be a label");
    labels.push_back(std::move(name));
    tok.remove_prefix(j + 1);
  }
  return tok;
}

std::vector<Lexeme> lex_at(std::string_view text, const SourceLoc& loc) {
  try {
    auto lx = lex_expr(text);
    parse_expr(lx);  // syntax check only; parsing proper happens after expansion
    return lx;
  } catch (const std::invalid_argument& e) {
    fail(loc, e.what());
  }
}

std::vector<Lexeme> lex_arg(std::string_view text, const SourceLoc& loc) {
  if (text.find(':') != std::string_view::npos) fail(loc, "label inside macro argument '" +
                                                          std::string(text) + "'");
  auto lx = lex_at(text, loc);
  for (const auto& l : lx)
    if (l.kind == LexKind::Quote)
      fail(loc, "macro argument '" + std::string(text) + "' must not carry a bit offset");
  return lx;
}

SourceLine parse_command(const std::vector<std::string>& toks, const SourceLoc& loc) {
  SourceLine line;
  line.loc = loc;
  std::size_t i = 0;
  std::vector<std::string> pending;

  std::string first = toks[0];
  if (first[0] == ':') {
    line.conditional = true;
    first.erase(0, 1);
  }
  std::vector<std::string> work(toks);
  work[0] = first;

  for (; i < work.size(); ++i) {
    std::vector<std::string> labels;
    std::string_view rest = take_labels(work[i], labels, loc);
    pending.insert(pending.end(), labels.begin(), labels.end());
    if (rest.empty()) continue;
    if (rest[0] == '.') {
      if (!line.exprs.empty())
        fail(loc, "macro invocation '" + std::string(rest) + "' must start the command");
      std::string name(rest.substr(1));
      if (!is_identifier(name)) fail(loc, "malformed macro name '" + std::string(rest) + "'");
      line.kind = SourceLine::Kind::Invocation;
      line.macro = std::move(name);
      line.labels = std::move(pending);
      for (std::size_t j = i + 1; j < work.size(); ++j) line.args.push_back(lex_arg(work[j], loc));
      pending.clear();
      break;
    }
    WordExpr e;
    e.labels = std::move(pending);
    pending.clear();
    e.lexemes = lex_at(rest, loc);
    line.exprs.push_back(std::move(e));
  }
  if (line.kind == SourceLine::Kind::Words) line.labels = std::move(pending);

  if (line.conditional) {
    if (line.kind == SourceLine::Kind::Invocation && !line.labels.empty()) {
      line.trigger = line.labels.front();
    } else if (!line.exprs.empty() && !line.exprs.front().labels.empty()) {
      line.trigger = line.exprs.front().labels.front();
    } else if (line.exprs.empty() && !line.labels.empty()) {
      line.trigger = line.labels.front();
    } else {
      fail(loc, "conditional command needs a label");
    }
  }
  return line;
}

void collect_labels(const SourceLine& l, std::set<std::string>& out) {
  out.insert(l.labels.begin(), l.labels.end());
  for (const auto& e : l.exprs) out.insert(e.labels.begin(), e.labels.end());
}

void check_macro(const MacroDef& m) {
  std::set<std::string> formals(m.formals.begin(), m.formals.end());
  std::set<std::string> externals(m.externals.begin(), m.externals.end());
  if (formals.size() != m.formals.size()) fail(m.loc, "duplicate formal argument in '" + m.name + "'");
  for (const auto& n : m.formals) {
    if (externals.count(n)) fail(m.loc, "'" + n + "' is both a formal and an external of '" + m.name + "'");
    if (m.locals.count(n)) fail(m.loc, "'" + n + "' is both a formal and a label in '" + m.name + "'");
  }
  for (const auto& n : m.externals)
    if (m.locals.count(n))
      fail(m.loc, "'" + n + "' is both an external and a label in '" + m.name + "'");

  auto check_lexemes = [&](const std::vector<Lexeme>& lx, const SourceLoc& loc) {
    for (const auto& l : lx) {
      if (l.kind != LexKind::Ident || is_builtin(l.text)) continue;
      if (formals.count(l.text) || externals.count(l.text) || m.locals.count(l.text)) continue;
      fail(loc, "name '" + l.text + "' in macro '" + m.name +
                    "' is neither an argument, a label, nor declared external");
    }
  };
  for (const auto& line : m.body) {
    for (const auto& e : line.exprs) check_lexemes(e.lexemes, line.loc);
    for (const auto& a : line.args) check_lexemes(a, line.loc);
  }
}

class Parser {
 public:
  explicit Parser(const IncludeResolver& r) : resolver_(r) {}

  void file(std::string_view text, const std::string& name, const std::filesystem::path& dir) {
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    MacroDef* open = nullptr;
    MacroDef current;
    while (std::getline(in, raw)) {
      ++lineno;
      SourceLoc loc{name, lineno};
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      auto toks = tokenize(raw, loc);
      if (toks.empty()) continue;

      const std::string& head = toks[0];
      if (head == ".def") {
        if (open) fail(loc, "nested .def inside '" + open->name + "'");
        if (toks.size() < 2 || !is_identifier(toks[1])) fail(loc, ".def needs a macro name");
        current = MacroDef{};
        current.name = toks[1];
        current.loc = loc;
        bool ext = false;
        for (std::size_t i = 2; i < toks.size(); ++i) {
          if (toks[i] == ":") {
            if (ext) fail(loc, "second ':' in .def");
            ext = true;
            continue;
          }
          if (!is_identifier(toks[i]) || is_builtin(toks[i]))
            fail(loc, "malformed macro parameter '" + toks[i] + "'");
          (ext ? current.externals : current.formals).push_back(toks[i]);
        }
        open = &current;
        continue;
      }
      if (head == ".end") {
        if (!open) fail(loc, ".end without .def");
        if (toks.size() != 1) fail(loc, "unexpected tokens after .end");
        for (const auto& l : current.body) collect_labels(l, current.locals);
        if (out_.macros.count(current.name))
          fail(loc, "macro '" + current.name + "' redefined (first at " +
                        out_.macros[current.name].loc.str() + ")");
        out_.macros.emplace(current.name, std::move(current));
        open = nullptr;
        continue;
      }
      if (head == ".include") {
        if (open) fail(loc, ".include inside a macro definition");
        if (toks.size() != 2) fail(loc, ".include needs exactly one file name");
        include(toks[1], dir, loc);
        continue;
      }

      SourceLine line = parse_command(toks, loc);
      if (open) {
        open->body.push_back(std::move(line));
      } else {
        out_.lines.push_back(std::move(line));
      }
    }
    if (open) fail(open->loc, "unterminated .def '" + open->name + "'");
  }

  ParsedSource finish() {
    for (const auto& [_, m] : out_.macros) check_macro(m);
    return std::move(out_);
  }

 private:
  void include(const std::string& target, const std::filesystem::path& dir, const SourceLoc& loc) {
    auto f = resolver_.resolve(target, dir);
    if (!f) {
      std::string where;
      for (const auto& p : resolver_.search_description(dir)) where += "\n  searched: " + p;
      fail(loc, "cannot find include '" + target + "'" + where);
    }
    if (!included_.insert(f->key).second) return;
    file(f->text, f->display_name, f->dir);
  }

  const IncludeResolver& resolver_;
  ParsedSource out_;
  std::set<std::string> included_;
};

}  // namespace

FileIncludeResolver::FileIncludeResolver(WordSpec spec, std::vector<std::filesystem::path> paths)
    : spec_(spec), paths_(std::move(paths)) {}

std::vector<std::string> FileIncludeResolver::search_description(
    const std::filesystem::path& from_dir) const {
  std::vector<std::string> out;
  out.push_back(from_dir.empty() ? std::string(".") : from_dir.string());
  for (const auto& p : paths_) out.push_back(p.string());
  out.push_back(std::string("<built-in '") + kBuiltinLibName + "'>");
  return out;
}

std::optional<IncludedFile> FileIncludeResolver::resolve(const std::string& name,
                                                         const std::filesystem::path& from_dir) const {
  namespace fs = std::filesystem;
  std::vector<fs::path> candidates;
  candidates.push_back(from_dir.empty() ? fs::path(name) : from_dir / name);
  for (const auto& p : paths_) candidates.push_back(p / name);
  for (const auto& c : candidates) {
    std::error_code ec;
    if (!fs::is_regular_file(c, ec)) continue;
    std::ifstream in(c, std::ios::binary);
    if (!in) continue;
    std::ostringstream ss;
    ss << in.rdbuf();
    auto canon = fs::weakly_canonical(c, ec);
    return IncludedFile{ec ? c.string() : canon.string(), c.string(), ss.str(), c.parent_path()};
  }
  if (name == kBuiltinLibName)
    return IncludedFile{"<lib>", "<lib>", gen_lib(spec_), {}};
  return std::nullopt;
}

ParsedSource parse(std::string_view text, const std::string& file_name,
                   const std::filesystem::path& dir, const IncludeResolver& resolver) {
  Parser p(resolver);
  p.file(text, file_name, dir);
  return p.finish();
}

}  // namespace bbj
