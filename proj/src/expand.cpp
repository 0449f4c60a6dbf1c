#include <algorithm>
#include <map>
#include <set>

#include "bbj/assembler.hpp"

namespace bbj {

void pad_implicit_c(std::vector<WordExpr>& exprs) {
  if (exprs.size() == 2) exprs.push_back(WordExpr{{}, {{LexKind::Question, "?"}}});
}

namespace {

[[noreturn]] void fail(const SourceLoc& loc, const std::string& msg) {
  throw AssemblyError({loc.str() + ": error: " + msg});
}

// A literal-like actual holds no symbol and no relative term: a number or a
// constant expression.
bool literal_like(const std::vector<Lexeme>& lx) {
  for (const auto& l : lx) {
    if (l.kind == LexKind::Question) return false;
    if (l.kind == LexKind::Ident && l.text != "w" && l.text != "k") return false;
  }
  return true;
}

struct Bindings {
  std::map<std::string, const std::vector<Lexeme>*> formals;
  std::map<std::string, std::string> renamed;
};

class Expander {
 public:
  Expander(const ParsedSource& src, std::vector<std::string>* warnings)
      : src_(src), warnings_(warnings) {}

  std::vector<FlatLine> run() {
    for (const auto& line : src_.lines) {
      top_loc_ = line.loc;
      emit(line, line.conditional, line.trigger);
    }
    return std::move(out_);
  }

 private:
  void emit(const SourceLine& line, bool conditional, const std::string& trigger) {
    if (line.kind == SourceLine::Kind::Words) {
      std::vector<WordExpr> exprs = line.exprs;
      pad_implicit_c(exprs);
      FlatLine fl;
      fl.conditional = conditional;
      fl.trigger = trigger;
      fl.loc = line.loc;
      fl.trailing_labels = line.labels;
      for (auto& e : exprs) {
        FlatExpr fe;
        fe.labels = std::move(e.labels);
        fe.text = lexemes_text(e.lexemes);
        try {
          fe.expr = parse_expr(e.lexemes);
        } catch (const std::invalid_argument& ex) {
          fail(line.loc, ex.what());
        }
        fl.exprs.push_back(std::move(fe));
      }
      out_.push_back(std::move(fl));
      return;
    }
    invoke(line, conditional, trigger);
  }

  void invoke(const SourceLine& call, bool conditional, const std::string& trigger) {
    auto it = src_.macros.find(call.macro);
    if (it == src_.macros.end()) fail(call.loc, "unknown macro '" + call.macro + "'");
    const MacroDef& m = it->second;
    if (call.args.size() != m.formals.size())
      fail(call.loc, "macro '" + m.name + "' takes " + std::to_string(m.formals.size()) +
                         " arguments, got " + std::to_string(call.args.size()));
    if (std::find(stack_.begin(), stack_.end(), m.name) != stack_.end()) {
      std::string cycle;
      auto from = std::find(stack_.begin(), stack_.end(), m.name);
      for (; from != stack_.end(); ++from) cycle += *from + " -> ";
      fail(call.loc, "recursive macro expansion: " + cycle + m.name);
    }

    if (!call.labels.empty()) {
      FlatLine anchor;
      anchor.conditional = conditional;
      anchor.trigger = trigger;
      anchor.loc = call.loc;
      anchor.trailing_labels = call.labels;
      out_.push_back(std::move(anchor));
    }

    const std::string suffix = "$" + std::to_string(++counter_);
    Bindings b;
    for (std::size_t i = 0; i < m.formals.size(); ++i) b.formals[m.formals[i]] = &call.args[i];
    for (const auto& l : m.locals) b.renamed[l] = l + suffix;

    stack_.push_back(m.name);
    for (const auto& body_line : m.body) {
      SourceLine line = body_line;
      for (auto& e : line.exprs) {
        warn_literal_address(m, e, b);
        for (auto& l : e.labels) l = rename(l, b);
        e.lexemes = substitute(e.lexemes, b);
      }
      for (auto& l : line.labels) l = rename(l, b);
      for (auto& a : line.args) a = substitute(a, b);
      if (line.conditional) line.trigger = rename(line.trigger, b);
      // The invocation's conditional flag governs its whole expansion.
      if (conditional) {
        emit(line, true, trigger);
      } else {
        emit(line, line.conditional, line.trigger);
      }
    }
    stack_.pop_back();
  }

  static std::string rename(const std::string& name, const Bindings& b) {
    auto it = b.renamed.find(name);
    return it == b.renamed.end() ? name : it->second;
  }

  static std::vector<Lexeme> substitute(const std::vector<Lexeme>& lx, const Bindings& b) {
    std::vector<Lexeme> out;
    out.reserve(lx.size());
    for (const auto& l : lx) {
      if (l.kind == LexKind::Ident) {
        if (auto f = b.formals.find(l.text); f != b.formals.end()) {
          out.insert(out.end(), f->second->begin(), f->second->end());
          continue;
        }
        if (auto r = b.renamed.find(l.text); r != b.renamed.end()) {
          out.push_back({LexKind::Ident, r->second});
          continue;
        }
      }
      out.push_back(l);
    }
    return out;
  }

  // A formal used as the base of an expression with a bit offset addresses a
  // cell; a literal actual there is almost always a mistake.
  void warn_literal_address(const MacroDef& m, const WordExpr& e, const Bindings& b) {
    if (warnings_ == nullptr || e.lexemes.size() < 2) return;
    if (e.lexemes[0].kind != LexKind::Ident || e.lexemes[1].kind != LexKind::Quote) return;
    auto f = b.formals.find(e.lexemes[0].text);
    if (f == b.formals.end() || !literal_like(*f->second)) return;
    const std::string key = top_loc_.str() + "|" + m.name + "|" + lexemes_text(*f->second);
    if (!warned_.insert(key).second) return;
    warnings_->push_back(top_loc_.str() + ": warning: constant '" + lexemes_text(*f->second) +
                         "' used as a cell address in macro '" + m.name + "'");
  }

  const ParsedSource& src_;
  std::vector<std::string>* warnings_;
  std::vector<FlatLine> out_;
  std::vector<std::string> stack_;
  std::set<std::string> warned_;
  SourceLoc top_loc_;
  unsigned long counter_ = 0;
};

}  // namespace

std::vector<FlatLine> expand(const ParsedSource& src, std::vector<std::string>* warnings) {
  return Expander(src, warnings).run();
}

}  // namespace bbj
