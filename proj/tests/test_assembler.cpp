#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "bbj/assembler.hpp"
#include "bbj/stdlib.hpp"

using namespace bbj;

namespace {

// In-memory include files; "lib" still maps to the generated library.
class MapResolver : public IncludeResolver {
 public:
  MapResolver(WordSpec spec, std::map<std::string, std::string> files)
      : spec_(spec), files_(std::move(files)) {}
  std::optional<IncludedFile> resolve(const std::string& name,
                                      const std::filesystem::path&) const override {
    if (auto it = files_.find(name); it != files_.end())
      return IncludedFile{name, name, it->second, "."};
    if (name == kBuiltinLibName) return IncludedFile{"<lib>", "lib", gen_lib(spec_), "."};
    return std::nullopt;
  }
  std::vector<std::string> search_description(const std::filesystem::path&) const override {
    return {"memory"};
  }

 private:
  WordSpec spec_;
  std::map<std::string, std::string> files_;
};

ParsedSource parse_text(const std::string& text, std::map<std::string, std::string> files = {},
                        unsigned ws = 32) {
  MapResolver r(WordSpec::make(ws), std::move(files));
  return parse(text, "t.asm", ".", r);
}

AssembleResult asm8(const std::string& text) {
  AssembleOptions o;
  o.word_size = 8;
  return assemble(text, "t.asm", o);
}

AssembleResult asm_ws(const std::string& text, unsigned ws) {
  AssembleOptions o;
  o.word_size = ws;
  return assemble(text, "t.asm", o);
}

Word eval_text(const std::string& text, BitAddress pos, const std::map<std::string, BitAddress>& syms,
               unsigned ws) {
  return eval_expr(parse_expr(lex_expr(text)), pos, syms, WordSpec::make(ws));
}

std::string error_of(const std::string& text, unsigned ws = 8) {
  try {
    asm_ws(text, ws);
  } catch (const AssemblyError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::string> texts(const FlatLine& l) {
  std::vector<std::string> out;
  for (const auto& e : l.exprs) out.push_back(e.text);
  return out;
}

}  // namespace

TEST_SUITE("assembler") {

TEST_CASE("parse: line kinds") {
  auto a = parse_text("A B\n");
  REQUIRE(a.lines.size() == 1);
  CHECK(a.lines[0].kind == SourceLine::Kind::Words);
  CHECK(a.lines[0].exprs.size() == 2);

  auto c = parse_text("# sub internal macro definition\n");
  CHECK(c.lines.empty());

  auto f = parse_text(":sub_f: .sub_f_def sub_f_X sub_f_Y\n");
  REQUIRE(f.lines.size() == 1);
  CHECK(f.lines[0].kind == SourceLine::Kind::Invocation);
  CHECK(f.lines[0].conditional);
  CHECK(f.lines[0].trigger == "sub_f");
  CHECK(f.lines[0].macro == "sub_f_def");
  CHECK(f.lines[0].args.size() == 2);
}

TEST_CASE("parse: labels and comments") {
  auto p = parse_text("L:M:A'3 B # trailing\nlone:\n0 0 0\n");
  REQUIRE(p.lines.size() == 3);
  CHECK(p.lines[0].exprs[0].labels == std::vector<std::string>{"L", "M"});
  CHECK(p.lines[0].exprs[0].text() == "A'3");
  CHECK(p.lines[1].exprs.empty());
  CHECK(p.lines[1].labels == std::vector<std::string>{"lone"});
}

TEST_CASE("parse: errors") {
  CHECK_THROWS_AS(parse_text(".def m X\nX X\n"), AssemblyError);
  CHECK_THROWS_AS(parse_text(".include nothere\n"), AssemblyError);
  CHECK_THROWS_AS(parse_text("A'B'C\n"), AssemblyError);
  CHECK_THROWS_AS(parse_text("w:0\n"), AssemblyError);
  CHECK_THROWS_AS(parse_text(".def m X\nX y\n.end\n"), AssemblyError);
  CHECK_THROWS_AS(parse_text(".def m X : X\n0\n.end\n"), AssemblyError);
}

TEST_CASE("parse: include once") {
  auto p = parse_text(".include a\n.include a\n", {{"a", "1 2 3\n"}});
  CHECK(p.lines.size() == 1);
  auto nested = parse_text(".include a\n", {{"a", ".include b\n7\n"}, {"b", "5\n.include a\n"}});
  CHECK(nested.lines.size() == 2);
}

TEST_CASE("pad_implicit_c") {
  auto two = parse_text("Z0:0 Z1:0\n").lines[0].exprs;
  pad_implicit_c(two);
  REQUIRE(two.size() == 3);
  CHECK(two[2].text() == "?");

  for (const char* line : {"0 0 begin\n", "H:72 101 108\n", "5\n", "1 2 3 4\n"}) {
    auto e = parse_text(line).lines[0].exprs;
    const auto n = e.size();
    pad_implicit_c(e);
    CHECK(e.size() == n);
  }
}

TEST_CASE("expand: copy and hygiene") {
  auto src = parse_text(".include lib\n.copy A B\n", {}, 8);
  auto lines = expand(src);
  std::vector<std::vector<std::string>> copy_rows;
  for (const auto& l : lines)
    if (!l.conditional && l.exprs.size() == 3 && l.exprs[0].text.rfind("A'", 0) == 0)
      copy_rows.push_back(texts(l));
  REQUIRE(copy_rows.size() == 8);
  CHECK(copy_rows[0] == std::vector<std::string>{"A'0", "B'0", "?"});
  CHECK(copy_rows[7] == std::vector<std::string>{"A'w", "B'w", "?"});

  auto twice = expand(parse_text(".include lib\n.inc X\n.inc X\n", {}, 8));
  std::multiset<std::string> labels;
  for (const auto& l : twice)
    for (const auto& e : l.exprs)
      for (const auto& lab : e.labels) labels.insert(lab);
  for (const auto& lab : labels) CHECK(labels.count(lab) == 1);
}

TEST_CASE("expand: formals substitute inside offsets") {
  auto lines = expand(parse_text(".def m A b\nA'b A'(b+1)\n.end\n.m p 3\n"));
  REQUIRE(lines.size() == 1);
  CHECK(texts(lines[0]) == std::vector<std::string>{"p'3", "p'(3+1)", "?"});
}

TEST_CASE("expand: test parks the bit and jumps to the shared jump01") {
  auto lines = expand(parse_text(".include lib\n.test A 0 B0 B1\n", {}, 8));
  bool parks = false, shared = false;
  for (const auto& l : lines) {
    auto t = texts(l);
    if (!l.conditional && t.size() == 3 && t[0] == "A'0" && t[1] == "jump01_f_B") parks = true;
    if (l.conditional && l.trigger == "jump01_f" && t.size() == 3 && t[0] == "jump01_f_B'0" &&
        t[1] == "2?'k")
      shared = true;
  }
  CHECK(parks);
  CHECK(shared);
}

TEST_CASE("expand: errors") {
  CHECK_THROWS_WITH(expand(parse_text(".foo x\n")), doctest::Contains("unknown macro 'foo'"));
  CHECK_THROWS_WITH(expand(parse_text(".def m X\nX X\n.end\n.m\n")),
                    doctest::Contains("takes 1 arguments"));
  CHECK_THROWS_WITH(expand(parse_text(".def a\n.b\n.end\n.def b\n.a\n.end\n.a\n")),
                    doctest::Contains("a -> b -> a"));
}

TEST_CASE("expand: invocation labels bind to the first cell") {
  auto r = asm8("0 0 -1\nJ: .two 5\n.def two V\nV V\n.end\n");
  CHECK(r.object.symbols.at("J") == 24);
}

TEST_CASE("expand: conditional invocation governs its expansion") {
  auto r = asm8(".def two V\nV V\n.end\n0 0 f\n:f: .two 5\n:g: .two 6\n");
  CHECK(r.object.words == std::vector<Word>{0, 0, 24, 5, 5, 48});
}

TEST_CASE("layout") {
  auto lines = expand(parse_text("a b c\nd e A:f\n"));
  std::vector<bool> active(lines.size(), true);
  auto lay = layout(lines, active, WordSpec::make(8));
  CHECK(lay.cell_count == 6);
  CHECK(lay.line_address == std::vector<BitAddress>{0, 24});
  CHECK(lay.symbols.at("A") == 40);

  auto d = expand(parse_text("a 0 0\n0 0 0\nA:0 0 0\n"));
  CHECK(layout(d, std::vector<bool>(d.size(), true), WordSpec::make(8)).symbols.at("A") == 48);

  auto empty = layout({}, {}, WordSpec::make(8));
  CHECK(empty.symbols.empty());
  CHECK(empty.cell_count == 0);

  auto dup = expand(parse_text("A:0\nA:1\n"));
  CHECK_THROWS_WITH(layout(dup, {true, true}, WordSpec::make(8)), doctest::Contains("first defined at"));
}

TEST_CASE("eval_expr") {
  CHECK(eval_text("-2?", 96, {}, 32) == 32);
  CHECK(eval_text("B'1", 0, {{"B", 32}}, 32) == 33);
  CHECK(eval_text("-1", 0, {}, 32) == 0xFFFFFFFFu);
  CHECK(eval_text("-1", 0, {}, 8) == 255);
  CHECK(eval_text("(w+1)", 0, {}, 32) == 32);
  CHECK(eval_text("?", 40, {}, 8) == 48);
  CHECK(eval_text("0?", 40, {}, 8) == 40);
  CHECK(eval_text("2?'k", 40, {}, 8) == 59);
  CHECK(eval_text("(A-B+3)'(w-1)", 0, {{"A", 80}, {"B", 16}}, 8) == 73);
  CHECK(eval_text("k", 0, {}, 16) == 4);
  CHECK_THROWS_AS(eval_text("nope", 0, {}, 8), UnresolvedSymbol);
}

TEST_CASE("assemble: relative addresses point at their own cell") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::ostringstream src;
    std::vector<std::pair<std::size_t, int>> rel;  // cell index, n
    std::size_t cell = 0;
    for (int line = 0; line < 8; ++line) {
      const int count = 1 + static_cast<int>(rng() % 3);
      for (int i = 0; i < count; ++i) {
        const int n = static_cast<int>(rng() % 5) - 2;
        src << n << "? ";
        rel.push_back({cell++, n});
      }
      if (count == 2) rel.push_back({cell++, 1});  // implicit ?
      src << '\n';
    }
    auto r = asm_ws(src.str(), 16);
    REQUIRE(r.object.words.size() == cell);
    for (auto [c, n] : rel) {
      const Word v = r.object.words[c];
      CHECK(WordSpec::make(16).reduce(v - static_cast<Word>(n * 16)) == c * 16);
    }
  }
}

TEST_CASE("assemble: padding counts") {
  auto r = asm8("1\n2 3\n4 5 6\n7 8 9 10\n");
  CHECK(r.object.words.size() == 1 + 3 + 3 + 4);
}

TEST_CASE("assemble: layout of A:18 B:7 0") {
  auto r = asm8("A B A\nA:18 B:7 0\n");
  CHECK(r.object.words == std::vector<Word>{24, 32, 24, 18, 7, 0});
  auto b1 = asm8("A B'1 A\nA:18 B:7 0\n");
  CHECK(b1.object.words == std::vector<Word>{24, 33, 24, 18, 7, 0});
}

TEST_CASE("conditional inclusion") {
  const std::string text = "0 0 f\n:f: 0 0 g\n:g: 0 0 -1\n:h: 1 1 1\n";
  auto r = asm8(text);
  CHECK(r.object.words == std::vector<Word>{0, 0, 24, 0, 0, 48, 0, 0, 255});

  auto lines = expand(parse_text(text));
  auto fix = activate(lines);
  CHECK(fix == std::vector<bool>{true, true, true, false});
  // Any seed between the unconditional lines and the fixpoint converges to it.
  CHECK(activate(lines, std::vector<bool>{true, true, false, false}) == fix);
  CHECK(activate(lines, std::vector<bool>{true, false, true, false}) == fix);
  CHECK(activate(lines, fix) == fix);

  // A trigger that is defined elsewhere never activates its line.
  auto defined = asm8("0 0 f\nf: 0 0 -1\n:f: 5\n");
  CHECK(defined.object.words.size() == 6);
}

TEST_CASE("conditional inclusion keeps small programs small") {
  AssembleOptions o;
  auto hi = assemble("Z0:0 Z1:0\n.out H\n.out i\n.halt\nH:72 i:105\n.include lib\n", "hi.asm", o);
  CHECK(hi.object.symbols.count("div_f") == 0);
  CHECK(hi.object.symbols.count("add_f") == 0);
  CHECK(hi.object.instruction_count() < 30);

  auto sub = assemble("Z0:0 Z1:0\n.sub X Y Z\n.halt\nX:5 Y:3 Z:0\n.include lib\n", "s.asm", o);
  for (const char* s : {"sub_f", "sub_f_RET", "sub_f_X", "sub_f_Y", "add_f"})
    CHECK(sub.object.symbols.count(s) == 1);
  CHECK(sub.object.symbols.count("div_f") == 0);
}

TEST_CASE("assemble: error reporting") {
  CHECK(error_of("A:0\nA:1\n").find("duplicate label 'A'") != std::string::npos);
  CHECK(error_of("A:0\nA:1\n").find("t.asm:1") != std::string::npos);
  CHECK(error_of("0 0 typo1\n0 0 typo2\n").find("typo1") != std::string::npos);
  CHECK(error_of("0 0 typo1\n0 0 typo2\n").find("typo2") != std::string::npos);
  CHECK(error_of("1\n", 12).find("word size") != std::string::npos);
  // 33 cells overflow the 8-bit address space.
  std::string big;
  for (int i = 0; i < 11; ++i) big += "0 0 0\n";
  CHECK(error_of(big).find("address space") != std::string::npos);
  CHECK(error_of("0 0 0\n").empty());
}

TEST_CASE("assemble: warnings") {
  auto lint = asm8("Z1:0 Z0:0\n");
  CHECK(lint.warnings.size() == 1);
  CHECK(asm8("Z0:0 Z1:0\n").warnings.empty());

  auto lit = asm_ws("Z0:0 Z1:0\n.add p (w+1) p\n.halt\np:0\n.include lib\n", 32);
  REQUIRE_FALSE(lit.warnings.empty());
  CHECK(lit.warnings[0].find("(w+1)") != std::string::npos);
  auto cell = asm_ws("Z0:0 Z1:0\n.add p WS p\n.halt\np:0\n.include lib\n", 32);
  CHECK(cell.warnings.empty());
}

TEST_CASE("assemble: object and symbol agreement") {
  auto r = asm_ws("Z0:0 Z1:0\n.copy A B\n.halt\nA:77 B:0\nC:-1\n.include lib\n", 16);
  const auto& o = r.object;
  CHECK(o.words[o.symbols.at("A") / 16] == 77);
  CHECK(o.words[o.symbols.at("C") / 16] == 0xFFFF);
  for (const auto& [name, addr] : o.symbols) {
    CHECK(addr % 16 == 0);
    CHECK(addr / 16 < o.words.size());
    CHECK(name.find('$') == std::string::npos);
  }
}

TEST_CASE("assemble: determinism") {
  const std::string text = "Z0:0 Z1:0\n.mul X Y Z\n.prn Z\n.halt\nX:6 Y:7 Z:0\n.include lib\n";
  auto a = asm_ws(text, 32);
  auto b = asm_ws(text, 32);
  CHECK(a.object == b.object);
  CHECK(object_text(a.object) == object_text(b.object));
}

TEST_CASE("object format") {
  auto r = asm8("A B A\nA:18 B:7 0\n");
  std::string text = object_text(r.object);
  CHECK(text.rfind("bbj1 8\n", 0) == 0);
  CHECK(looks_like_object(text));
  CHECK_FALSE(looks_like_object("A B A\n"));
  auto back = parse_object(text);
  CHECK(back.words == r.object.words);
  CHECK(back.spec == r.object.spec);

  auto three = parse_object("bbj1 32\n1 2 3\n");
  CHECK(three.spec.word_size == 32);
  CHECK(three.words.size() == 3);
  CHECK_THROWS_AS(parse_object("bbj1 32\n4294967296\n"), ObjectFormatError);
  CHECK_THROWS_AS(parse_object("bbj2 32\n1\n"), ObjectFormatError);
  CHECK_THROWS_AS(parse_object("bbj1 12\n1\n"), ObjectFormatError);
  CHECK_THROWS_AS(parse_object("bbj1 8\nx\n"), ObjectFormatError);

  std::ostringstream sym;
  write_symbols(sym, r.object);
  CHECK(sym.str() == "A 24\nB 32\n");
  std::istringstream in(sym.str());
  CHECK(parse_symbols(in) == r.object.symbols);
}

TEST_CASE("object files with sidecar") {
  auto dir = std::filesystem::temp_directory_path() / "bbj_obj_test";
  std::filesystem::create_directories(dir);
  auto r = asm_ws("Z0:0 Z1:0\n.out H\n.halt\nH:72\n.include lib\n", 32);
  save_object(dir / "p.o", r.object, true);
  CHECK(std::filesystem::exists(dir / "p.o.sym"));
  CHECK(read_object(dir / "p.o") == r.object);
  save_object(dir / "q.o", r.object, false);
  auto no_sym = read_object(dir / "q.o");
  CHECK(no_sym.words == r.object.words);
  CHECK(no_sym.symbols.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("includes from disk") {
  auto dir = std::filesystem::temp_directory_path() / "bbj_inc_test";
  std::filesystem::create_directories(dir / "sub");
  std::filesystem::create_directories(dir / "extra");
  std::ofstream(dir / "main.asm") << ".include near.asm\n.include far.asm\n0 0 -1\n";
  std::ofstream(dir / "near.asm") << "N:1\n";
  std::ofstream(dir / "extra" / "far.asm") << "F:2\n";

  AssembleOptions o;
  o.word_size = 8;
  CHECK_THROWS_WITH(assemble_file(dir / "main.asm", o), doctest::Contains("far.asm"));
  o.include_paths = {dir / "extra"};
  auto r = assemble_file(dir / "main.asm", o);
  CHECK(r.object.words == std::vector<Word>{1, 2, 0, 0, 255});
  std::filesystem::remove_all(dir);
}

TEST_CASE("expand_dump") {
  AssembleOptions o;
  o.word_size = 8;
  CHECK(expand_dump("A B\n0 0 begin\nbegin: H:72 101 108\n", "t.asm", o) ==
        "A B ?\n0 0 begin\nbegin:H:72 101 108\n");
  std::string d = expand_dump(".def two X\nL: X L\n.end\n.two p\n.two q\np:0 q:0\n:f: 0 0 -1\n:g: 5\n0 0 f\n",
                              "t.asm", o);
  CHECK(d ==
        "L$1:p L$1 ?\nL$2:q L$2 ?\np:0 q:0 ?\n:f:on f:0 0 -1\n:g:off g:5\n0 0 f\n");

  std::string copy = expand_dump(".include lib\n.copy A B\n", "t.asm", o);
  CHECK(copy.find("A'0 B'0 ?\n") != std::string::npos);
  CHECK(copy.find("A'w B'w ?\n") != std::string::npos);

  std::string lib = expand_dump(".include lib\n", "t.asm", o);
  std::istringstream rows(lib);
  std::string row;
  int n = 0;
  while (std::getline(rows, row)) {
    ++n;
    CHECK(row.find(":off ") != std::string::npos);
  }
  CHECK(n > 0);
}

}
