#include "bbj/stdlib.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bbj {

namespace {

// Bit index as written in library text: the top bit is spelled "w".
std::string bit(const WordSpec& s, unsigned i) { return i == s.w ? "w" : std::to_string(i); }

void gen_copy(std::ostream& os, const WordSpec& s) {
  os << ".def copy X Y\n";
  for (unsigned i = 0; i <= s.w; ++i) os << "X'" << bit(s, i) << " Y'" << bit(s, i) << '\n';
  os << ".end\n\n";
}

void gen_shifts(std::ostream& os, const WordSpec& s) {
  os << ".def shiftL X : ZERO\n";
  for (unsigned i = s.w; i-- > 0;) os << "X'" << bit(s, i) << " X'" << bit(s, i + 1) << '\n';
  os << "ZERO X\n.end\n\n";

  os << ".def shiftR X : ZERO\n";
  for (unsigned i = 1; i <= s.w; ++i) os << "X'" << bit(s, i) << " X'" << bit(s, i - 1) << '\n';
  os << "ZERO X'w\n.end\n\n";

  os << R"(.def rollR X : TMP
X TMP
.shiftR X
TMP X'w
.end

.def rollL X : TMP
X'w TMP
.shiftL X
TMP X
.end

)";
}

void gen_jump01(std::ostream& os, const WordSpec& s) {
  // Bit b of A lands on bit k of the next instruction's source operand, which
  // then reads bit i of cell 0 (Z0) or cell 1 (Z1) into J. J is the last
  // instruction's jump target.
  os << ".def jump01 A b\n";
  for (unsigned i = 0; i <= s.w; ++i) {
    os << "A'b 2?'k\n";
    os << bit(s, i) << " J'" << bit(s, i);
    os << (i == s.w ? " J:0\n" : "\n");
  }
  os << ".end\n\n";
}

// test parks the bit in jump01_f_B and jumps to one shared jump01 copy.
// Each bit of S selects bit i of Z0 (S'i = 0) or Z1 (S'i = 1) into D'i, using
// the same operand patching as jump01.
void gen_pick(std::ostream& os, const WordSpec& s) {
  os << ".def pick S D\n";
  for (unsigned i = 0; i <= s.w; ++i)
    os << "S'" << bit(s, i) << " 2?'k\n" << bit(s, i) << " D'" << bit(s, i) << '\n';
  os << ".end\n\n";

  os << ".def inv A : Z0 Z1 ONE ZERO\nONE Z0\nZERO Z1\n";
  for (unsigned i = 0; i <= s.w; ++i) os << "A'" << bit(s, i) << " 2?'k\n0 A'" << bit(s, i) << '\n';
  os << ".end\n\n";
}

constexpr const char* kTests = R"(.def test A b B0 B1 : Z0 Z1 jump01_f jump01_f_B
.copy L0 Z0
.copy L1 Z1
A'b jump01_f_B
0 0 jump01_f
L0:B0 L1:B1
.end

:jump01_f: .jump01 jump01_f_B 0
:jump01_f_B:0

.def testL A B0 B1
.test A 0 B0 B1
.end

.def testH A B0 B1
.test A w B0 B1
.end

)";

constexpr const char* kIncInv = R"(.def inc_f_def A : inc_f_RET ONE ZERO ctr
.copy inc_f_RET Return
.copy ONE ctr
begin: .testL A test0 test1
test0: ONE A rollback
test1: ZERO A
       .testH ctr next rollback
next:  .shiftL ctr
       .rollR A
       0 0 begin
rollback: .testL ctr roll End
roll:  .shiftR ctr
       .rollL A
       0 0 rollback
End:0 0 Return:0
.end

)";

constexpr const char* kIo = R"(.def out H
H'0 -1
H'1 -1
H'2 -1
H'3 -1
H'4 -1
H'5 -1
H'6 -1
H'7 -1
.end

.def in H
-1 H'0
-1 H'1
-1 H'2
-1 H'3
-1 H'4
-1 H'5
-1 H'6
-1 H'7
.end

.def halt
0 0 -1
.end

)";

constexpr const char* kBranches = R"(.def ifzero Z yes no
.testH Z cont no
cont: .add Z M A
.testH A no yes
A:0 M:-1
.end

.def ifeq X Y yes no
.sub X Y Z
.ifzero Z yes no
Z:0 0
.end

.def iflt A B yes no
.sub A B Z
.testH Z no yes
Z:0 0
.end

)";

struct Function {
  std::string name;
  std::vector<std::string> formals;         // caller-facing macro formals
  std::vector<std::string> copy_in;         // formals copied into function cells
  std::vector<std::pair<std::string, std::string>> copy_out;  // cell suffix -> formal
  std::vector<std::string> cells;           // function argument cells, by suffix
};

// Caller-side macro: copy arguments in, patch the return address, jump to the
// shared body, copy results out on return.
void gen_function_wrapper(std::ostream& os, const Function& f) {
  const std::string p = f.name + "_f";
  os << ".def " << f.name;
  for (const auto& a : f.formals) os << ' ' << a;
  os << " : " << p << ' ' << p << "_RET";
  for (const auto& c : f.cells) os << ' ' << p << '_' << c;
  os << '\n';
  for (const auto& a : f.copy_in) os << ".copy " << a << ' ' << p << '_' << a << '\n';
  os << ".copy L " << p << "_RET\n";
  os << "0 0 " << p << '\n';
  os << "L:J 0\n";
  if (f.copy_out.empty()) {
    os << "J:0 0\n";
  } else {
    for (std::size_t i = 0; i < f.copy_out.size(); ++i)
      os << (i == 0 ? "J:" : "") << ".copy " << p << '_' << f.copy_out[i].first << ' '
         << f.copy_out[i].second << '\n';
  }
  os << ".end\n\n";

  // Entry point and cells are conditional: present only once referenced.
  os << ':' << p << ": ." << p << "_def";
  for (const auto& c : f.cells) os << ' ' << p << '_' << c;
  os << '\n';
  os << ':' << p << "_RET:0\n";
  for (const auto& c : f.cells) os << ':' << p << '_' << c << ":0\n";
  os << '\n';
}

// S accumulates the carry-free sum and C the carries; after w+1 rounds C is 0.
constexpr const char* kAddBody = R"(.def add_f_def X Y Z : add_f_RET ONE ZERO Z0 Z1
.copy add_f_RET Return
.copy X S
.copy Y C
.copy ONE cnt
begin: .copy ZERO Z0
       .copy S Z1
       .pick C A
       .shiftL A
       .copy S N
       .inv N
       .copy S Z0
       .copy N Z1
       .pick C S
       .copy A C
       .testH cnt next done
next:  .shiftL cnt
       0 0 begin
done:  .copy S Z
End:0 0 Return:0
S:0 C:0 A:0
N:0 cnt:0
.end

)";

constexpr const char* kSubBody = R"(.def sub_f_def X Y : sub_f_RET
.copy sub_f_RET Return
.inv X
.add X Y X
.inv X
End:0 0 Return:0
.end

)";

constexpr const char* kRefBodies = R"(.def deref_f_def P X : deref_f_RET ONE
.copy deref_f_RET Return
.copy ONE cnt
.copy P A
.copy L B
begin: A:0 B:0
       .testH cnt next End
next:  .shiftL cnt
       .inc A
       .inc B
       0 0 begin
End:0 0 Return:0
L:X cnt:0
.end

.def toref_f_def Z P : toref_f_RET ONE
.copy toref_f_RET Return
.copy ONE cnt
.copy L A
.copy P B
begin: A:0 B:0
       .testH cnt next End
next:  .shiftL cnt
       .inc A
       .inc B
       0 0 begin
End:0 0 Return:0
L:Z cnt:0
.end

)";

constexpr const char* kMulBody = R"(.def mul_f_def X Y Z : mul_f_RET ZERO
.copy mul_f_RET Return
.copy ZERO Z
begin: .ifzero X End L1
L1:    .testL X next L2
L2:    .add Z Y Z
next:  .shiftR X
       .shiftL Y
       0 0 begin
End:0 0 Return:0
.end

)";

// Restoring long division, one quotient bit per round.
constexpr const char* kDivBody = R"(.def div_f_def X Y Z R : div_f_RET ZERO ONE
.copy div_f_RET Return
.copy ZERO Z
       .testH X L1 End
L1:    .testH Y L2 End
L2:    .ifzero Y End start

start: .copy ZERO R
       .copy ONE cnt
loop:  .shiftL R
       X'w R
       .shiftL X
       .shiftL Z
       .iflt R Y skip take
take:  .sub R Y R
       ONE Z
skip:  .testH cnt next End
next:  .shiftL cnt
       0 0 loop

End:0 0 Return:0
cnt:0
.end

)";

// The digit array holds 12 cells.
constexpr const char* kPrnBody = R"(.def prn_f_def X : prn_f_RET WS
.copy prn_f_RET Return
       .testH X begin negate
negate: .inv X
       .inc X
       .out minus

begin: .div X ten X Z
       .toref Z p
       .add p WS p
       .ifzero X print begin

print: .sub p WS p
       .deref p Z
       .add Z d0 Z
       .out Z
       .ifeq p q End print

End:0 0 Return:0
Z:0 d0:48 ten:10
p:A q:A minus:45
A:0 0 0
0 0 0
0 0 0
0 0 0
.end

)";

constexpr const char* kCells = R"(# Library cells, each present only when referenced.
:ZERO:0
:ONE:1
:TMP:0
:ctr:0
:WS:(w+1)
)";

}  // namespace

std::string gen_lib(const WordSpec& s) {
  std::ostringstream os;
  os << "# bit-copy standard library, word size " << s.word_size << "\n\n";
  gen_copy(os, s);
  gen_shifts(os, s);
  gen_jump01(os, s);
  gen_pick(os, s);
  os << kTests;
  gen_function_wrapper(os, {"inc", {"A"}, {"A"}, {{"A", "A"}}, {"A"}});
  os << kIncInv << kIo << kBranches;

  gen_function_wrapper(os, {"add", {"X", "Y", "Z"}, {"X", "Y"}, {{"Z", "Z"}}, {"X", "Y", "Z"}});
  os << kAddBody;
  gen_function_wrapper(os, {"sub", {"X", "Y", "Z"}, {"X", "Y"}, {{"X", "Z"}}, {"X", "Y"}});
  // sub returns its result in the first argument cell.
  os << kSubBody;
  gen_function_wrapper(os, {"deref", {"P", "X"}, {"P"}, {{"X", "X"}}, {"P", "X"}});
  gen_function_wrapper(os, {"toref", {"Z", "P"}, {"Z", "P"}, {}, {"Z", "P"}});
  os << kRefBodies;
  gen_function_wrapper(os, {"mul", {"X", "Y", "Z"}, {"X", "Y"}, {{"Z", "Z"}}, {"X", "Y", "Z"}});
  os << kMulBody;
  gen_function_wrapper(os, {"div", {"X", "Y", "Z", "R"}, {"X", "Y", "R"}, {{"Z", "Z"}, {"R", "R"}},
                            {"X", "Y", "Z", "R"}});
  os << kDivBody;
  gen_function_wrapper(os, {"prn", {"X"}, {"X"}, {}, {"X"}});
  os << kPrnBody;
  os << kCells;
  return os.str();
}

const std::vector<LibraryMacro>& library_macros() {
  static const std::vector<LibraryMacro> macros{
      {"copy", 1, ""},      {"shiftL", 1, ""},   {"shiftR", 1, ""},  {"rollL", 1, ""},
      {"rollR", 1, ""},     {"jump01", 1, ""},     {"pick", 1, ""},   {"test", 1, ""},    {"testL", 1, ""},
      {"testH", 1, ""},     {"out", 1, ""},      {"in", 1, ""},      {"halt", 1, ""},
      {"inc", 2, "inc_f_def"}, {"inv", 2, ""},      {"ifzero", 3, ""},  {"add", 3, "add_f_def"},
      {"deref", 3, "deref_f_def"}, {"toref", 3, "toref_f_def"},      {"sub", 4, "sub_f_def"},
      {"ifeq", 4, ""},      {"iflt", 4, ""},     {"mul", 4, "mul_f_def"},
      {"div", 4, "div_f_def"}, {"prn", 4, "prn_f_def"},
  };
  return macros;
}

const LibraryMacro* find_library_macro(const std::string& name) {
  for (const auto& m : library_macros())
    if (m.name == name) return &m;
  return nullptr;
}

SampleProgram load_sample(const std::filesystem::path& dir, const std::string& name) {
  auto slurp = [](const std::filesystem::path& p, bool required) -> std::string {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
      if (required) throw std::runtime_error("cannot read " + p.string());
      return {};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  SampleProgram s;
  s.name = name;
  s.source = slurp(dir / (name + ".asm"), true);
  s.expected_output = slurp(dir / (name + ".expected"), true);
  s.input = slurp(dir / (name + ".in"), false);
  return s;
}

}  // namespace bbj
