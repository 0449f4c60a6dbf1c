#include "bbj/harness.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bbj/assembler.hpp"

namespace bbj {

std::int64_t to_signed(const WordSpec& s, Word v) {
  v = s.reduce(v);
  if (s.word_size < 64 && s.is_negative(v)) v |= ~s.neg_one;
  return static_cast<std::int64_t>(v);
}

Word from_signed(const WordSpec& s, std::int64_t v) { return s.reduce(static_cast<Word>(v)); }

namespace {

const std::vector<std::string> kLibraryCells{"Z0", "Z1", "ZERO", "ONE", "TMP", "ctr", "WS"};
const std::vector<std::string> kTestClobbers{"Z0", "Z1"};
// The adder family only uses Z0/Z1 as lookup tables; inc loops with ctr and TMP.
const std::vector<std::string> kArithClobbers{"Z0", "Z1"};
const std::vector<std::string> kIncClobbers{"Z0", "Z1", "ctr", "TMP"};

bool any_domain(const WordSpec&, const std::vector<Word>&) { return true; }

bool signed_difference_fits(const WordSpec& s, const std::vector<Word>& in) {
  const __int128 d = static_cast<__int128>(to_signed(s, in[0])) - to_signed(s, in[1]);
  const __int128 lo = -(static_cast<__int128>(1) << s.w);
  const __int128 hi = (static_cast<__int128>(1) << s.w) - 1;
  return d >= lo && d <= hi;
}

std::string branch_code(const std::string& invocation) {
  return invocation + " T1 T2\n"
         "T1: .copy K1 RES0\n"
         ".halt\n"
         "T2: .copy K2 RES0\n"
         ".halt\n";
}

std::vector<DriverCell> branch_cells(const std::vector<Word>& in, std::size_t n) {
  std::vector<DriverCell> cells;
  const char* names[] = {"X", "Y"};
  for (std::size_t i = 0; i < n; ++i) cells.push_back({{names[i]}, in[i], ""});
  cells.push_back({{"RES0"}, 0, ""});
  cells.push_back({{"K1"}, 0, "1"});
  cells.push_back({{"K2"}, 0, "2"});
  return cells;
}

Expectation branch(bool first) { return {{{"RES0", first ? Word{1} : Word{2}}}, std::nullopt}; }

Expectation cell_result(Word v) { return {{{"RES0", v}}, std::nullopt}; }

MacroContract unary_inplace(const std::string& name, std::vector<std::string> clobbers,
                            std::function<Word(const WordSpec&, Word)> f) {
  MacroContract m;
  m.name = name;
  m.arity = 1;
  m.outputs = {"RES0"};
  m.clobbers = std::move(clobbers);
  m.in_domain = any_domain;
  m.code = [name](const WordSpec&, const std::vector<Word>&) { return "." + name + " RES0\n"; };
  m.cells = [](const WordSpec&, const std::vector<Word>& in) {
    return std::vector<DriverCell>{{{"RES0"}, in[0], ""}};
  };
  m.oracle = [f](const WordSpec& s, const std::vector<Word>& in) { return cell_result(f(s, in[0])); };
  return m;
}

MacroContract binary_result(const std::string& name,
                            std::function<bool(const WordSpec&, const std::vector<Word>&)> domain,
                            std::function<Word(const WordSpec&, Word, Word)> f) {
  MacroContract m;
  m.name = name;
  m.arity = 2;
  m.outputs = {"RES0"};
  m.clobbers = kArithClobbers;
  m.in_domain = std::move(domain);
  m.code = [name](const WordSpec&, const std::vector<Word>&) { return "." + name + " X Y RES0\n"; };
  m.cells = [](const WordSpec&, const std::vector<Word>& in) {
    return std::vector<DriverCell>{{{"X"}, in[0], ""}, {{"Y"}, in[1], ""}, {{"RES0"}, 0, ""}};
  };
  m.oracle = [f](const WordSpec& s, const std::vector<Word>& in) {
    return cell_result(f(s, in[0], in[1]));
  };
  return m;
}

MacroContract branch_contract(const std::string& name, unsigned arity, std::vector<std::string> clobbers,
                              std::function<bool(const WordSpec&, const std::vector<Word>&)> domain,
                              std::function<bool(const WordSpec&, const std::vector<Word>&)> first) {
  MacroContract m;
  m.name = name;
  m.arity = arity;
  m.outputs = {"RES0"};
  m.clobbers = std::move(clobbers);
  m.in_domain = std::move(domain);
  m.code = [name, arity](const WordSpec&, const std::vector<Word>&) {
    return branch_code("." + name + (arity == 1 ? " X" : " X Y"));
  };
  m.cells = [arity](const WordSpec&, const std::vector<Word>& in) { return branch_cells(in, arity); };
  m.oracle = [first](const WordSpec& s, const std::vector<Word>& in) { return branch(first(s, in)); };
  return m;
}

std::vector<MacroContract> build_contracts() {
  std::vector<MacroContract> out;

  {
    MacroContract m;
    m.name = "copy";
    m.outputs = {"RES0"};
    m.in_domain = any_domain;
    m.code = [](const WordSpec&, const std::vector<Word>&) { return std::string(".copy X RES0\n"); };
    m.cells = [](const WordSpec& s, const std::vector<Word>& in) {
      return std::vector<DriverCell>{{{"X"}, in[0], ""}, {{"RES0"}, s.reduce(~in[0]), ""}};
    };
    m.oracle = [](const WordSpec&, const std::vector<Word>& in) { return cell_result(in[0]); };
    out.push_back(std::move(m));
  }

  out.push_back(unary_inplace("shiftL", {}, [](const WordSpec& s, Word x) { return s.reduce(x << 1); }));
  out.push_back(unary_inplace("shiftR", {}, [](const WordSpec&, Word x) { return x >> 1; }));
  out.push_back(unary_inplace("rollL", {"TMP"}, [](const WordSpec& s, Word x) {
    return s.reduce((x << 1) | (x >> s.w));
  }));
  out.push_back(unary_inplace("rollR", {"TMP"}, [](const WordSpec& s, Word x) {
    return s.reduce((x >> 1) | ((x & 1) << s.w));
  }));
  out.push_back(unary_inplace("inc", kIncClobbers, [](const WordSpec& s, Word x) { return s.reduce(x + 1); }));
  out.push_back(unary_inplace("inv", kTestClobbers, [](const WordSpec& s, Word x) { return s.reduce(~x); }));

  {
    MacroContract m;
    m.name = "test";
    m.arity = 2;
    m.outputs = {"RES0"};
    m.clobbers = kTestClobbers;
    m.in_domain = [](const WordSpec& s, const std::vector<Word>& in) { return in[1] <= s.w; };
    m.code = [](const WordSpec&, const std::vector<Word>& in) {
      return branch_code(".test X " + std::to_string(in[1]));
    };
    m.cells = [](const WordSpec&, const std::vector<Word>& in) { return branch_cells(in, 1); };
    m.oracle = [](const WordSpec&, const std::vector<Word>& in) {
      return branch(((in[0] >> in[1]) & 1) == 0);
    };
    m.random_case = [](const WordSpec& s, std::mt19937_64& rng) {
      return std::vector<Word>{s.reduce(rng()), rng() % s.word_size};
    };
    m.boundary_cases = [](const WordSpec& s) {
      std::vector<std::vector<Word>> cases;
      for (Word a : {Word{0}, Word{1}, s.neg_one, s.sign_bit()})
        for (Word b : {Word{0}, Word{1}, Word{s.w - 1}, Word{s.w}}) cases.push_back({a, b});
      return cases;
    };
    out.push_back(std::move(m));
  }
  out.push_back(branch_contract("testL", 1, kTestClobbers, any_domain,
                                [](const WordSpec&, const std::vector<Word>& in) { return (in[0] & 1) == 0; }));
  out.push_back(branch_contract("testH", 1, kTestClobbers, any_domain,
                                [](const WordSpec& s, const std::vector<Word>& in) { return !s.is_negative(in[0]); }));

  out.push_back(binary_result("add", any_domain, [](const WordSpec& s, Word x, Word y) { return s.reduce(x + y); }));
  out.push_back(binary_result("sub", any_domain, [](const WordSpec& s, Word x, Word y) { return s.reduce(x - y); }));
  {
    auto m = binary_result(
        "mul", [](const WordSpec& s, const std::vector<Word>& in) { return !s.is_negative(in[0]); },
        [](const WordSpec& s, Word x, Word y) { return s.reduce(x * y); });
    out.push_back(std::move(m));
  }
  {
    MacroContract m;
    m.name = "div";
    m.arity = 2;
    m.outputs = {"RES0", "RES1"};
    m.clobbers = kArithClobbers;
    m.in_domain = [](const WordSpec& s, const std::vector<Word>& in) {
      return !s.is_negative(in[0]) && !s.is_negative(in[1]) && in[1] != 0;
    };
    m.code = [](const WordSpec&, const std::vector<Word>&) { return std::string(".div X Y RES0 RES1\n"); };
    m.cells = [](const WordSpec&, const std::vector<Word>& in) {
      return std::vector<DriverCell>{
          {{"X"}, in[0], ""}, {{"Y"}, in[1], ""}, {{"RES0"}, 0, ""}, {{"RES1"}, 0, ""}};
    };
    m.oracle = [](const WordSpec&, const std::vector<Word>& in) {
      return Expectation{{{"RES0", in[0] / in[1]}, {"RES1", in[0] % in[1]}}, std::nullopt};
    };
    out.push_back(std::move(m));
  }

  out.push_back(branch_contract("ifzero", 1, kArithClobbers, any_domain,
                                [](const WordSpec&, const std::vector<Word>& in) { return in[0] == 0; }));
  out.push_back(branch_contract("ifeq", 2, kArithClobbers, signed_difference_fits,
                                [](const WordSpec&, const std::vector<Word>& in) { return in[0] == in[1]; }));
  out.push_back(branch_contract("iflt", 2, kArithClobbers, signed_difference_fits,
                                [](const WordSpec& s, const std::vector<Word>& in) {
                                  return to_signed(s, in[0]) < to_signed(s, in[1]);
                                }));

  {
    MacroContract m;
    m.name = "deref";
    m.outputs = {"RES0"};
    m.clobbers = kIncClobbers;
    m.in_domain = any_domain;
    m.code = [](const WordSpec&, const std::vector<Word>&) { return std::string(".deref P RES0\n"); };
    m.cells = [](const WordSpec&, const std::vector<Word>& in) {
      return std::vector<DriverCell>{{{"P"}, 0, "T"}, {{"T"}, in[0], ""}, {{"RES0"}, 0, ""}};
    };
    m.oracle = [](const WordSpec&, const std::vector<Word>& in) { return cell_result(in[0]); };
    out.push_back(std::move(m));
  }
  {
    MacroContract m;
    m.name = "toref";
    m.outputs = {"RES0"};
    m.clobbers = kIncClobbers;
    m.in_domain = any_domain;
    m.code = [](const WordSpec&, const std::vector<Word>&) { return std::string(".toref X P\n"); };
    m.cells = [](const WordSpec&, const std::vector<Word>& in) {
      return std::vector<DriverCell>{{{"X"}, in[0], ""}, {{"P"}, 0, "RES0"}, {{"RES0"}, 0, ""}};
    };
    m.oracle = [](const WordSpec&, const std::vector<Word>& in) { return cell_result(in[0]); };
    out.push_back(std::move(m));
  }
  {
    MacroContract m;
    m.name = "refs";
    m.outputs = {"RES0", "RES1"};
    m.clobbers = kIncClobbers;
    m.in_domain = any_domain;
    m.code = [](const WordSpec&, const std::vector<Word>&) {
      return std::string(".toref X P\n.deref P RES1\n");
    };
    m.cells = [](const WordSpec&, const std::vector<Word>& in) {
      return std::vector<DriverCell>{
          {{"X"}, in[0], ""}, {{"P"}, 0, "RES0"}, {{"RES0"}, 0, ""}, {{"RES1"}, 0, ""}};
    };
    m.oracle = [](const WordSpec&, const std::vector<Word>& in) {
      return Expectation{{{"RES0", in[0]}, {"RES1", in[0]}}, std::nullopt};
    };
    out.push_back(std::move(m));
  }

  {
    MacroContract m;
    m.name = "prn";
    m.clobbers = kIncClobbers;
    m.min_word_size = 32;
    m.in_domain = [](const WordSpec& s, const std::vector<Word>& in) { return in[0] != s.sign_bit(); };
    m.code = [](const WordSpec&, const std::vector<Word>&) { return std::string(".prn X\n"); };
    m.cells = [](const WordSpec&, const std::vector<Word>& in) {
      return std::vector<DriverCell>{{{"X"}, in[0], ""}};
    };
    m.oracle = [](const WordSpec& s, const std::vector<Word>& in) {
      return Expectation{{}, std::to_string(to_signed(s, in[0]))};
    };
    out.push_back(std::move(m));
  }

  auto byte_domain = [](const WordSpec&, const std::vector<Word>& in) { return in[0] < 256; };
  auto byte_cases = [](const WordSpec&) {
    std::vector<std::vector<Word>> c;
    for (Word b : {0, 1, 127, 128, 255}) c.push_back({b});
    return c;
  };
  auto random_byte = [](const WordSpec&, std::mt19937_64& rng) { return std::vector<Word>{rng() & 0xFF}; };
  {
    MacroContract m;
    m.name = "out";
    m.in_domain = any_domain;
    m.code = [](const WordSpec&, const std::vector<Word>&) { return std::string(".out X\n"); };
    m.cells = [](const WordSpec&, const std::vector<Word>& in) {
      return std::vector<DriverCell>{{{"X"}, in[0], ""}};
    };
    m.oracle = [](const WordSpec&, const std::vector<Word>& in) {
      return Expectation{{}, std::string(1, static_cast<char>(in[0] & 0xFF))};
    };
    out.push_back(std::move(m));
  }
  {
    MacroContract m;
    m.name = "in";
    m.arity = 2;
    m.outputs = {"RES0"};
    m.in_domain = [](const WordSpec&, const std::vector<Word>& in) { return in[1] < 256; };
    m.code = [](const WordSpec&, const std::vector<Word>&) { return std::string(".in RES0\n"); };
    m.cells = [](const WordSpec&, const std::vector<Word>& in) {
      return std::vector<DriverCell>{{{"RES0"}, in[0], ""}};
    };
    m.input = [](const std::vector<Word>& in) { return std::string(1, static_cast<char>(in[1])); };
    m.oracle = [](const WordSpec&, const std::vector<Word>& in) {
      return cell_result((in[0] & ~Word{0xFF}) | in[1]);
    };
    m.random_case = [](const WordSpec& s, std::mt19937_64& rng) {
      return std::vector<Word>{s.reduce(rng()), rng() & 0xFF};
    };
    m.boundary_cases = [](const WordSpec& s) {
      std::vector<std::vector<Word>> c;
      for (Word v : {Word{0}, s.neg_one, s.reduce(~Word{0xFF})})
        for (Word b : {0, 1, 128, 255}) c.push_back({v, b});
      return c;
    };
    out.push_back(std::move(m));
  }
  {
    MacroContract m;
    m.name = "echo";
    m.in_domain = byte_domain;
    m.code = [](const WordSpec&, const std::vector<Word>&) { return std::string(".in C\n.out C\n"); };
    m.cells = [](const WordSpec&, const std::vector<Word>&) {
      return std::vector<DriverCell>{{{"C"}, 0, "0"}};
    };
    m.outputs = {"C"};
    m.input = [](const std::vector<Word>& in) { return std::string(1, static_cast<char>(in[0])); };
    m.oracle = [](const WordSpec&, const std::vector<Word>& in) {
      return Expectation{{}, std::string(1, static_cast<char>(in[0]))};
    };
    m.random_case = random_byte;
    m.boundary_cases = byte_cases;
    out.push_back(std::move(m));
  }
  return out;
}

// Sentinels catch stray writes into the data area.
const std::vector<DriverCell>& sentinels() {
  static const std::vector<DriverCell> s{{{"S0"}, 0, "(0-1)"}, {{"S1"}, 0, "12345"}};
  return s;
}

std::string render_driver(const MacroContract& m, const WordSpec& s, const std::vector<Word>& in,
                          bool zero_values) {
  std::ostringstream os;
  os << "Z0:0 Z1:0\n";
  os << m.code(s, in);
  os << "0 0 -1\n";
  auto cells = m.cells(s, in);
  cells.insert(cells.end(), sentinels().begin(), sentinels().end());
  for (const auto& c : cells) {
    for (const auto& l : c.labels) os << l << ':';
    if (!c.expr.empty()) {
      os << c.expr;
    } else {
      os << (zero_values ? Word{0} : c.value);
    }
    os << '\n';
  }
  os << ".include lib\n";
  return os.str();
}

struct Built {
  ObjectProgram obj;
  std::vector<DriverCell> cells;
};

Built build(const MacroContract& m, const WordSpec& s, const std::vector<Word>& in) {
  static std::mutex mu;
  static std::map<std::string, ObjectProgram> cache;
  const std::string key = std::to_string(s.word_size) + "\n" + render_driver(m, s, in, true);
  ObjectProgram obj;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it == cache.end()) {
      AssembleOptions opts;
      opts.word_size = s.word_size;
      it = cache.emplace(key, assemble(key.substr(key.find('\n') + 1), "driver.asm", opts).object)
               .first;
    }
    obj = it->second;
  }
  Built b{std::move(obj), m.cells(s, in)};
  for (const auto& c : b.cells) {
    if (!c.expr.empty()) continue;
    const BitAddress addr = b.obj.symbols.at(c.labels.front());
    b.obj.words[addr / s.word_size] = s.reduce(c.value);
  }
  b.cells.insert(b.cells.end(), sentinels().begin(), sentinels().end());
  return b;
}

const MacroContract& require_contract(const std::string& name) {
  const MacroContract* m = find_contract(name);
  if (m == nullptr) throw std::invalid_argument("unknown macro '" + name + "'");
  return *m;
}

struct Execution {
  Built built;
  MachineState state;
  RunResult result;
  std::string output;
};

Execution execute(const MacroContract& m, const TestCase& c) {
  const WordSpec s = WordSpec::make(c.word_size);
  Built b = build(m, s, c.inputs);
  RunLimits limits;
  limits.max_steps = m.max_steps;
  MachineState st = load_object(b.obj, limits);
  std::istringstream in(m.input ? m.input(c.inputs) : std::string());
  std::ostringstream out;
  BitIo io(&in, &out);
  RunResult r = run(st, io, limits);
  return {std::move(b), std::move(st), r, out.str()};
}

ClobberReport scan(const MacroContract& m, const Execution& e) {
  ClobberReport rep;
  std::set<std::string> allowed(m.outputs.begin(), m.outputs.end());
  allowed.insert(m.clobbers.begin(), m.clobbers.end());
  std::vector<std::string> names;
  for (const auto& c : e.built.cells) names.push_back(c.labels.front());
  for (const auto& n : kLibraryCells)
    if (e.built.obj.symbols.count(n)) names.push_back(n);
  const unsigned ws = e.built.obj.spec.word_size;
  for (const auto& n : names) {
    const BitAddress addr = e.built.obj.symbols.at(n);
    const Word before = e.built.obj.words[addr / ws];
    const Word after = e.state.memory.read_word(addr);
    if (before == after) continue;
    rep.changed[n] = {before, after};
    if (!allowed.count(n))
      rep.unexpected.push_back(n + ": " + std::to_string(before) + " -> " + std::to_string(after));
  }
  return rep;
}

std::string describe(const TestCase& c) {
  std::ostringstream os;
  os << "macro=" << c.macro << " word_size=" << c.word_size << " seed=" << c.seed << " inputs=";
  for (std::size_t i = 0; i < c.inputs.size(); ++i) os << (i ? "," : "") << c.inputs[i];
  return os.str();
}

Word draw(const WordSpec& s, std::mt19937_64& rng) {
  switch (rng() % 4) {
    case 0: return s.reduce(rng());
    case 1: return rng() & 0xFF;
    default: {
      const unsigned bits = 1 + static_cast<unsigned>(rng() % s.word_size);
      const Word mask = bits == 64 ? ~Word{0} : (Word{1} << bits) - 1;
      return rng() & mask;
    }
  }
}

}  // namespace

const std::vector<MacroContract>& contracts() {
  static const std::vector<MacroContract> all = build_contracts();
  return all;
}

const MacroContract* find_contract(const std::string& name) {
  for (const auto& m : contracts())
    if (m.name == name) return &m;
  return nullptr;
}

std::string gen_driver(const TestCase& c) {
  const MacroContract& m = require_contract(c.macro);
  return render_driver(m, WordSpec::make(c.word_size), c.inputs, false);
}

namespace {

Verdict check_case(const MacroContract& m, const TestCase& c) {
  const WordSpec s = WordSpec::make(c.word_size);
  Verdict v;
  std::vector<std::string> problems;
  try {
    Execution e = execute(m, c);
    v.run = e.result;
    if (e.result.status != RunStatus::Halted)
      problems.push_back("run ended with status " + std::string(status_name(e.result.status)));
    if (e.result.discarded_output_bits != 0)
      problems.push_back(std::to_string(e.result.discarded_output_bits) + " output bits discarded");
    const Expectation want = m.oracle(s, c.inputs);
    for (const auto& [name, value] : want.cells) {
      const Word got = e.state.memory.read_word(e.built.obj.symbols.at(name));
      if (got != value)
        problems.push_back(name + " = " + std::to_string(got) + ", expected " + std::to_string(value));
    }
    if (want.output && *want.output != e.output)
      problems.push_back("output '" + e.output + "', expected '" + *want.output + "'");
    for (const auto& u : scan(m, e).unexpected) problems.push_back("clobbered " + u);
  } catch (const std::exception& ex) {
    problems.push_back(std::string("exception: ") + ex.what());
  }
  v.pass = problems.empty();
  if (!v.pass) {
    std::ostringstream os;
    os << describe(c);
    for (const auto& p : problems) os << "\n  " << p;
    os << "\n  driver:\n" << render_driver(m, s, c.inputs, false);
    v.detail = os.str();
  }
  return v;
}

}  // namespace

Verdict run_case(const TestCase& c) { return check_case(require_contract(c.macro), c); }

ClobberReport clobber_scan(const TestCase& c) {
  const MacroContract& m = require_contract(c.macro);
  return scan(m, execute(m, c));
}

SuiteResult run_suite(const MacroContract& m, unsigned word_size, std::uint64_t seed,
                      std::size_t random_cases) {
  const WordSpec s = WordSpec::make(word_size);
  SuiteResult res;
  res.name = m.name;
  res.word_size = word_size;

  std::vector<std::vector<Word>> inputs;
  if (m.boundary_cases) {
    inputs = m.boundary_cases(s);
  } else {
    const std::vector<Word> edge{0, 1, s.neg_one, s.sign_bit()};
    if (m.arity == 1) {
      for (Word a : edge) inputs.push_back({a});
    } else {
      for (Word a : edge)
        for (Word b : edge) inputs.push_back({a, b});
    }
  }
  std::erase_if(inputs, [&](const std::vector<Word>& in) { return !m.in_domain(s, in); });

  std::seed_seq sseq{seed, static_cast<std::uint64_t>(word_size),
                     static_cast<std::uint64_t>(std::hash<std::string>{}(m.name))};
  std::mt19937_64 rng(sseq);
  for (std::size_t i = 0; i < random_cases; ++i) {
    for (int tries = 0; tries < 10000; ++tries) {
      std::vector<Word> in;
      if (m.random_case) {
        in = m.random_case(s, rng);
      } else {
        for (unsigned j = 0; j < m.arity; ++j) in.push_back(draw(s, rng));
        // Equal operands are rare by chance; force some.
        if (m.arity == 2 && rng() % 8 == 0) in[1] = in[0];
      }
      if (m.in_domain(s, in)) {
        inputs.push_back(std::move(in));
        break;
      }
    }
  }

  for (const auto& in : inputs) {
    TestCase c{m.name, word_size, in, seed};
    Verdict v = check_case(m, c);
    ++res.cases;
    if (!v.pass) {
      ++res.failures;
      res.failure_details.push_back(v.detail);
    }
  }
  return res;
}

}  // namespace bbj
