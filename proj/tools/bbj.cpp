#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bbj/assembler.hpp"
#include "bbj/harness.hpp"
#include "bbj/machine.hpp"
#include "bbj/object.hpp"
#include "bbj/stdlib.hpp"

namespace {

struct Options {
  unsigned word_size = 32;
  std::vector<std::string> include_paths;
  std::string output;
  bool symbols = false;
  bool trace = false;
  bool stats = false;
  std::uint64_t max_steps = 10'000'000'000ULL;
  std::uint64_t max_mem_bits = std::uint64_t{1} << 26;
  bool eof_zero = false;
  std::string in_file;
  std::string out_file;
  std::string source;

  std::string macro;
  std::uint64_t seed = 1;
  std::optional<unsigned> selftest_ws;
  std::optional<std::size_t> cases;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bbj::AssembleOptions assemble_options(const Options& o) {
  bbj::AssembleOptions a;
  a.word_size = o.word_size;
  a.include_paths = {o.include_paths.begin(), o.include_paths.end()};
  a.max_memory_bits = o.max_mem_bits;
  return a;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << w << '\n';
}

// Text output goes to -o when given, stdout otherwise.
void emit(const Options& o, const std::string& text) {
  if (o.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.output, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + o.output + "'");
  f << text;
}

int cmd_asm(const Options& o) {
  auto r = bbj::assemble(slurp(o.source), o.source, assemble_options(o));
  print_warnings(r.warnings);
  if (o.output.empty()) {
    bbj::write_object(std::cout, r.object);
    if (o.symbols) std::cerr << "note: --symbols needs -o; sidecar not written\n";
  } else {
    bbj::save_object(o.output, r.object, o.symbols);
  }
  return 0;
}

int cmd_run(const Options& o) {
  const std::string text = slurp(o.source);
  bbj::ObjectProgram obj;
  if (bbj::looks_like_object(text)) {
    obj = bbj::parse_object(text);
  } else {
    auto r = bbj::assemble(text, o.source, assemble_options(o));
    print_warnings(r.warnings);
    obj = std::move(r.object);
  }

  bbj::RunLimits limits;
  limits.max_steps = o.max_steps;
  limits.max_memory_bits = o.max_mem_bits;
  limits.eof = o.eof_zero ? bbj::EofPolicy::FeedZero : bbj::EofPolicy::Halt;

  std::unique_ptr<std::ifstream> fin;
  std::unique_ptr<std::ofstream> fout;
  std::istream* in = &std::cin;
  std::ostream* out = &std::cout;
  if (!o.in_file.empty()) {
    fin = std::make_unique<std::ifstream>(o.in_file, std::ios::binary);
    if (!*fin) throw std::runtime_error("cannot open '" + o.in_file + "'");
    in = fin.get();
  }
  if (!o.out_file.empty()) {
    fout = std::make_unique<std::ofstream>(o.out_file, std::ios::binary);
    if (!*fout) throw std::runtime_error("cannot write '" + o.out_file + "'");
    out = fout.get();
  }

  bbj::MachineState state = bbj::load_object(obj, limits);
  bbj::BitIo io(in, out);
  const auto t0 = std::chrono::steady_clock::now();
  const bbj::RunResult r = bbj::run(state, io, limits, o.trace ? &std::cerr : nullptr);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out->flush();

  if (o.stats) {
    std::cerr << "status " << bbj::status_name(r.status) << '\n'
              << "steps " << r.steps << '\n'
              << "instructions " << obj.instruction_count() << '\n'
              << "peak_memory_bits " << r.peak_memory_bits << '\n'
              << "bytes_out " << io.bytes_written() << '\n'
              << "discarded_output_bits " << r.discarded_output_bits << '\n'
              << "seconds " << secs << '\n';
  } else if (r.status != bbj::RunStatus::Halted) {
    std::cerr << "stopped: " << bbj::status_name(r.status) << " after " << r.steps << " steps\n";
  }
  return bbj::exit_code(r.status);
}

int cmd_expand(const Options& o) {
  emit(o, bbj::expand_dump(slurp(o.source), o.source, assemble_options(o)));
  return 0;
}

int cmd_genlib(const Options& o) {
  emit(o, bbj::gen_lib(bbj::WordSpec::make(o.word_size)));
  return 0;
}

int cmd_selftest(const Options& o) {
  std::vector<unsigned> sizes;
  if (o.selftest_ws) {
    sizes.push_back(*o.selftest_ws);
  } else {
    sizes = {16, 32};
  }
  std::vector<const bbj::MacroContract*> chosen;
  if (!o.macro.empty()) {
    const auto* m = bbj::find_contract(o.macro);
    if (m == nullptr) throw std::runtime_error("unknown macro '" + o.macro + "'");
    chosen.push_back(m);
  } else {
    for (const auto& m : bbj::contracts()) chosen.push_back(&m);
  }
  std::size_t total_failures = 0;
  for (unsigned ws : sizes) {
    for (const auto* m : chosen) {
      if (ws < m->min_word_size && o.macro.empty()) continue;
      const std::size_t n = o.cases ? *o.cases : (m->arity >= 2 ? 200 : 100);
      auto res = bbj::run_suite(*m, ws, o.seed, n);
      std::cout << res.name << ' ' << res.word_size << ' ' << res.cases << ' ' << res.failures << '\n';
      std::cout.flush();
      for (const auto& d : res.failure_details) std::cerr << d << '\n';
      total_failures += res.failures;
    }
  }
  return total_failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Assembler, emulator and library for the bit-copy-jump machine"};
  app.require_subcommand(1, 1);
  Options o;

  auto word_size_check = CLI::Validator(
      [](std::string& s) -> std::string {
        unsigned long v = std::strtoul(s.c_str(), nullptr, 10);
        return bbj::WordSpec::valid_size(static_cast<unsigned>(v)) ? ""
                                                                 : "word size must be a power of two in [8, 64]";
      },
      "WS");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--word-size", o.word_size, "Word size in bits")->check(word_size_check);
    sub->add_option("-I", o.include_paths, "Include search path")->allow_extra_args(false);
    sub->add_option("--max-mem-bits", o.max_mem_bits, "Memory cap in bits");
  };

  auto* asm_cmd = app.add_subcommand("asm", "Assemble a source file into an object file");
  asm_cmd->add_option("source", o.source)->required();
  add_common(asm_cmd);
  asm_cmd->add_option("-o", o.output, "Object file path");
  asm_cmd->add_flag("--symbols", o.symbols, "Also write <output>.sym");

  auto* run_cmd = app.add_subcommand("run", "Run an object or assembly file");
  run_cmd->add_option("program", o.source)->required();
  add_common(run_cmd);
  run_cmd->add_flag("--trace", o.trace, "Print one line per step to stderr");
  run_cmd->add_flag("--stats", o.stats, "Print run counters to stderr");
  run_cmd->add_option("--max-steps", o.max_steps, "Step limit");
  run_cmd->add_flag("--eof-zero", o.eof_zero, "Feed 0 bits after end of input");
  run_cmd->add_option("--in", o.in_file, "Read machine input from file");
  run_cmd->add_option("--out", o.out_file, "Write machine output to file");

  auto* expand_cmd = app.add_subcommand("expand", "Print the program after macro expansion");
  expand_cmd->add_option("source", o.source)->required();
  add_common(expand_cmd);
  expand_cmd->add_option("-o", o.output, "Output path");

  auto* genlib_cmd = app.add_subcommand("genlib", "Print the generated library");
  genlib_cmd->add_option("--word-size", o.word_size, "Word size in bits")->check(word_size_check);
  genlib_cmd->add_option("-o", o.output, "Output path");

  auto* self_cmd = app.add_subcommand("selftest", "Run the differential macro suites");
  self_cmd->add_option("--macro", o.macro, "Only this macro");
  self_cmd->add_option("--seed", o.seed, "Random seed");
  self_cmd->add_option("--word-size", o.selftest_ws, "Only this word size")->check(word_size_check);
  self_cmd->add_option("--cases", o.cases, "Random cases per suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*asm_cmd) return cmd_asm(o);
    if (*run_cmd) return cmd_run(o);
    if (*expand_cmd) return cmd_expand(o);
    if (*genlib_cmd) return cmd_genlib(o);
    if (*self_cmd) return cmd_selftest(o);
  } catch (const bbj::AssemblyError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
