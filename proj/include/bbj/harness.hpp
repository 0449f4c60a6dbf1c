#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bbj/machine.hpp"
#include "bbj/object.hpp"
#include "bbj/word_spec.hpp"

namespace bbj {

// A labelled data cell in a driver program. value cells are patched per case;
// expr cells (e.g. a pointer "T") are fixed text.
struct DriverCell {
  std::vector<std::string> labels;
  Word value = 0;
  std::string expr;
};

// What a driver run must produce: result cells by name and/or output bytes.
struct Expectation {
  std::vector<std::pair<std::string, Word>> cells;
  std::optional<std::string> output;
};

// How one library macro is exercised and checked. Drivers write branch
// outcomes into RES0 as 1 (first target) or 2 (second target).
struct MacroContract {
  std::string name;
  unsigned arity = 1;
  std::vector<std::string> outputs;   // cells allowed to change
  std::vector<std::string> clobbers;  // library cells allowed to change
  std::uint64_t max_steps = 100'000'000;
  // Smallest word size whose address space holds the driver and library.
  unsigned min_word_size = 16;

  std::function<bool(const WordSpec&, const std::vector<Word>&)> in_domain;
  std::function<std::string(const WordSpec&, const std::vector<Word>&)> code;
  std::function<std::vector<DriverCell>(const WordSpec&, const std::vector<Word>&)> cells;
  std::function<std::string(const std::vector<Word>&)> input;
  std::function<Expectation(const WordSpec&, const std::vector<Word>&)> oracle;
  // Optional custom generators; defaults draw arity words.
  std::function<std::vector<Word>(const WordSpec&, std::mt19937_64&)> random_case;
  std::function<std::vector<std::vector<Word>>(const WordSpec&)> boundary_cases;
};

const std::vector<MacroContract>& contracts();
const MacroContract* find_contract(const std::string& name);

struct TestCase {
  std::string macro;
  unsigned word_size = 32;
  std::vector<Word> inputs;
  std::uint64_t seed = 0;
};

// Full driver source for a case: "Z0:0 Z1:0", the invocation, halt, labelled
// data cells, ".include lib". Throws std::invalid_argument for an unknown macro.
std::string gen_driver(const TestCase& c);

struct Verdict {
  bool pass = false;
  std::string detail;  // reproduction data when pass is false
  RunResult run;
};

Verdict run_case(const TestCase& c);

struct ClobberReport {
  std::vector<std::string> unexpected;  // "name: before -> after"
  std::map<std::string, std::pair<Word, Word>> changed;
};

// Compares every driver data cell and library cell before and after the run.
ClobberReport clobber_scan(const TestCase& c);

struct SuiteResult {
  std::string name;
  unsigned word_size = 0;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_details;
};

// Boundary cases (0, 1, -1, 2^(ws-1) combinations inside the domain) followed
// by random_cases random inputs. Reproducible from (seed, word_size, name).
SuiteResult run_suite(const MacroContract& m, unsigned word_size, std::uint64_t seed,
                      std::size_t random_cases);

// Host-side helpers shared with the tests.
std::int64_t to_signed(const WordSpec& s, Word v);
Word from_signed(const WordSpec& s, std::int64_t v);

}  // namespace bbj
