#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bbj/machine.hpp"
#include "bbj/word_spec.hpp"

namespace bbj {

// Library source for one word size: every macro definition, the function
// wrappers, and conditional function bodies and library cells. Programs pull
// it in with ".include lib" and must start with "Z0:0 Z1:0".
std::string gen_lib(const WordSpec& spec);

// Dependency tiers of the public library macros: 1 bit-level (copy, shift,
// roll, test, I/O), 2 increment level, 3 adder level, 4 built on the adder.
struct LibraryMacro {
  std::string name;
  int tier;
  // Name of the internal macro holding the shared function body, if any.
  std::string function_body;
};

const std::vector<LibraryMacro>& library_macros();
const LibraryMacro* find_library_macro(const std::string& name);

struct SampleProgram {
  std::string name;
  std::string source;
  std::string expected_output;
  std::string input;
  RunStatus expected_status = RunStatus::Halted;
};

inline const std::vector<std::string>& sample_names() {
  static const std::vector<std::string> names{"hello", "hi", "factorial", "echo", "printnum"};
  return names;
}

// Reads <name>.asm, <name>.expected and the optional <name>.in from dir.
SampleProgram load_sample(const std::filesystem::path& dir, const std::string& name);

}  // namespace bbj
