#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbj/word_spec.hpp"

namespace bbj {

// Assembled program: cell values from address 0 and the global symbol table
// (label -> bit address).
struct ObjectProgram {
  WordSpec spec;
  std::vector<Word> words;
  std::map<std::string, BitAddress> symbols;

  std::size_t instruction_count() const { return words.size() / 3; }

  friend bool operator==(const ObjectProgram&, const ObjectProgram&) = default;
};

class ObjectFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kObjectMagic = "bbj1";

// Header line "bbj1 <word_size>", then whitespace separated unsigned decimals.
void write_object(std::ostream& out, const ObjectProgram& obj);
std::string object_text(const ObjectProgram& obj);
ObjectProgram parse_object(std::istream& in);
ObjectProgram parse_object(const std::string& text);

// One "name address" line per symbol, sorted by name.
void write_symbols(std::ostream& out, const ObjectProgram& obj);
std::map<std::string, BitAddress> parse_symbols(std::istream& in);

// File helpers. read_object also loads "<path>.sym" when present.
void save_object(const std::filesystem::path& path, const ObjectProgram& obj, bool with_symbols);
ObjectProgram read_object(const std::filesystem::path& path);

// True when the text starts with the object header token.
bool looks_like_object(const std::string& text);

}  // namespace bbj
