#include "bbj/object.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace bbj {

namespace {

Word parse_unsigned(const std::string& tok, const char* what) {
  Word v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    throw ObjectFormatError(std::string("malformed ") + what + " '" + tok + "'");
  return v;
}

std::filesystem::path symbols_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".sym";
  return p;
}

}  // namespace

void write_object(std::ostream& out, const ObjectProgram& obj) {
  out << kObjectMagic << ' ' << obj.spec.word_size << '\n';
  for (std::size_t i = 0; i < obj.words.size(); ++i) {
    out << obj.words[i];
    out << ((i % 3 == 2 || i + 1 == obj.words.size()) ? '\n' : ' ');
  }
}

std::string object_text(const ObjectProgram& obj) {
  std::ostringstream os;
  write_object(os, obj);
  return os.str();
}

ObjectProgram parse_object(std::istream& in) {
  std::string magic, size_tok;
  if (!(in >> magic) || magic != kObjectMagic)
    throw ObjectFormatError("missing '" + std::string(kObjectMagic) + "' header");
  if (!(in >> size_tok)) throw ObjectFormatError("missing word size in header");
  const Word ws = parse_unsigned(size_tok, "word size");
  if (ws > 64 || !WordSpec::valid_size(static_cast<unsigned>(ws)))
    throw ObjectFormatError("invalid word size " + size_tok);

  ObjectProgram obj;
  obj.spec = WordSpec::make(static_cast<unsigned>(ws));
  std::string tok;
  while (in >> tok) {
    if (tok.size() > 20) throw ObjectFormatError("word '" + tok + "' out of range");
    const Word v = parse_unsigned(tok, "word");
    if (v > obj.spec.neg_one)
      throw ObjectFormatError("word " + tok + " out of range for word size " + size_tok);
    obj.words.push_back(v);
  }
  return obj;
}

ObjectProgram parse_object(const std::string& text) {
  std::istringstream is(text);
  return parse_object(is);
}

void write_symbols(std::ostream& out, const ObjectProgram& obj) {
  for (const auto& [name, addr] : obj.symbols) out << name << ' ' << addr << '\n';
}

std::map<std::string, BitAddress> parse_symbols(std::istream& in) {
  std::map<std::string, BitAddress> out;
  std::string name, addr;
  while (in >> name) {
    if (!(in >> addr)) throw ObjectFormatError("symbol '" + name + "' has no address");
    out[name] = parse_unsigned(addr, "symbol address");
  }
  return out;
}

void save_object(const std::filesystem::path& path, const ObjectProgram& obj, bool with_symbols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_object(out, obj);
  if (with_symbols) {
    std::ofstream sym(symbols_path(path), std::ios::binary);
    if (!sym) throw std::runtime_error("cannot write " + symbols_path(path).string());
    write_symbols(sym, obj);
  }
}

ObjectProgram read_object(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  ObjectProgram obj = parse_object(in);
  std::ifstream sym(symbols_path(path), std::ios::binary);
  if (sym) obj.symbols = parse_symbols(sym);
  return obj;
}

bool looks_like_object(const std::string& text) {
  std::istringstream is(text);
  std::string tok;
  return (is >> tok) && tok == kObjectMagic;
}

}  // namespace bbj
