#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "bbj/assembler.hpp"

namespace bbj {

namespace {

void referenced_symbols(const std::vector<Component>& cs, std::vector<std::string>& out) {
  for (const auto& c : cs)
    if (c.kind == Component::Kind::Symbol) out.push_back(c.name);
}

std::vector<std::string> line_references(const FlatLine& l) {
  std::vector<std::string> out;
  for (const auto& e : l.exprs) {
    referenced_symbols(e.expr.term, out);
    referenced_symbols(e.expr.offset, out);
  }
  return out;
}

template <typename F>
void for_each_label(const FlatLine& l, F&& f) {
  for (const auto& e : l.exprs)
    for (const auto& name : e.labels) f(name);
  for (const auto& name : l.trailing_labels) f(name);
}

}  // namespace

Layout layout(const std::vector<FlatLine>& lines, const std::vector<bool>& active,
              const WordSpec& spec) {
  Layout out;
  out.line_address.assign(lines.size(), 0);
  std::unordered_map<std::string, SourceLoc> where;
  std::vector<std::string> errors;
  std::vector<std::pair<std::string, const SourceLoc*>> pending;
  BitAddress addr = 0;

  auto define = [&](const std::string& name, BitAddress a, const SourceLoc& loc) {
    auto [it, fresh] = where.emplace(name, loc);
    if (!fresh) {
      errors.push_back(loc.str() + ": error: duplicate label '" + name + "' (first defined at " +
                       it->second.str() + ")");
      return;
    }
    out.symbols[name] = a;
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!active[i]) continue;
    const FlatLine& l = lines[i];
    out.line_address[i] = addr;
    for (const auto& e : l.exprs) {
      for (const auto& [name, loc] : pending) define(name, addr, *loc);
      pending.clear();
      for (const auto& name : e.labels) define(name, addr, l.loc);
      addr += spec.word_size;
      ++out.cell_count;
    }
    for (const auto& name : l.trailing_labels) pending.emplace_back(name, &l.loc);
  }
  for (const auto& [name, loc] : pending) define(name, addr, *loc);
  if (!errors.empty()) throw AssemblyError(std::move(errors));
  return out;
}

std::vector<bool> activate(const std::vector<FlatLine>& lines, std::optional<std::vector<bool>> seed) {
  std::vector<bool> active;
  if (seed) {
    active = std::move(*seed);
  } else {
    active.resize(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) active[i] = !lines[i].conditional;
  }

  std::vector<std::vector<std::string>> refs(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) refs[i] = line_references(lines[i]);

  while (true) {
    std::unordered_set<std::string> defined;
    for (std::size_t i = 0; i < lines.size(); ++i)
      if (active[i]) for_each_label(lines[i], [&](const std::string& n) { defined.insert(n); });
    std::unordered_set<std::string> unresolved;
    for (std::size_t i = 0; i < lines.size(); ++i)
      if (active[i])
        for (const auto& r : refs[i])
          if (!defined.count(r)) unresolved.insert(r);

    bool changed = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (active[i] || !lines[i].conditional) continue;
      if (unresolved.count(lines[i].trigger)) {
        active[i] = true;
        changed = true;
      }
    }
    if (!changed) return active;
  }
}

ObjectProgram resolve_with_conditionals(const std::vector<FlatLine>& lines, const WordSpec& spec,
                                        std::uint64_t max_memory_bits,
                                        std::vector<std::string>* warnings) {
  const std::vector<bool> active = activate(lines);
  Layout lay = layout(lines, active, spec);

  std::vector<std::string> errors;
  std::unordered_set<std::string> reported;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!active[i]) continue;
    for (const auto& r : line_references(lines[i]))
      if (!lay.symbols.count(r) && reported.insert(r).second)
        errors.push_back(lines[i].loc.str() + ": error: unresolved symbol '" + r + "'");
  }
  if (!errors.empty()) throw AssemblyError(std::move(errors));

  const std::uint64_t ws = spec.word_size;
  if (ws < 64 && lay.cell_count > spec.neg_one / ws)
    throw AssemblyError({"error: program of " + std::to_string(lay.cell_count) +
                         " cells does not fit the address space of word size " +
                         std::to_string(ws)});
  if (lay.cell_count > max_memory_bits / ws)
    throw AssemblyError({"error: program of " + std::to_string(lay.cell_count) +
                         " cells exceeds the memory limit of " + std::to_string(max_memory_bits) +
                         " bits"});

  ObjectProgram obj;
  obj.spec = spec;
  obj.words.reserve(lay.cell_count);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!active[i]) continue;
    BitAddress pos = lay.line_address[i];
    for (const auto& e : lines[i].exprs) {
      obj.words.push_back(eval_expr(e.expr, pos, lay.symbols, spec));
      pos += ws;
    }
  }
  for (auto& [name, addr] : lay.symbols)
    if (name.find('$') == std::string::npos) obj.symbols.emplace(name, addr);

  if (warnings) {
    auto z0 = obj.symbols.find("Z0");
    auto z1 = obj.symbols.find("Z1");
    if ((z0 != obj.symbols.end() && z0->second != 0) ||
        (z1 != obj.symbols.end() && z1->second != ws))
      warnings->push_back("warning: Z0 and Z1 should be the first two cells of the program");
  }
  return obj;
}

namespace {

ParsedSource parse_with_options(std::string_view text, const std::string& file_name,
                                const AssembleOptions& opts, const WordSpec& spec) {
  std::vector<std::filesystem::path> paths = opts.include_paths;
  if (const char* env = std::getenv("BBJ_INCLUDE"); env != nullptr && *env != '\0')
    paths.emplace_back(env);
  FileIncludeResolver resolver(spec, std::move(paths));
  return parse(text, file_name, std::filesystem::path(file_name).parent_path(), resolver);
}

WordSpec spec_for(const AssembleOptions& opts) {
  if (!WordSpec::valid_size(opts.word_size))
    throw AssemblyError({"error: word size must be a power of two between 8 and 64, got " +
                         std::to_string(opts.word_size)});
  return WordSpec::make(opts.word_size);
}

}  // namespace

AssembleResult assemble(std::string_view text, const std::string& file_name,
                        const AssembleOptions& opts) {
  const WordSpec spec = spec_for(opts);
  AssembleResult r;
  ParsedSource src = parse_with_options(text, file_name, opts, spec);
  auto lines = expand(src, &r.warnings);
  r.object = resolve_with_conditionals(lines, spec, opts.max_memory_bits, &r.warnings);
  return r;
}

AssembleResult assemble_file(const std::filesystem::path& path, const AssembleOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AssemblyError({"error: cannot read '" + path.string() + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return assemble(ss.str(), path.string(), opts);
}

std::string expand_dump(std::string_view text, const std::string& file_name,
                        const AssembleOptions& opts) {
  const WordSpec spec = spec_for(opts);
  ParsedSource src = parse_with_options(text, file_name, opts, spec);
  auto lines = expand(src);
  auto active = activate(lines);
  std::ostringstream os;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const FlatLine& l = lines[i];
    std::string row;
    if (l.conditional) row = ":" + l.trigger + (active[i] ? ":on " : ":off ");
    bool first = true;
    for (const auto& e : l.exprs) {
      if (!first) row += ' ';
      first = false;
      for (const auto& lab : e.labels) row += lab + ":";
      row += e.text;
    }
    for (const auto& lab : l.trailing_labels) {
      if (!first) row += ' ';
      first = false;
      row += lab + ":";
    }
    os << row << '\n';
  }
  return os.str();
}

}  // namespace bbj
