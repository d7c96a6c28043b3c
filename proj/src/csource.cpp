#include "pathtest/csource.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <unordered_set>

#include "pathtest/errors.hpp"
#include "pathtest/util.hpp"

namespace pathtest::csource {

using clex::TokKind;
using clex::Token;

std::string Signature::spelling(const std::string& name) const {
  std::string out = return_type;
  if (out.empty()) out = "void";
  if (out.back() != '*') out += ' ';
  out += name;
  out += '(';
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < param_types.size(); ++i) {
    if (i < param_texts.size() && !param_texts[i].empty()) {
      parts.push_back(param_texts[i]);
    } else if (i < param_names.size() && !param_names[i].empty()) {
      parts.push_back(param_types[i] + " " + param_names[i]);
    } else {
      parts.push_back(param_types[i]);
    }
  }
  if (variadic) parts.push_back("...");
  if (parts.empty()) parts.push_back("void");
  out += util::join(parts, ", ");
  out += ')';
  return out;
}

bool is_standard_identifier(const std::string& name) {
  static const std::unordered_set<std::string> kStd = {
      // stdlib / string
      "malloc", "free", "calloc", "realloc", "exit", "abort", "atoi", "atol",
      "atof", "strtol", "strtod", "rand", "srand", "qsort", "bsearch", "abs",
      "labs", "memcpy", "memset", "memmove", "memcmp", "strlen", "strcpy",
      "strncpy", "strcmp", "strncmp", "strcat", "strncat", "strchr", "strrchr",
      "strstr", "strdup", "strtok",
      // stdio
      "printf", "fprintf", "sprintf", "snprintf", "puts", "putchar", "putc",
      "fputs", "fputc", "scanf", "fscanf", "sscanf", "getchar", "getc",
      "fgets", "gets", "fopen", "fclose", "fread", "fwrite", "fflush",
      "perror", "fgetc",
      // math
      "pow", "sqrt", "floor", "ceil", "fabs", "fmod", "log", "log2", "log10",
      "exp", "sin", "cos", "tan", "round",
      // ctype
      "isdigit", "isalpha", "isalnum", "isspace", "isupper", "islower",
      "ispunct", "toupper", "tolower",
      // misc
      "assert", "sizeof", "va_start", "va_end", "va_arg", "time", "clock",
  };
  return kStd.count(name) > 0;
}

namespace {

const std::unordered_set<std::string>& io_call_set() {
  static const std::unordered_set<std::string> kIo = {
      "printf", "fprintf", "puts", "putchar", "putc", "fputs", "fputc",
      "scanf", "fscanf", "getchar", "getc", "fgets", "gets", "perror",
      "fflush", "vprintf",
  };
  return kIo;
}

bool stmts_are_io_only(const std::vector<cparse::StmtPtr>& stmts) {
  for (const auto& s : stmts) {
    switch (s->kind) {
      case cparse::Stmt::Kind::Expr:
        break;  // checked via the call scan below
      case cparse::Stmt::Kind::Return:
        if (util::collapse_ws(s->text) != "return ;" &&
            util::collapse_ws(s->text) != "return;")
          return false;
        break;
      case cparse::Stmt::Kind::Block:
        if (!stmts_are_io_only(s->body)) return false;
        break;
      default:
        return false;  // any control flow or declaration means real logic
    }
  }
  return true;
}

bool body_is_io_only(const cparse::ParsedFile& pf, const cparse::FunctionDecl& fn) {
  auto stmts = cparse::parse_statements(pf.tokens, fn.body_lbrace + 1,
                                        fn.body_rbrace, pf.source);
  if (stmts.empty()) return false;
  if (!stmts_are_io_only(stmts)) return false;
  auto calls = cparse::call_positions(pf.tokens, fn.body_lbrace + 1, fn.body_rbrace);
  if (calls.empty()) return false;
  for (const auto& c : calls) {
    if (!io_call_set().count(c)) return false;
  }
  return true;
}

// Removes one token from a source slice along with trailing whitespace.
std::string drop_token(const std::string& text, std::size_t rel_off,
                       std::size_t len) {
  std::string out = text.substr(0, rel_off);
  std::size_t rest = rel_off + len;
  while (rest < text.size() && (text[rest] == ' ' || text[rest] == '\t')) ++rest;
  out += text.substr(rest);
  return out;
}

std::string definition_text(const cparse::ParsedFile& pf,
                            const cparse::FunctionDecl& fn, bool strip_static) {
  std::string text = clex::slice(pf.source, pf.tokens[fn.first_tok],
                                 pf.tokens[fn.last_tok]);
  if (strip_static && fn.static_tok != static_cast<std::size_t>(-1)) {
    const Token& st = pf.tokens[fn.static_tok];
    std::size_t base = pf.tokens[fn.first_tok].offset;
    text = drop_token(text, st.offset - base, st.length);
  }
  return text;
}

std::string global_text(const cparse::ParsedFile& pf, const cparse::GlobalDecl& g,
                        bool strip_static) {
  std::string text = g.text;
  if (strip_static && g.static_tok != static_cast<std::size_t>(-1)) {
    const Token& st = pf.tokens[g.static_tok];
    std::size_t base = pf.tokens[g.first_tok].offset;
    text = drop_token(text, st.offset - base, st.length);
  }
  return text;
}

// Prototype as written in the source, minus storage-class specifiers.
std::string prototype_of(const cparse::ParsedFile& pf,
                         const cparse::FunctionDecl& fn) {
  std::size_t rparen = fn.body_lbrace - 1;  // ')' sits right before '{'
  std::string text = util::collapse_ws(
      clex::slice(pf.source, pf.tokens[fn.first_tok], pf.tokens[rparen]));
  for (;;) {
    if (util::starts_with(text, "static ")) text = text.substr(7);
    else if (util::starts_with(text, "inline ")) text = text.substr(7);
    else if (util::starts_with(text, "extern ")) text = text.substr(7);
    else break;
  }
  return text + ";";
}

bool is_excluded(const std::string& name, const cparse::ParsedFile& pf,
                 const cparse::FunctionDecl& fn, const IngestOptions& opts) {
  for (const auto& pat : opts.exclude_patterns) {
    if (std::regex_search(name, std::regex(pat))) return true;
  }
  if (opts.exclude_io_only && body_is_io_only(pf, fn)) return true;
  return false;
}

}  // namespace

SourceProject ingest_project(const IngestOptions& opts) {
  SourceProject project;
  project.root_path = opts.root;
  project.name = opts.root.filename().string();
  if (project.name.empty()) project.name = opts.root.parent_path().filename().string();

  auto files = util::collect_files(opts.root, {".c", ".h"});
  bool any_c = std::any_of(files.begin(), files.end(), [](const fs::path& p) {
    return p.extension() == ".c";
  });
  if (!any_c) throw NoSourcesFound(opts.root.string());

  std::set<fs::path> dirs;
  for (const auto& path : files) {
    SourceFileRecord rec;
    rec.path = path;
    rec.text = util::read_file(path);
    try {
      rec.parsed = cparse::parse_file(path, rec.text);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseFailure(path.string(), e.what());
    }
    dirs.insert(path.parent_path());
    project.source_files.push_back(std::move(rec));
  }
  project.include_dirs.assign(dirs.begin(), dirs.end());

  for (std::size_t fi = 0; fi < project.source_files.size(); ++fi) {
    const auto& pf = project.source_files[fi].parsed;
    for (const auto& fn : pf.functions) {
      if (project.symbol_table.count(fn.name)) continue;  // first definition wins
      SymbolInfo info;
      info.kind = SymbolKind::Function;
      info.file_index = fi;
      info.line = fn.start_line;
      info.excluded = is_excluded(fn.name, pf, fn, opts);
      project.symbol_table[fn.name] = info;
      project.function_order.push_back(fn.name);
    }
    for (const auto& td : pf.types) {
      for (const auto& n : td.defined_names) {
        if (n.empty() || project.symbol_table.count(n)) continue;
        project.symbol_table[n] = {SymbolKind::Type, fi, td.line, false};
      }
    }
    for (const auto& m : pf.macros) {
      if (m.name.empty() || project.symbol_table.count(m.name)) continue;
      project.symbol_table[m.name] = {SymbolKind::Macro, fi, m.line, false};
    }
    for (const auto& g : pf.globals) {
      if (g.name.empty() || g.is_extern || project.symbol_table.count(g.name)) continue;
      project.symbol_table[g.name] = {SymbolKind::Global, fi, g.line, false};
    }
  }
  return project;
}

const cparse::FunctionDecl* find_function_decl(const SourceProject& project,
                                               const std::string& name) {
  auto it = project.symbol_table.find(name);
  if (it == project.symbol_table.end() || it->second.kind != SymbolKind::Function)
    return nullptr;
  const auto& pf = project.source_files[it->second.file_index].parsed;
  for (const auto& fn : pf.functions) {
    if (fn.name == name) return &fn;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// header generation
// ---------------------------------------------------------------------------

namespace {

const std::unordered_set<std::string>& builtin_type_words() {
  static const std::unordered_set<std::string> kTypes = {
      "void", "char", "short", "int", "long", "float", "double", "signed",
      "unsigned", "const", "volatile", "struct", "union", "enum", "size_t",
      "ssize_t", "ptrdiff_t", "FILE", "va_list", "bool", "_Bool", "int8_t",
      "int16_t", "int32_t", "int64_t", "uint8_t", "uint16_t", "uint32_t",
      "uint64_t", "intptr_t", "uintptr_t", "time_t", "wchar_t",
  };
  return kTypes;
}

// Identifiers appearing in a type spelling that must name a known type.
void check_type_spelling(const std::string& spelling,
                         const std::set<std::string>& known) {
  auto toks = clex::tokenize(spelling);
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    const Token& t = toks[i];
    bool word = t.kind == TokKind::Identifier || t.kind == TokKind::Keyword;
    if (!word) continue;
    // skip parameter names: an identifier directly before ',' ')' '[' or end
    // that follows another type word is the declarator, not a type
    if (t.kind == TokKind::Identifier && !builtin_type_words().count(t.text) &&
        !known.count(t.text)) {
      bool next_closes = i + 1 >= toks.size() - 1 ||
                         (toks[i + 1].kind == TokKind::Punct &&
                          (toks[i + 1].text == "," || toks[i + 1].text == ")" ||
                           toks[i + 1].text == "[" || toks[i + 1].text == "]"));
      bool prev_is_type_word =
          i > 0 && (toks[i - 1].kind == TokKind::Keyword ||
                    toks[i - 1].kind == TokKind::Identifier ||
                    (toks[i - 1].kind == TokKind::Punct && toks[i - 1].text == "*"));
      if (next_closes && prev_is_type_word) continue;  // declarator name
      throw UnresolvedType(t.text);
    }
  }
}

std::vector<const cparse::TypeDecl*> topo_sort_types(const SourceProject& project) {
  std::vector<const cparse::TypeDecl*> types;
  std::map<std::string, std::size_t> index_of;  // defined name -> types index
  for (const auto& rec : project.source_files) {
    for (const auto& td : rec.parsed.types) {
      for (const auto& n : td.defined_names) {
        if (!n.empty() && !index_of.count(n)) index_of[n] = types.size();
      }
      types.push_back(&td);
    }
  }

  // dependency edges: type i mentions a name defined by type j (i != j)
  std::vector<std::vector<std::size_t>> deps(types.size());
  for (std::size_t i = 0; i < types.size(); ++i) {
    auto toks = clex::tokenize(types[i]->text);
    for (const auto& t : toks) {
      if (t.kind != TokKind::Identifier) continue;
      auto it = index_of.find(t.text);
      if (it != index_of.end() && it->second != i) deps[i].push_back(it->second);
    }
  }

  std::vector<const cparse::TypeDecl*> out;
  std::vector<int> state(types.size(), 0);  // 0 unvisited, 1 in progress, 2 done
  auto visit = [&](auto&& self, std::size_t i) -> void {
    if (state[i] != 0) return;  // cycles fall back to original order
    state[i] = 1;
    for (auto d : deps[i]) {
      if (state[d] == 0) self(self, d);
    }
    state[i] = 2;
    out.push_back(types[i]);
  };
  for (std::size_t i = 0; i < types.size(); ++i) visit(visit, i);
  return out;
}

}  // namespace

std::string generate_project_header(const SourceProject& project) {
  std::string guard = project.name;
  for (auto& c : guard) {
    c = std::isalnum(static_cast<unsigned char>(c)) ? std::toupper(c) : '_';
  }
  guard += "_PROJECT_H";

  std::string out;
  out += "#ifndef " + guard + "\n#define " + guard + "\n\n";

  // system includes, first appearance order, deduplicated
  std::vector<std::string> incs;
  for (const auto& rec : project.source_files) {
    for (const auto& inc : rec.parsed.includes) {
      if (inc.find('<') == std::string::npos) continue;  // project-local, inlined
      if (std::find(incs.begin(), incs.end(), inc) == incs.end()) incs.push_back(inc);
    }
  }
  for (const auto& inc : incs) out += inc + "\n";
  if (!incs.empty()) out += "\n";

  // macros, first definition wins
  std::set<std::string> seen_macros;
  for (const auto& rec : project.source_files) {
    for (const auto& m : rec.parsed.macros) {
      if (!seen_macros.insert(m.name).second) continue;
      out += util::trim(m.text) + "\n";
    }
  }
  if (!seen_macros.empty()) out += "\n";

  // types in dependency order
  std::set<const cparse::TypeDecl*> emitted;
  for (const auto* td : topo_sort_types(project)) {
    if (!emitted.insert(td).second) continue;
    out += util::trim(td->text) + "\n";
  }
  if (!emitted.empty()) out += "\n";

  // extern declarations for globals
  for (const auto& rec : project.source_files) {
    for (const auto& g : rec.parsed.globals) {
      if (g.is_extern) continue;
      // strip any initializer: keep tokens up to the depth-0 '='
      auto toks = clex::tokenize(g.text);
      std::string decl;
      int depth = 0;
      for (const auto& t : toks) {
        if (t.kind == TokKind::Eof) break;
        if (t.kind == TokKind::Punct &&
            (t.text == "(" || t.text == "[" || t.text == "{"))
          ++depth;
        else if (t.kind == TokKind::Punct &&
                 (t.text == ")" || t.text == "]" || t.text == "}"))
          --depth;
        else if (depth == 0 && t.kind == TokKind::Punct && t.text == "=")
          break;
        if (t.kind == TokKind::Keyword && t.text == "static") continue;
        if (t.kind == TokKind::Punct && t.text == ";") break;
        if (!decl.empty() && t.text != "[" && t.text != "]" &&
            decl.back() != '[')
          decl += ' ';
        decl += t.text;
      }
      if (!decl.empty()) out += "extern " + decl + ";\n";
    }
  }

  // prototypes for non-excluded functions
  std::set<std::string> known_types;
  for (const auto& [name, info] : project.symbol_table) {
    if (info.kind == SymbolKind::Type || info.kind == SymbolKind::Macro)
      known_types.insert(name);
  }
  out += "\n";
  for (const auto& name : project.function_order) {
    const auto& info = project.symbol_table.at(name);
    if (info.excluded) continue;
    const auto* fn = find_function_decl(project, name);
    if (!fn) continue;
    const auto& pf = project.source_files[info.file_index].parsed;
    check_type_spelling(fn->return_type, known_types);
    for (const auto& p : fn->params) check_type_spelling(p.type, known_types);
    out += prototype_of(pf, *fn) + "\n";
  }
  out += "\n#endif /* " + guard + " */\n";
  return out;
}

// ---------------------------------------------------------------------------
// function extraction
// ---------------------------------------------------------------------------

std::vector<FunctionUnit> extract_functions(const SourceProject& project) {
  std::vector<FunctionUnit> units;
  for (const auto& name : project.function_order) {
    const auto& info = project.symbol_table.at(name);
    if (info.excluded) continue;
    const auto* fn = find_function_decl(project, name);
    if (!fn) throw ExtractionFailure(name, "definition not found after ingest");
    const auto& rec = project.source_files[info.file_index];
    const auto& pf = rec.parsed;

    FunctionUnit unit;
    unit.name = name;
    unit.was_static = fn->is_static;
    unit.body = definition_text(pf, *fn, /*strip_static=*/true);
    unit.source_span = {rec.path, fn->start_line, fn->end_line};
    unit.signature.return_type = fn->return_type;
    unit.signature.variadic = fn->variadic;
    for (const auto& p : fn->params) {
      unit.signature.param_types.push_back(p.type);
      unit.signature.param_names.push_back(p.name);
      unit.signature.param_texts.push_back(p.text);
    }

    std::set<std::string> deps;
    auto calls = cparse::call_positions(pf.tokens, fn->body_lbrace, fn->body_rbrace);
    std::set<std::string> macro_names;
    for (const auto& c : calls) {
      auto it = project.symbol_table.find(c);
      if (it != project.symbol_table.end()) {
        if (it->second.kind == SymbolKind::Function) {
          deps.insert(c);
        } else if (it->second.kind == SymbolKind::Macro) {
          macro_names.insert(c);
        }
      } else if (is_standard_identifier(c)) {
        deps.insert(c);
      }
      // anything else: local function pointers etc., not trackable
    }
    unit.deps.assign(deps.begin(), deps.end());
    for (const auto& mn : macro_names) {
      const auto& minfo = project.symbol_table.at(mn);
      const auto& mpf = project.source_files[minfo.file_index].parsed;
      for (const auto& m : mpf.macros) {
        if (m.name == mn && m.function_like) {
          unit.local_macros.push_back(util::trim(m.text));
          break;
        }
      }
    }
    units.push_back(std::move(unit));
  }
  return units;
}

std::string generate_globals_source(const SourceProject& project) {
  std::string out = "#include \"header.h\"\n\n";
  for (const auto& rec : project.source_files) {
    for (const auto& g : rec.parsed.globals) {
      if (g.is_extern) continue;
      out += global_text(rec.parsed, g, /*strip_static=*/true) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// description stage
// ---------------------------------------------------------------------------

std::string describe_function(FunctionUnit& fn,
                              const std::vector<std::string>& linearized_paths,
                              llm::LlmClient& client) {
  std::string prompt =
      "Summarize what the following C function does in one to three "
      "sentences. Mention the data structure it operates on and the key "
      "behavior of each branch. Reply with the description only.\n\n"
      "Function:\n```c\n" + fn.body + "\n```\n";
  if (!fn.deps.empty()) {
    prompt += "\nIt calls: " + util::join(fn.deps, ", ") + "\n";
  }
  if (!linearized_paths.empty()) {
    prompt += "\nEnumerated execution paths:\n";
    for (const auto& p : linearized_paths) prompt += "  " + p + "\n";
  }

  llm::ChatRequest req(
      llm::Stage::Describe,
      {{"system", "You are an expert C developer who writes precise one-line "
                  "summaries of code behavior."},
       {"user", prompt}},
      fn.name);
  llm::ChatResponse resp = client.chat(req);
  std::string desc = util::trim(resp.text);
  if (desc.empty()) throw MalformedResponse("empty description for " + fn.name);
  fn.desc = desc;
  return desc;
}

}  // namespace pathtest::csource
