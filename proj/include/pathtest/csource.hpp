#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pathtest/cparse.hpp"
#include "pathtest/llm.hpp"

namespace pathtest::csource {

namespace fs = std::filesystem;

struct Signature {
  std::vector<std::string> param_types;
  std::vector<std::string> param_names;
  std::vector<std::string> param_texts;  // original spellings, name included
  std::string return_type;
  bool variadic = false;

  std::string spelling(const std::string& name) const;  // "int add(int a, int b)"
};

struct SourceFileRecord {
  fs::path path;
  std::string text;
  cparse::ParsedFile parsed;
};

enum class SymbolKind { Function, Type, Macro, Global };

struct SymbolInfo {
  SymbolKind kind = SymbolKind::Function;
  std::size_t file_index = 0;
  int line = 0;
  bool excluded = false;  // meaningful for functions only
};

struct SourceProject {
  fs::path root_path;
  std::string name;  // root directory name, used for artifact paths
  std::vector<SourceFileRecord> source_files;
  std::vector<fs::path> include_dirs;
  std::map<std::string, SymbolInfo> symbol_table;
  // Function names in deterministic (file, position) order, exclusions included.
  std::vector<std::string> function_order;
};

struct SourceSpan {
  fs::path file;
  int start_line = 0;
  int end_line = 0;
};

struct FunctionUnit {
  std::string name;
  Signature signature;
  std::string body;  // emitted definition; external linkage even if was_static
  SourceSpan source_span;
  std::vector<std::string> deps;  // sorted callee names resolvable in-project or libc
  std::string desc;
  bool was_static = false;
  std::vector<std::string> local_macros;  // function-like macro texts the body uses
};

struct IngestOptions {
  fs::path root;
  std::vector<std::string> exclude_patterns{"^main$", "^test_"};
  bool exclude_io_only = true;  // drop bodies that only print/scan
};

// Walks root for .c/.h files, parses each, builds the symbol table, and flags
// excluded functions. Throws NoSourcesFound when no .c file exists and
// ParseFailure when a file defeats the parser.
SourceProject ingest_project(const IngestOptions& opts);

// Single self-contained header: guards, system includes, macros, types in
// dependency order, extern globals, and one prototype per non-excluded
// function. Throws UnresolvedType when a prototype needs an undefined type.
std::string generate_project_header(const SourceProject& project);

// One unit per non-excluded function; bodies have the static specifier
// removed (token stream otherwise preserved) and record their callees.
std::vector<FunctionUnit> extract_functions(const SourceProject& project);

// Definitions for every project global (initializers kept, static dropped so
// extracted units can link against them), preceded by the header include.
std::string generate_globals_source(const SourceProject& project);

// Asks the model for a 1-3 sentence behavioral summary given the definition
// and its enumerated paths; stores and returns it. Runs at temperature 0.
std::string describe_function(FunctionUnit& fn,
                              const std::vector<std::string>& linearized_paths,
                              llm::LlmClient& client);

// True for identifiers the C standard library (or the test runtime) provides,
// so dependency tracking does not flag them as unresolved.
bool is_standard_identifier(const std::string& name);

const cparse::FunctionDecl* find_function_decl(const SourceProject& project,
                                               const std::string& name);

}  // namespace pathtest::csource
