#include "pathtest/opmap.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

#include "pathtest/cparse.hpp"
#include "pathtest/errors.hpp"
#include "pathtest/util.hpp"

namespace pathtest::opmap {

using nlohmann::json;

const std::vector<std::string>& standard_allow_list() {
  static const std::vector<std::string> kAllow = {
      "malloc", "calloc", "realloc", "free",
      "memcpy", "memset", "memcmp", "memmove",
      "strlen", "strcpy", "strncpy", "strcmp", "strncmp", "strcat", "strdup",
      "printf", "sprintf", "snprintf",
  };
  return kAllow;
}

namespace {

// Pulls the outermost JSON object out of a possibly fenced response.
std::string extract_json(const std::string& raw) {
  auto open = raw.find('{');
  auto close = raw.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open)
    return raw;
  return raw.substr(open, close - open + 1);
}

struct ParseOutcome {
  bool ok = false;
  OperationMap map;
  std::string problem;         // human-readable violation for the reprompt
  std::string hallucinated;    // set when reuse named an unknown helper
};

ParseOutcome parse_response(const std::string& raw,
                            const csource::FunctionUnit& fn,
                            const retrieval::HelperCatalog& catalog) {
  ParseOutcome out;
  out.map.function_name = fn.name;

  json j;
  try {
    j = json::parse(extract_json(raw));
  } catch (const json::parse_error& e) {
    out.problem = std::string("response is not valid JSON: ") + e.what();
    return out;
  }
  if (!j.is_object()) {
    out.problem = "response is not a JSON object";
    return out;
  }

  std::set<std::string> catalog_names;
  for (const auto& e : catalog.entries) catalog_names.insert(e.helper.name);

  try {
    for (const auto& r : j.value("reuse", json::array())) {
      std::string name = r.get<std::string>();
      if (!catalog_names.count(name)) {
        out.hallucinated = name;
        out.problem = "reuse names helper '" + name +
                      "' which is not in the available helper list";
        return out;
      }
      if (std::find(out.map.reuse.begin(), out.map.reuse.end(), name) ==
          out.map.reuse.end())
        out.map.reuse.push_back(name);
    }

    std::set<std::string> taken(out.map.reuse.begin(), out.map.reuse.end());
    taken.insert(fn.name);
    for (const auto& d : fn.deps) taken.insert(d);

    for (const auto& c : j.value("created", json::array())) {
      retrieval::Helper h;
      h.origin = retrieval::Helper::Origin::Created;
      h.name = c.value("name", "");
      h.impl = c.value("impl", "");
      h.desc = c.value("desc", "");
      if (h.name.empty() || h.impl.empty()) {
        out.problem = "created entry missing name or impl: " + c.dump();
        return out;
      }
      if (taken.count(h.name)) {
        out.problem = "created helper '" + h.name +
                      "' collides with a reuse name or a source function";
        return out;
      }
      taken.insert(h.name);
      if (h.desc.empty()) h.desc = "helper for " + fn.name;

      cparse::ParsedFile pf;
      try {
        pf = cparse::parse_file(h.name + ".c", h.impl);
      } catch (const std::exception& e) {
        out.problem = "created helper '" + h.name + "' impl does not parse: " + e.what();
        return out;
      }
      const cparse::FunctionDecl* decl = nullptr;
      for (const auto& f : pf.functions)
        if (f.name == h.name) decl = &f;
      if (!decl) {
        out.problem = "created helper impl does not define '" + h.name + "'";
        return out;
      }
      h.signature.return_type = decl->return_type;
      h.signature.variadic = decl->variadic;
      for (const auto& p : decl->params) {
        h.signature.param_types.push_back(p.type);
        h.signature.param_names.push_back(p.name);
        h.signature.param_texts.push_back(p.text);
      }
      out.map.created.push_back(std::move(h));
    }

    for (const auto& d : j.value("deps", json::array())) {
      DepNote note;
      note.callee = d.value("callee", "");
      note.note = d.value("note", "");
      if (!note.callee.empty()) out.map.deps_analysis.push_back(std::move(note));
    }
  } catch (const json::exception& e) {
    out.problem = std::string("schema mismatch: ") + e.what();
    return out;
  }
  out.ok = true;
  return out;
}

std::vector<llm::Message> build_prompt(const csource::FunctionUnit& fn,
                                       const std::string& header,
                                       const retrieval::HelperCatalog& catalog) {
  std::string user;
  user += "Plan the test scaffolding for this C function.\n\n";
  user += "Function under test:\n```c\n" + fn.body + "\n```\n";
  if (!fn.desc.empty()) user += "\nDescription: " + fn.desc + "\n";
  if (!fn.deps.empty())
    user += "\nDependencies: " + util::join(fn.deps, ", ") + "\n";
  user += "\nProject header:\n```c\n" + header + "\n```\n";

  user += "\nAvailable helpers:\n";
  if (catalog.entries.empty()) {
    user += "  (none)\n";
  } else {
    for (const auto& e : catalog.entries) {
      user += "  - " + e.helper.name + ": " +
              e.helper.signature.spelling(e.helper.name) + " — " + e.helper.desc +
              "\n";
    }
  }

  user +=
      "\nReply with strict JSON only, no prose:\n"
      "{\"reuse\": [\"helper_name\"], "
      "\"created\": [{\"name\": \"...\", \"signature\": \"...\", "
      "\"impl\": \"...\", \"desc\": \"...\"}], "
      "\"deps\": [{\"callee\": \"...\", \"note\": \"...\"}]}\n"
      "reuse may only name helpers from the available list. created impls "
      "must be complete C function definitions compiling against the header.";

  return {{"system",
           "You plan C unit tests: you decide which existing helper functions "
           "to reuse and which new ones to create. You reply with strict JSON "
           "only."},
          {"user", user}};
}

}  // namespace

OperationMap build_operation_map(const csource::FunctionUnit& fn,
                                 const std::string& header,
                                 const retrieval::HelperCatalog& catalog,
                                 llm::LlmClient& client) {
  auto messages = build_prompt(fn, header, catalog);
  llm::ChatRequest req(llm::Stage::Opmap, messages, fn.name);
  llm::ChatResponse resp = client.chat(req);

  ParseOutcome first = parse_response(resp.text, fn, catalog);
  if (first.ok) return std::move(first.map);

  // one corrective round-trip, then fail loudly
  auto retry_messages = messages;
  retry_messages.push_back({"assistant", resp.text});
  retry_messages.push_back(
      {"user", "Your reply was rejected: " + first.problem +
                   "\nReply again with corrected strict JSON only."});
  llm::ChatRequest retry(llm::Stage::Opmap, retry_messages, fn.name);
  llm::ChatResponse second = client.chat(retry);

  ParseOutcome again = parse_response(second.text, fn, catalog);
  if (again.ok) {
    again.map.warnings.push_back("operation map accepted after reprompt: " +
                                 first.problem);
    return std::move(again.map);
  }
  if (!again.hallucinated.empty()) throw HallucinatedReuse(again.hallucinated);
  throw SchemaViolation(second.text);
}

OperationMap merge_path_info(OperationMap map,
                             const std::vector<cfg::ExecutionPath>& paths) {
  std::set<std::string> allowed;
  allowed.insert(map.function_name);
  for (const auto& r : map.reuse) allowed.insert(r);
  for (const auto& c : map.created) allowed.insert(c.name);
  for (const auto& d : map.deps_analysis) allowed.insert(d.callee);
  for (const auto& s : standard_allow_list()) allowed.insert(s);

  std::vector<std::string> allowed_sorted(allowed.begin(), allowed.end());
  map.per_path.clear();
  for (const auto& p : paths) {
    PathSlice slice;
    slice.path_id = p.path_id;
    slice.linearized = p.linearized;
    slice.allowed_calls = allowed_sorted;
    map.per_path[p.path_id] = std::move(slice);
  }
  return map;
}

HelpersFile assemble_helpers(const OperationMap& map,
                             const std::vector<retrieval::Helper>& pool,
                             const std::string& header,
                             toolchain::Toolchain& tc) {
  HelpersFile out;

  struct Block {
    std::string name;
    std::string impl;
    bool from_created;
  };
  std::vector<Block> blocks;
  for (const auto& name : map.reuse) {
    const retrieval::Helper* found = nullptr;
    for (const auto& h : pool)
      if (h.name == name) found = &h;
    if (!found) throw MissingPoolImpl(name);
    blocks.push_back({name, found->impl, false});
  }
  for (const auto& c : map.created) blocks.push_back({c.name, c.impl, true});

  // dedupe by name; a created definition beats the pool's
  std::vector<Block> kept;
  for (const auto& b : blocks) {
    auto prior = std::find_if(kept.begin(), kept.end(),
                              [&](const Block& k) { return k.name == b.name; });
    if (prior == kept.end()) {
      kept.push_back(b);
    } else if (b.from_created && !prior->from_created) {
      out.warnings.push_back("helper '" + b.name +
                             "': created definition overrides the pool version");
      *prior = b;
    }
  }

  out.source_text = "#include \"header.h\"\n\n";
  for (const auto& b : kept) {
    out.source_text += util::trim(b.impl);
    out.source_text += "\n\n";
    out.provided_names.push_back(b.name);
  }

  // the helpers file must stand on its own before any test includes it
  auto dir = util::make_temp_dir("pathtest-helpers");
  util::atomic_write(dir / "header.h", header);
  util::atomic_write(dir / "helpers.c", out.source_text);
  toolchain::CompileJob job;
  job.sources = {dir / "helpers.c"};
  job.output = dir / "helpers.o";
  job.include_dirs = {dir};
  job.compile_only = true;
  job.tag = "helpers/" + map.function_name;
  toolchain::CompileResult res = tc.compile(job);
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  if (!res.ok) throw HelperCompileFailure(res.diagnostics);
  return out;
}

std::map<int, HelpersFile> replicate_helpers(
    const HelpersFile& file, const std::vector<cfg::ExecutionPath>& paths) {
  std::map<int, HelpersFile> copies;
  for (const auto& p : paths) copies[p.path_id] = file;
  return copies;
}

std::string opmap_to_json(const OperationMap& map) {
  json j;
  j["function"] = map.function_name;
  j["reuse"] = map.reuse;
  j["created"] = json::array();
  for (const auto& c : map.created) {
    j["created"].push_back({{"name", c.name},
                            {"signature", c.signature.spelling(c.name)},
                            {"impl", c.impl},
                            {"desc", c.desc}});
  }
  j["deps"] = json::array();
  for (const auto& d : map.deps_analysis) {
    j["deps"].push_back({{"callee", d.callee}, {"note", d.note}});
  }
  j["per_path"] = json::object();
  for (const auto& [id, slice] : map.per_path) {
    j["per_path"][std::to_string(id)] = {
        {"path_id", slice.path_id},
        {"linearized", slice.linearized},
        {"allowed_calls", slice.allowed_calls}};
  }
  j["warnings"] = map.warnings;
  return j.dump(2);
}

}  // namespace pathtest::opmap
