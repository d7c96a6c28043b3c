#include "pathtest/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <iomanip>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pathtest/cfg.hpp"
#include "pathtest/csource.hpp"
#include "pathtest/errors.hpp"
#include "pathtest/opmap.hpp"
#include "pathtest/subprocess.hpp"
#include "pathtest/synth.hpp"
#include "pathtest/util.hpp"

namespace pathtest::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> kOrder = {
      "ingest",   "paths", "describe", "retrieve", "opmap",
      "synth",    "validate", "merge", "coverage"};
  return kOrder;
}

int stage_index(const std::string& name) {
  const auto& order = stage_order();
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] == name) return static_cast<int>(i);
  throw ConfigError("unknown stage '" + name + "'");
}

namespace {

// ---------------------------------------------------------------------------
// run state

struct FnState {
  csource::FunctionUnit unit;
  cfg::PathEnumeration paths;
  retrieval::HelperCatalog catalog;
  opmap::OperationMap map;
  opmap::HelpersFile helpers;
  std::vector<std::string> errors;
  bool dead = false;  // failed a stage; downstream stages skip it
};

struct RunState {
  const config::PipelineConfig& cfg;
  PipelineServices svc;
  fs::path proj_dir;
  std::string project_name;
  std::string header;
  std::vector<std::string> order;  // extracted function names, source order
  std::map<std::string, FnState> fns;
  std::vector<retrieval::Helper> pool;
  std::vector<retrieval::EmbeddingVector> pool_vecs;
  std::vector<synth::AtomicTestUnit> units;
  suite::MergedSuite merged;
  bool has_merged = false;
  suite::CoverageReport coverage;
  bool has_coverage = false;
  validate::ValidationReport validation;
  bool has_validation = false;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;  // project-fatal
  std::mutex mu;

  RunState(const config::PipelineConfig& c, PipelineServices s)
      : cfg(c), svc(s) {}

  void fn_error(const std::string& fn, const std::string& msg) {
    std::lock_guard<std::mutex> lock(mu);
    fns[fn].errors.push_back(msg);
    fns[fn].dead = true;
  }
  void warn(const std::string& msg) {
    std::lock_guard<std::mutex> lock(mu);
    warnings.push_back(msg);
  }
  std::vector<std::string> alive() {
    std::vector<std::string> out;
    for (const auto& name : order)
      if (!fns[name].dead) out.push_back(name);
    return out;
  }
};

// Index-sharded worker pool; f must confine writes to its own item.
void parallel_for(int workers, std::size_t n,
                  const std::function<void(std::size_t)>& f) {
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      f(i);
    }
  };
  std::vector<std::thread> threads;
  int count = std::min<int>(workers, static_cast<int>(n));
  threads.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

// ---------------------------------------------------------------------------
// service construction

struct OwnedServices {
  std::unique_ptr<llm::LlmClient> client;
  std::unique_ptr<retrieval::Embedder> embedder;
  std::unique_ptr<toolchain::Toolchain> toolchain;
};

void load_toolchain_script(toolchain::ScriptedToolchain& tc,
                           const fs::path& path) {
  auto text = util::read_file_if_exists(path);
  if (!text) throw ConfigError("toolchain script not found: " + path.string());
  auto doc = json::parse(*text, nullptr, false);
  if (!doc.is_object() || !doc.contains("tags"))
    throw MalformedScript("toolchain script needs a top-level 'tags' object");
  for (auto it = doc["tags"].begin(); it != doc["tags"].end(); ++it) {
    std::vector<toolchain::ScriptedToolchain::Step> steps;
    for (const auto& s : it.value()) {
      toolchain::ScriptedToolchain::Step step;
      step.compile_ok = s.value("compile_ok", true);
      step.compile_diagnostics = s.value("compile_diagnostics", "");
      step.run_ok = s.value("run_ok", true);
      step.run_output = s.value("run_output", "");
      step.exit_code = s.value("exit_code", step.run_ok ? 0 : 1);
      if (s.contains("signal")) step.signal = s["signal"].get<int>();
      step.timed_out = s.value("timed_out", false);
      steps.push_back(step);
    }
    tc.script(it.key(), steps);
  }
}

OwnedServices build_services(const config::PipelineConfig& cfg,
                             PipelineServices& svc) {
  OwnedServices owned;
  if (!svc.client) {
    if (cfg.llm.mode == "scripted") {
      if (cfg.llm.script_path.empty())
        throw ConfigError("llm.mode 'scripted' requires a script path");
      owned.client =
          std::make_unique<llm::ScriptedLlmClient>(cfg.llm.script_path);
    } else {
      llm::HttpLlmOptions opts;
      opts.base_url = cfg.llm.base_url;
      opts.path = cfg.llm.api_path;
      opts.api_key_env = cfg.llm.api_key_env;
      opts.model_id = cfg.llm.model_id;
      opts.max_retries = cfg.llm.max_retries;
      opts.timeout = std::chrono::seconds(cfg.llm.timeout_seconds);
      opts.requests_per_minute = cfg.llm.requests_per_minute;
      owned.client = std::make_unique<llm::HttpLlmClient>(opts);
    }
    svc.client = owned.client.get();
  }
  if (!svc.embedder) {
    owned.embedder = std::make_unique<retrieval::LocalEmbedder>(cfg.embedder.dim);
    svc.embedder = owned.embedder.get();
  }
  if (!svc.toolchain) {
    if (cfg.toolchain.mode == "scripted") {
      auto tc = std::make_unique<toolchain::ScriptedToolchain>();
      if (!cfg.toolchain.script_path.empty())
        load_toolchain_script(*tc, cfg.toolchain.script_path);
      owned.toolchain = std::move(tc);
    } else {
      owned.toolchain = std::make_unique<toolchain::GccToolchain>(
          cfg.toolchain.compiler, cfg.toolchain.base_flags);
    }
    svc.toolchain = owned.toolchain.get();
  }
  return owned;
}

// ---------------------------------------------------------------------------
// stage hashing and stamps

std::string hash_tree(const fs::path& root,
                      const std::vector<std::string>& extensions) {
  if (root.empty() || !fs::exists(root)) return "absent";
  std::string acc;
  for (const auto& f : util::collect_files(root, extensions)) {
    acc += f.string();
    acc += '\0';
    acc += util::read_file(f);
    acc += '\0';
  }
  return util::fingerprint(acc);
}

std::map<std::string, std::string> compute_stage_hashes(
    const config::PipelineConfig& cfg) {
  std::string chain;
  auto step = [&chain](const std::string& extra) {
    chain = util::fingerprint(chain + "|" + extra);
    return chain;
  };
  std::string script_hash = "http:" + cfg.llm.model_id;
  if (cfg.llm.mode == "scripted") {
    auto text = util::read_file_if_exists(cfg.llm.script_path);
    script_hash = util::fingerprint(text ? *text : "missing");
  }
  std::string tc_hash = cfg.toolchain.mode + ":" + cfg.toolchain.compiler +
                        util::join(cfg.toolchain.base_flags, " ");
  if (!cfg.toolchain.script_path.empty()) {
    auto text = util::read_file_if_exists(cfg.toolchain.script_path);
    tc_hash += util::fingerprint(text ? *text : "missing");
  }
  std::ostringstream repair;
  repair << cfg.repair.max_iterations << ":" << cfg.repair.repair_temperature
         << ":" << cfg.repair.generation_temperature << ":"
         << cfg.repair.per_test_timeout.count();

  std::map<std::string, std::string> m;
  m["ingest"] = step(hash_tree(cfg.project_root, {".c", ".h"}) +
                     util::join(cfg.exclude_patterns, ",") +
                     (cfg.exclude_io_only ? "1" : "0"));
  m["paths"] = step(std::to_string(cfg.loop_bound) + ":" +
                    std::to_string(cfg.max_paths));
  m["describe"] = step(script_hash);
  std::ostringstream ret;
  ret << cfg.theta << ":" << cfg.embedder.dim << ":"
      << hash_tree(cfg.pool_dir, {".c", ".json"});
  m["retrieve"] = step(ret.str());
  m["opmap"] = step(script_hash + tc_hash);
  m["synth"] = step(script_hash);
  m["validate"] = step(script_hash + tc_hash + repair.str());
  m["merge"] = step(tc_hash);
  m["coverage"] = step(tc_hash);
  return m;
}

fs::path stamp_path(const RunState& st, const std::string& stage) {
  return st.proj_dir / ".stamps" / (stage + ".json");
}

bool stamp_matches(const RunState& st, const std::string& stage,
                   const std::string& hash) {
  auto text = util::read_file_if_exists(stamp_path(st, stage));
  if (!text) return false;
  auto doc = json::parse(*text, nullptr, false);
  return doc.is_object() && doc.value("input_hash", "") == hash;
}

void write_stamp(const RunState& st, const std::string& stage,
                 const std::string& hash) {
  json j;
  j["input_hash"] = hash;
  util::ensure_dir(st.proj_dir / ".stamps");
  util::atomic_write(stamp_path(st, stage), j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// shared artifact helpers

std::string status_to_name(synth::UnitStatus s) {
  switch (s) {
    case synth::UnitStatus::Pending: return "pending";
    case synth::UnitStatus::Pass0: return "pass0";
    case synth::UnitStatus::Repaired: return "repaired";
    case synth::UnitStatus::Dropped: return "dropped";
  }
  return "pending";
}

synth::UnitStatus status_from_name(const std::string& name) {
  if (name == "pass0") return synth::UnitStatus::Pass0;
  if (name == "repaired") return synth::UnitStatus::Repaired;
  if (name == "dropped") return synth::UnitStatus::Dropped;
  return synth::UnitStatus::Pending;
}

fs::path unit_dir(const RunState& st, const synth::AtomicTestUnit& u) {
  return st.proj_dir / "tests" / u.function_name /
         ("path" + std::to_string(u.path_id));
}

void write_units_json(RunState& st) {
  json j;
  j["units"] = json::array();
  for (const auto& u : st.units) {
    json e;
    e["function"] = u.function_name;
    e["path_id"] = u.path_id;
    e["test_name"] = u.test_name;
    e["status"] = status_to_name(u.status);
    e["repaired_n"] = u.repaired_n;
    e["iterations_used"] = u.iterations_used;
    e["drop_hint"] = u.drop_hint;
    e["scan_violations"] = u.scan_violations;
    e["notes"] = u.notes;
    json errs = json::array();
    for (const auto& err : u.error_history)
      errs.push_back(validate::phase_name(err.phase) + "/" +
                     validate::category_name(err.category));
    e["errors"] = errs;
    j["units"].push_back(e);
  }
  util::atomic_write(st.proj_dir / "units.json", j.dump(2) + "\n");
}

void load_units_json(RunState& st) {
  auto text = util::read_file_if_exists(st.proj_dir / "units.json");
  if (!text) throw ConfigError("no cached units.json under " +
                               st.proj_dir.string());
  auto doc = json::parse(*text);
  st.units.clear();
  for (const auto& e : doc.at("units")) {
    synth::AtomicTestUnit u;
    u.function_name = e.at("function").get<std::string>();
    u.path_id = e.at("path_id").get<int>();
    u.test_name = e.at("test_name").get<std::string>();
    u.status = status_from_name(e.at("status").get<std::string>());
    u.repaired_n = e.value("repaired_n", 0);
    u.iterations_used = e.value("iterations_used", 0);
    u.drop_hint = e.value("drop_hint", "");
    if (e.contains("scan_violations"))
      u.scan_violations = e["scan_violations"].get<std::vector<std::string>>();
    if (e.contains("notes"))
      u.notes = e["notes"].get<std::vector<std::string>>();
    fs::path dir = unit_dir(st, u);
    u.test_source = util::read_file(dir / "test.c");
    u.helpers.source_text = util::read_file(dir / "helpers.c");
    st.units.push_back(std::move(u));
  }
}

void write_functions_json(RunState& st) {
  json j;
  j["project"] = st.project_name;
  j["order"] = st.order;
  j["functions"] = json::array();
  for (const auto& name : st.order) {
    const auto& fn = st.fns[name].unit;
    json f;
    f["name"] = fn.name;
    f["return_type"] = fn.signature.return_type;
    json params = json::array();
    for (std::size_t i = 0; i < fn.signature.param_types.size(); ++i) {
      params.push_back({{"type", fn.signature.param_types[i]},
                        {"name", fn.signature.param_names[i]},
                        {"text", fn.signature.param_texts[i]}});
    }
    f["params"] = params;
    f["variadic"] = fn.signature.variadic;
    f["was_static"] = fn.was_static;
    f["file"] = fn.source_span.file.string();
    f["start_line"] = fn.source_span.start_line;
    f["end_line"] = fn.source_span.end_line;
    f["deps"] = fn.deps;
    f["local_macros"] = fn.local_macros;
    f["desc"] = fn.desc;
    j["functions"].push_back(f);
  }
  util::atomic_write(st.proj_dir / "functions.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// ingest

// Line-preserving source rewrite for coverage builds: top-level statics are
// blanked (extracted units carry external linkage, and the merged suite must
// link against these copies) and a main() definition is renamed so it cannot
// collide with the suite runner.
std::string coverage_copy(const cparse::ParsedFile& pf) {
  std::string text = pf.source;
  auto blank = [&text](std::size_t offset, std::size_t length) {
    for (std::size_t i = 0; i < length && offset + i < text.size(); ++i)
      text[offset + i] = ' ';
  };
  constexpr auto kNone = static_cast<std::size_t>(-1);
  for (const auto& fn : pf.functions) {
    if (fn.static_tok != kNone) {
      const auto& tok = pf.tokens[fn.static_tok];
      blank(tok.offset, tok.length);
    }
    if (fn.name == "main") {
      for (std::size_t i = fn.first_tok; i < fn.body_lbrace; ++i) {
        const auto& tok = pf.tokens[i];
        if (tok.kind == clex::TokKind::Identifier && tok.text == "main" &&
            i + 1 < pf.tokens.size() && pf.tokens[i + 1].text == "(") {
          text.replace(tok.offset, tok.length, "ma1n");
          break;
        }
      }
    }
  }
  for (const auto& g : pf.globals) {
    if (g.static_tok != kNone) {
      const auto& tok = pf.tokens[g.static_tok];
      blank(tok.offset, tok.length);
    }
  }
  return text;
}

void run_ingest(RunState& st) {
  csource::IngestOptions opts;
  opts.root = st.cfg.project_root;
  opts.exclude_patterns = st.cfg.exclude_patterns;
  opts.exclude_io_only = st.cfg.exclude_io_only;
  auto project = csource::ingest_project(opts);
  st.header = csource::generate_project_header(project);
  auto units = csource::extract_functions(project);

  st.order.clear();
  st.fns.clear();
  for (auto& u : units) {
    st.order.push_back(u.name);
    st.fns[u.name].unit = std::move(u);
  }

  util::ensure_dir(st.proj_dir);
  util::atomic_write(st.proj_dir / "header.h", st.header);
  util::atomic_write(st.proj_dir / "globals.c",
                     csource::generate_globals_source(project));
  util::ensure_dir(st.proj_dir / "functions");
  for (const auto& name : st.order)
    util::atomic_write(st.proj_dir / "functions" / (name + ".c"),
                       st.fns[name].unit.body);
  write_functions_json(st);

  fs::path covdir = st.proj_dir / "coverage_src";
  std::error_code ec;
  fs::remove_all(covdir, ec);
  for (const auto& rec : project.source_files) {
    fs::path rel = fs::relative(rec.path, project.root_path);
    fs::path dst = covdir / rel;
    util::ensure_dir(dst.parent_path());
    util::atomic_write(dst, coverage_copy(rec.parsed));
  }
}

void load_ingest(RunState& st) {
  auto text = util::read_file_if_exists(st.proj_dir / "functions.json");
  if (!text) throw ConfigError("no cached functions.json under " +
                               st.proj_dir.string());
  auto doc = json::parse(*text);
  st.header = util::read_file(st.proj_dir / "header.h");
  st.order = doc.at("order").get<std::vector<std::string>>();
  st.fns.clear();
  for (const auto& f : doc.at("functions")) {
    csource::FunctionUnit u;
    u.name = f.at("name").get<std::string>();
    u.signature.return_type = f.at("return_type").get<std::string>();
    for (const auto& p : f.at("params")) {
      u.signature.param_types.push_back(p.at("type").get<std::string>());
      u.signature.param_names.push_back(p.at("name").get<std::string>());
      u.signature.param_texts.push_back(p.at("text").get<std::string>());
    }
    u.signature.variadic = f.value("variadic", false);
    u.was_static = f.value("was_static", false);
    u.source_span.file = f.value("file", "");
    u.source_span.start_line = f.value("start_line", 0);
    u.source_span.end_line = f.value("end_line", 0);
    if (f.contains("deps")) u.deps = f["deps"].get<std::vector<std::string>>();
    if (f.contains("local_macros"))
      u.local_macros = f["local_macros"].get<std::vector<std::string>>();
    u.desc = f.value("desc", "");
    u.body = util::read_file(st.proj_dir / "functions" / (u.name + ".c"));
    st.fns[u.name].unit = std::move(u);
  }
}

// ---------------------------------------------------------------------------
// paths

void run_paths(RunState& st) {
  util::ensure_dir(st.proj_dir / "paths");
  for (const auto& name : st.alive()) {
    auto& fn = st.fns[name];
    try {
      auto graph = cfg::build_cfg(fn.unit);
      fn.paths = cfg::enumerate_paths(graph, st.cfg.loop_bound,
                                      st.cfg.max_paths);
      util::atomic_write(st.proj_dir / "paths" / (name + ".json"),
                         cfg::paths_to_json(graph, fn.paths) + "\n");
    } catch (const Error& e) {
      st.fn_error(name, std::string("paths: ") + e.what());
    }
  }
}

void load_paths(RunState& st) {
  if (!fs::exists(st.proj_dir / "paths"))
    throw ConfigError("no cached path artifacts under " +
                      (st.proj_dir / "paths").string());
  for (const auto& name : st.order) {
    auto& fn = st.fns[name];
    auto text = util::read_file_if_exists(st.proj_dir / "paths" /
                                          (name + ".json"));
    if (!text) {
      st.fn_error(name, "paths: no cached artifact");
      continue;
    }
    auto doc = json::parse(*text);
    fn.paths.truncated = doc.value("truncated", false);
    fn.paths.paths.clear();
    for (const auto& p : doc.at("paths")) {
      cfg::ExecutionPath path;
      path.path_id = p.at("path_id").get<int>();
      path.node_ids = p.at("node_ids").get<std::vector<int>>();
      path.linearized = p.at("linearized").get<std::string>();
      fn.paths.paths.push_back(std::move(path));
    }
  }
}

// ---------------------------------------------------------------------------
// describe

void run_describe(RunState& st) {
  auto alive = st.alive();
  parallel_for(st.cfg.parallelism, alive.size(), [&](std::size_t i) {
    const auto& name = alive[i];
    auto& fn = st.fns[name];
    std::vector<std::string> lins;
    for (const auto& p : fn.paths.paths) lins.push_back(p.linearized);
    try {
      csource::describe_function(fn.unit, lins, *st.svc.client);
    } catch (const Error& e) {
      st.fn_error(name, std::string("describe: ") + e.what());
    }
  });
  write_functions_json(st);  // now carries the descriptions
}

void load_describe(RunState& st) {
  auto text = util::read_file_if_exists(st.proj_dir / "functions.json");
  if (!text) throw ConfigError("no cached functions.json");
  auto doc = json::parse(*text);
  for (const auto& f : doc.at("functions")) {
    auto name = f.at("name").get<std::string>();
    if (st.fns.count(name)) st.fns[name].unit.desc = f.value("desc", "");
  }
}

// ---------------------------------------------------------------------------
// retrieve

json signature_to_json(const csource::Signature& sig) {
  json params = json::array();
  for (std::size_t i = 0; i < sig.param_types.size(); ++i)
    params.push_back({{"type", sig.param_types[i]},
                      {"name", sig.param_names[i]},
                      {"text", sig.param_texts[i]}});
  return {{"return_type", sig.return_type},
          {"params", params},
          {"variadic", sig.variadic}};
}

csource::Signature signature_from_json(const json& j) {
  csource::Signature sig;
  sig.return_type = j.at("return_type").get<std::string>();
  for (const auto& p : j.at("params")) {
    sig.param_types.push_back(p.at("type").get<std::string>());
    sig.param_names.push_back(p.at("name").get<std::string>());
    sig.param_texts.push_back(p.at("text").get<std::string>());
  }
  sig.variadic = j.value("variadic", false);
  return sig;
}

void load_pool_into(RunState& st) {
  st.pool.clear();
  if (fs::exists(st.cfg.pool_dir))
    st.pool = retrieval::load_pool(st.cfg.pool_dir);
}

void run_retrieve(RunState& st) {
  load_pool_into(st);
  st.pool_vecs = retrieval::embed_pool(st.pool, *st.svc.embedder,
                                       st.proj_dir / "pool_embeddings.json");
  util::ensure_dir(st.proj_dir / "catalog");
  auto alive = st.alive();
  parallel_for(st.cfg.parallelism, alive.size(), [&](std::size_t i) {
    const auto& name = alive[i];
    auto& fn = st.fns[name];
    try {
      fn.catalog = retrieval::retrieve(fn.unit, st.pool, st.cfg.theta,
                                       *st.svc.embedder, &st.pool_vecs);
      json j;
      j["function"] = name;
      j["entries"] = json::array();
      for (const auto& e : fn.catalog.entries) {
        j["entries"].push_back({{"name", e.helper.name},
                                {"desc", e.helper.desc},
                                {"score", e.score},
                                {"signature", signature_to_json(e.helper.signature)}});
      }
      util::atomic_write(st.proj_dir / "catalog" / (name + ".json"),
                         j.dump(2) + "\n");
    } catch (const Error& e) {
      st.fn_error(name, std::string("retrieve: ") + e.what());
    }
  });
}

void load_retrieve(RunState& st) {
  load_pool_into(st);
  for (const auto& name : st.order) {
    if (st.fns[name].dead) continue;
    auto text = util::read_file_if_exists(st.proj_dir / "catalog" /
                                          (name + ".json"));
    if (!text) {
      st.fn_error(name, "retrieve: no cached artifact");
      continue;
    }
    auto doc = json::parse(*text);
    auto& cat = st.fns[name].catalog;
    cat.entries.clear();
    for (const auto& e : doc.at("entries")) {
      retrieval::CatalogEntry entry;
      entry.helper.name = e.at("name").get<std::string>();
      entry.helper.desc = e.value("desc", "");
      entry.helper.signature = signature_from_json(e.at("signature"));
      entry.score = e.at("score").get<double>();
      cat.entries.push_back(std::move(entry));
    }
  }
}

// ---------------------------------------------------------------------------
// opmap

void run_opmap(RunState& st) {
  util::ensure_dir(st.proj_dir / "opmap");
  util::ensure_dir(st.proj_dir / "helpers");
  auto alive = st.alive();
  parallel_for(st.cfg.parallelism, alive.size(), [&](std::size_t i) {
    const auto& name = alive[i];
    auto& fn = st.fns[name];
    try {
      auto map = opmap::build_operation_map(fn.unit, st.header, fn.catalog,
                                            *st.svc.client);
      map = opmap::merge_path_info(std::move(map), fn.paths.paths);
      fn.helpers = opmap::assemble_helpers(map, st.pool, st.header,
                                           *st.svc.toolchain);
      fn.map = std::move(map);
      util::atomic_write(st.proj_dir / "opmap" / (name + ".json"),
                         opmap::opmap_to_json(fn.map) + "\n");
      util::ensure_dir(st.proj_dir / "helpers" / name);
      util::atomic_write(st.proj_dir / "helpers" / name / "helpers.c",
                         fn.helpers.source_text);
    } catch (const Error& e) {
      st.fn_error(name, std::string("opmap: ") + e.what());
    }
  });
}

void load_opmap(RunState& st) {
  for (const auto& name : st.order) {
    auto& fn = st.fns[name];
    if (fn.dead) continue;
    auto text = util::read_file_if_exists(st.proj_dir / "opmap" /
                                          (name + ".json"));
    auto helpers = util::read_file_if_exists(st.proj_dir / "helpers" / name /
                                             "helpers.c");
    if (!text || !helpers) {
      st.fn_error(name, "opmap: no cached artifact");
      continue;
    }
    auto doc = json::parse(*text);
    fn.map = opmap::OperationMap{};
    fn.map.function_name = name;
    fn.map.reuse = doc.value("reuse", std::vector<std::string>{});
    for (const auto& c : doc.value("created", json::array())) {
      retrieval::Helper h;
      h.name = c.at("name").get<std::string>();
      h.impl = c.value("impl", "");
      h.desc = c.value("desc", "");
      h.origin = retrieval::Helper::Origin::Created;
      fn.map.created.push_back(std::move(h));
    }
    if (doc.contains("per_path")) {
      for (auto it = doc["per_path"].begin(); it != doc["per_path"].end();
           ++it) {
        opmap::PathSlice slice;
        slice.path_id = it.value().at("path_id").get<int>();
        slice.linearized = it.value().value("linearized", "");
        slice.allowed_calls =
            it.value().at("allowed_calls").get<std::vector<std::string>>();
        fn.map.per_path[slice.path_id] = std::move(slice);
      }
    }
    fn.helpers.source_text = *helpers;
    fn.helpers.provided_names = fn.map.reuse;
    for (const auto& c : fn.map.created)
      fn.helpers.provided_names.push_back(c.name);
  }
}

// ---------------------------------------------------------------------------
// synth

void run_synth(RunState& st) {
  struct Job {
    std::string fn;
    std::size_t path_index;
  };
  std::vector<Job> jobs;
  for (const auto& name : st.alive()) {
    auto& fn = st.fns[name];
    for (std::size_t p = 0; p < fn.paths.paths.size(); ++p)
      jobs.push_back({name, p});
  }
  std::vector<std::optional<synth::AtomicTestUnit>> made(jobs.size());
  parallel_for(st.cfg.parallelism, jobs.size(), [&](std::size_t i) {
    const auto& job = jobs[i];
    auto& fn = st.fns[job.fn];
    const auto& path = fn.paths.paths[job.path_index];
    auto slice_it = fn.map.per_path.find(path.path_id);
    if (slice_it == fn.map.per_path.end()) {
      st.fn_error(job.fn, "synth: no operation-map slice for path " +
                              std::to_string(path.path_id));
      return;
    }
    try {
      auto unit = synth::generate_test(fn.unit, path, slice_it->second,
                                       st.header, fn.helpers, *st.svc.client);
      fs::path dir = unit_dir(st, unit);
      util::ensure_dir(dir);
      util::atomic_write(dir / "test.c", unit.test_source);
      util::atomic_write(dir / "helpers.c", unit.helpers.source_text);
      made[i] = std::move(unit);
    } catch (const Error& e) {
      std::lock_guard<std::mutex> lock(st.mu);
      st.fns[job.fn].errors.push_back("synth path " +
                                      std::to_string(path.path_id) + ": " +
                                      e.what());
      // one bad path does not kill the function's other paths
    }
  });
  st.units.clear();
  for (auto& u : made)
    if (u) st.units.push_back(std::move(*u));
  write_units_json(st);
}

void load_synth(RunState& st) { load_units_json(st); }

// ---------------------------------------------------------------------------
// validate

// Unit and merged-suite builds link against the coverage_src copies: the
// original project files with statics blanked (so extracted prototypes in
// header.h resolve) and main renamed out of the way. The per-function
// functions/*.c artifacts are raw bodies without includes and never compile
// standalone.
std::vector<fs::path> support_sources(const RunState& st) {
  fs::path covdir = st.proj_dir / "coverage_src";
  if (!fs::exists(covdir))
    throw ConfigError("no coverage_src copies under " + st.proj_dir.string() +
                      "; re-run the ingest stage");
  auto out = util::collect_files(covdir, {".c"});
  fs::path unity = st.cfg.runtime_dir / "unity.c";
  if (!fs::exists(unity))
    throw ConfigError("test runtime not found: " + unity.string());
  out.push_back(unity);
  return out;
}

std::vector<fs::path> support_includes(const RunState& st) {
  return {st.proj_dir, st.cfg.runtime_dir, st.proj_dir / "coverage_src"};
}

void run_validate(RunState& st) {
  auto support = support_sources(st);
  auto includes = support_includes(st);
  parallel_for(st.cfg.parallelism, st.units.size(), [&](std::size_t i) {
    auto& unit = st.units[i];
    validate::UnitContext ctx;
    ctx.unit_dir = unit_dir(st, unit);
    ctx.scratch_dir = st.proj_dir / "scratch" / unit.function_name /
                      ("path" + std::to_string(unit.path_id));
    ctx.log_dir = st.proj_dir / "validate" / unit.function_name /
                  ("path" + std::to_string(unit.path_id));
    ctx.support_sources = support;
    ctx.include_dirs = includes;
    ctx.tag = unit.function_name + "/path" + std::to_string(unit.path_id);
    try {
      unit = validate::validate_loop(std::move(unit), ctx, *st.svc.toolchain,
                                     *st.svc.client, st.cfg.repair);
    } catch (const Error& e) {
      st.fn_error(unit.function_name,
                  "validate path " + std::to_string(unit.path_id) + ": " +
                      e.what());
      return;
    }
    if (unit.status == synth::UnitStatus::Pending)
      st.fn_error(unit.function_name,
                  "validate path " + std::to_string(unit.path_id) +
                      ": model unavailable, left pending");
  });
  write_units_json(st);

  st.validation = validate::ValidationReport{};
  for (const auto& u : st.units)
    if (u.status != synth::UnitStatus::Pending) st.validation.add_unit(u);
  st.validation.finalize();
  st.has_validation = true;
  util::atomic_write(st.proj_dir / "validation_report.json",
                     st.validation.to_json());
}

void load_validate(RunState& st) {
  load_units_json(st);
  st.validation = validate::ValidationReport{};
  for (const auto& u : st.units)
    if (u.status != synth::UnitStatus::Pending) st.validation.add_unit(u);
  st.validation.finalize();
  st.has_validation = true;
}

// ---------------------------------------------------------------------------
// merge

void run_merge(RunState& st) {
  std::vector<synth::AtomicTestUnit> terminal;
  for (const auto& u : st.units)
    if (u.status != synth::UnitStatus::Pending) terminal.push_back(u);
  st.merged = suite::merge_suite(terminal);
  for (const auto& w : st.merged.warnings) st.warn("merge: " + w);
  util::ensure_dir(st.proj_dir / "suite");
  util::atomic_write(st.proj_dir / "suite" / "test_suite.c",
                     st.merged.source_text);
  suite::verify_suite_compiles(st.merged, support_sources(st),
                               support_includes(st), *st.svc.toolchain);
  st.has_merged = true;
}

void load_merge(RunState& st) {
  auto text = util::read_file_if_exists(st.proj_dir / "suite" /
                                        "test_suite.c");
  if (!text) throw ConfigError("no cached merged suite");
  st.merged = suite::MergedSuite{};
  st.merged.source_text = *text;
  for (const auto& u : st.units)
    if (u.status == synth::UnitStatus::Pass0 ||
        u.status == synth::UnitStatus::Repaired)
      st.merged.included_tests.push_back(
          {u.function_name, u.path_id, u.test_name});
  st.has_merged = true;
}

// ---------------------------------------------------------------------------
// coverage

void run_coverage(RunState& st) {
  if (!st.has_merged) throw SuiteRunFailure("no merged suite to measure");
  suite::CoverageJob job;
  job.suite_source = st.proj_dir / "suite" / "test_suite.c";
  fs::path covdir = st.proj_dir / "coverage_src";
  if (fs::exists(covdir))
    job.project_sources = util::collect_files(covdir, {".c"});
  job.extra_sources = {st.cfg.runtime_dir / "unity.c"};
  job.include_dirs = {st.proj_dir, st.cfg.runtime_dir, covdir};
  job.work_dir = st.proj_dir / "suite" / "covbuild";
  st.coverage = suite::measure_coverage(job, *st.svc.toolchain);
  st.has_coverage = true;
  util::atomic_write(st.proj_dir / "coverage_report.json",
                     st.coverage.to_json());

  if (!st.cfg.mutation_command.empty()) {
    util::RunSpec spec;
    spec.argv = {"sh", "-c", st.cfg.mutation_command};
    spec.cwd = st.proj_dir;
    spec.env["PIPELINE_SUITE"] = (st.proj_dir / "suite" / "test_suite.c").string();
    spec.env["PIPELINE_PROJECT"] = st.cfg.project_root.string();
    spec.timeout = std::chrono::milliseconds(10 * 60 * 1000);
    auto out = util::run_process(spec);
    // Raw output archived without interpretation; the engine is external.
    util::atomic_write(st.proj_dir / "mutation_output.txt", out.output);
    if (out.exit_code != 0)
      st.warn("mutation command exited " + std::to_string(out.exit_code));
  }
}

void load_coverage(RunState& st) {
  auto text = util::read_file_if_exists(st.proj_dir / "coverage_report.json");
  if (!text) throw ConfigError("no cached coverage report");
  auto doc = json::parse(*text);
  auto parse_pct = [](const json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  auto parse_file = [&](const json& f) {
    suite::FileCoverage fc;
    fc.file = f.value("file", "");
    fc.function_pct = parse_pct(f.at("function_pct"));
    fc.line_pct = parse_pct(f.at("line_pct"));
    fc.branch_pct = parse_pct(f.at("branch_pct"));
    fc.lines_total = f.value("lines_total", 0L);
    fc.branches_total = f.value("branches_total", 0L);
    for (const auto& fj : f.value("functions", json::array())) {
      suite::FunctionCoverage fn;
      fn.name = fj.value("name", "");
      fn.line_pct = parse_pct(fj.at("line_pct"));
      fn.branch_pct = parse_pct(fj.at("branch_pct"));
      fn.lines_total = fj.value("lines_total", 0L);
      fn.branches_total = fj.value("branches_total", 0L);
      fc.functions.push_back(std::move(fn));
    }
    return fc;
  };
  st.coverage = suite::CoverageReport{};
  for (const auto& f : doc.at("per_file"))
    st.coverage.per_file.push_back(parse_file(f));
  st.coverage.project = parse_file(doc.at("project"));
  st.has_coverage = true;
}

}  // namespace

// ---------------------------------------------------------------------------
// reports

double RunReport::retention_pct() const {
  if (totals.generated == 0) return 0.0;
  return 100.0 * static_cast<double>(totals.final_count) /
         static_cast<double>(totals.generated);
}

namespace {

json row_to_json(const validate::FunctionRow& r) {
  json j;
  j["function"] = r.function;
  j["generated"] = r.generated;
  j["pass0"] = r.pass0;
  j["failed"] = r.failed;
  j["fixed1"] = r.fixed1;
  j["fixed2"] = r.fixed2;
  j["fixed3"] = r.fixed3;
  j["dropped"] = r.dropped;
  j["final"] = r.final_count;
  return j;
}

validate::FunctionRow row_from_json(const json& j) {
  validate::FunctionRow r;
  r.function = j.value("function", "");
  r.generated = j.value("generated", 0L);
  r.pass0 = j.value("pass0", 0L);
  r.failed = j.value("failed", 0L);
  r.fixed1 = j.value("fixed1", 0L);
  r.fixed2 = j.value("fixed2", 0L);
  r.fixed3 = j.value("fixed3", 0L);
  r.dropped = j.value("dropped", 0L);
  r.final_count = j.value("final", 0L);
  return r;
}

}  // namespace

std::string RunReport::to_json() const {
  json j;
  j["project"] = project;
  j["functions"] = json::array();
  for (const auto& f : functions) {
    json fj;
    fj["function"] = f.function;
    fj["path_count"] = f.path_count;
    fj["truncated"] = f.truncated;
    fj["row"] = row_to_json(f.row);
    fj["errors"] = f.errors;
    j["functions"].push_back(fj);
  }
  j["totals"] = row_to_json(totals);
  j["retention_pct"] = util::format_pct(retention_pct());
  j["coverage_measured"] = coverage_measured;
  j["coverage"] = json::parse(coverage.to_json());
  j["usage"] =
      usage_json.empty() ? json::object() : json::parse(usage_json);
  j["warnings"] = warnings;
  j["errors"] = errors;
  return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& json_text) {
  auto doc = json::parse(json_text);
  RunReport rep;
  rep.project = doc.value("project", "");
  for (const auto& fj : doc.value("functions", json::array())) {
    FunctionReport f;
    f.function = fj.value("function", "");
    f.path_count = fj.value("path_count", 0);
    f.truncated = fj.value("truncated", false);
    if (fj.contains("row")) f.row = row_from_json(fj["row"]);
    if (fj.contains("errors"))
      f.errors = fj["errors"].get<std::vector<std::string>>();
    rep.functions.push_back(std::move(f));
  }
  if (doc.contains("totals")) rep.totals = row_from_json(doc["totals"]);
  rep.coverage_measured = doc.value("coverage_measured", false);
  if (doc.contains("coverage")) {
    auto parse_pct = [](const json& v) -> std::optional<double> {
      if (v.is_null()) return std::nullopt;
      return v.get<double>();
    };
    auto parse_file = [&](const json& f) {
      suite::FileCoverage fc;
      fc.file = f.value("file", "");
      if (f.contains("function_pct")) fc.function_pct = parse_pct(f["function_pct"]);
      if (f.contains("line_pct")) fc.line_pct = parse_pct(f["line_pct"]);
      if (f.contains("branch_pct")) fc.branch_pct = parse_pct(f["branch_pct"]);
      fc.lines_total = f.value("lines_total", 0L);
      fc.branches_total = f.value("branches_total", 0L);
      for (const auto& fnj : f.value("functions", json::array())) {
        suite::FunctionCoverage fn;
        fn.name = fnj.value("name", "");
        if (fnj.contains("line_pct")) fn.line_pct = parse_pct(fnj["line_pct"]);
        if (fnj.contains("branch_pct"))
          fn.branch_pct = parse_pct(fnj["branch_pct"]);
        fn.lines_total = fnj.value("lines_total", 0L);
        fn.branches_total = fnj.value("branches_total", 0L);
        fc.functions.push_back(std::move(fn));
      }
      return fc;
    };
    const auto& cov = doc["coverage"];
    for (const auto& f : cov.value("per_file", json::array()))
      rep.coverage.per_file.push_back(parse_file(f));
    if (cov.contains("project")) rep.coverage.project = parse_file(cov["project"]);
  }
  if (doc.contains("usage")) rep.usage_json = doc["usage"].dump(2);
  if (doc.contains("warnings"))
    rep.warnings = doc["warnings"].get<std::vector<std::string>>();
  if (doc.contains("errors"))
    rep.errors = doc["errors"].get<std::vector<std::string>>();
  return rep;
}

namespace {

std::string pct_cell(const std::optional<double>& p) {
  if (!p) return "N/A";
  return util::format_pct(*p);
}

}  // namespace

std::string report_summary(const RunReport& report, const std::string& format) {
  if (format == "json") return report.to_json();
  if (format != "text")
    throw ConfigError("unknown report format '" + format + "'");

  std::ostringstream out;
  out << "Project: " << report.project << "\n\n";

  out << std::left << std::setw(28) << "Function" << std::right
      << std::setw(7) << "Paths" << std::setw(6) << "Gen" << std::setw(7)
      << "Pass0" << std::setw(6) << "Fail" << std::setw(6) << "Fix1"
      << std::setw(6) << "Fix2" << std::setw(6) << "Fix3" << std::setw(6)
      << "Drop" << std::setw(7) << "Final" << "\n";
  for (const auto& f : report.functions) {
    out << std::left << std::setw(28) << f.function << std::right
        << std::setw(7) << f.path_count << std::setw(6) << f.row.generated
        << std::setw(7) << f.row.pass0 << std::setw(6) << f.row.failed
        << std::setw(6) << f.row.fixed1 << std::setw(6) << f.row.fixed2
        << std::setw(6) << f.row.fixed3 << std::setw(6) << f.row.dropped
        << std::setw(7) << f.row.final_count << "\n";
  }
  out << std::left << std::setw(28) << "TOTAL" << std::right << std::setw(7)
      << "" << std::setw(6) << report.totals.generated << std::setw(7)
      << report.totals.pass0 << std::setw(6) << report.totals.failed
      << std::setw(6) << report.totals.fixed1 << std::setw(6)
      << report.totals.fixed2 << std::setw(6) << report.totals.fixed3
      << std::setw(6) << report.totals.dropped << std::setw(7)
      << report.totals.final_count << "\n";
  out << "Retention: " << report.totals.final_count << "/"
      << report.totals.generated << " → "
      << util::format_pct(report.retention_pct()) << "\n";

  if (report.coverage_measured) {
    out << "\nCoverage\n";
    out << std::left << std::setw(28) << "File" << std::right << std::setw(9)
        << "Func%" << std::setw(9) << "Line%" << std::setw(9) << "Branch%"
        << std::setw(8) << "Lines" << std::setw(10) << "Branches" << "\n";
    auto cov_row = [&](const suite::FileCoverage& f) {
      out << std::left << std::setw(28) << f.file << std::right << std::setw(9)
          << pct_cell(f.function_pct) << std::setw(9) << pct_cell(f.line_pct)
          << std::setw(9) << pct_cell(f.branch_pct) << std::setw(8)
          << f.lines_total << std::setw(10) << f.branches_total << "\n";
    };
    for (const auto& f : report.coverage.per_file) cov_row(f);
    cov_row(report.coverage.project);
  }

  if (!report.usage_json.empty()) {
    auto usage = json::parse(report.usage_json, nullptr, false);
    if (usage.is_object() && usage.contains("per_stage")) {
      out << "\nModel usage\n";
      out << std::left << std::setw(12) << "Stage" << std::right
          << std::setw(10) << "Requests" << std::setw(16) << "PromptTok"
          << std::setw(16) << "CompletionTok" << "\n";
      for (auto it = usage["per_stage"].begin(); it != usage["per_stage"].end();
           ++it) {
        out << std::left << std::setw(12) << it.key() << std::right
            << std::setw(10) << it.value().value("requests", 0L)
            << std::setw(16) << it.value().value("prompt_tokens", 0L)
            << std::setw(16) << it.value().value("completion_tokens", 0L)
            << "\n";
      }
    }
  }

  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  for (const auto& e : report.errors) out << "error: " << e << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// orchestration

RunReport run_pipeline(const config::PipelineConfig& cfg,
                       PipelineServices services,
                       const std::string& stop_after) {
  config::check_config(cfg);
  int from = cfg.from_stage.empty() ? -1 : stage_index(cfg.from_stage);
  int stop = stop_after.empty()
                 ? static_cast<int>(stage_order().size()) - 1
                 : stage_index(stop_after);
  if (from > stop)
    throw ConfigError("--from stage '" + cfg.from_stage +
                      "' is after the requested stop stage");

  RunReport report;
  if (cfg.project_root.empty()) {
    report.errors.push_back("no project root configured");
    return report;
  }

  auto owned = build_services(cfg, services);
  RunState st(cfg, services);
  st.project_name = cfg.project_root.filename().string();
  if (st.project_name.empty())
    st.project_name = cfg.project_root.parent_path().filename().string();
  st.proj_dir = cfg.artifacts_dir / st.project_name;
  report.project = st.project_name;
  util::ensure_dir(st.proj_dir);

  auto hashes = compute_stage_hashes(cfg);

  struct StageEntry {
    const char* name;
    void (*run)(RunState&);
    void (*load)(RunState&);
  };
  static const StageEntry kStages[] = {
      {"ingest", run_ingest, load_ingest},
      {"paths", run_paths, load_paths},
      {"describe", run_describe, load_describe},
      {"retrieve", run_retrieve, load_retrieve},
      {"opmap", run_opmap, load_opmap},
      {"synth", run_synth, load_synth},
      {"validate", run_validate, load_validate},
      {"merge", run_merge, load_merge},
      {"coverage", run_coverage, load_coverage},
  };

  for (int i = 0; i <= stop; ++i) {
    const auto& stage = kStages[i];
    bool force_load = from >= 0 && i < from;
    try {
      if (force_load) {
        stage.load(st);
      } else if (from < 0 && stamp_matches(st, stage.name,
                                           hashes[stage.name])) {
        try {
          stage.load(st);
        } catch (const Error&) {
          stage.run(st);  // cache said fresh but artifacts are gone
          write_stamp(st, stage.name, hashes[stage.name]);
        }
      } else {
        stage.run(st);
        write_stamp(st, stage.name, hashes[stage.name]);
      }
    } catch (const Error& e) {
      report.errors.push_back(std::string(stage.name) + ": " + e.what());
      break;
    }
  }

  for (const auto& name : st.order) {
    FunctionReport f;
    f.function = name;
    f.path_count = static_cast<int>(st.fns[name].paths.paths.size());
    f.truncated = st.fns[name].paths.truncated;
    f.errors = st.fns[name].errors;
    if (st.has_validation) {
      for (const auto& row : st.validation.rows())
        if (row.function == name) f.row = row;
    }
    f.row.function = name;
    report.functions.push_back(std::move(f));
  }
  if (st.has_validation) report.totals = st.validation.totals();
  report.totals.function = "TOTAL";
  if (st.has_coverage) {
    report.coverage = st.coverage;
    report.coverage_measured = true;
  }
  if (services.client) {
    report.usage_json = services.client->ledger().to_json();
    util::atomic_write(st.proj_dir / "usage_ledger.json",
                       report.usage_json + "\n");
  }
  report.warnings = st.warnings;
  report.errors.insert(report.errors.end(), st.errors.begin(),
                       st.errors.end());
  util::atomic_write(st.proj_dir / "run_report.json", report.to_json());
  return report;
}

}  // namespace pathtest::pipeline
