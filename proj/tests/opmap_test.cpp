#include <doctest.h>

#include <algorithm>

#include <json.hpp>

#include "pathtest/cfg.hpp"
#include "pathtest/errors.hpp"
#include "pathtest/opmap.hpp"
#include "pathtest/util.hpp"

using namespace pathtest;
using llm::Stage;

namespace {

csource::FunctionUnit subject() {
  csource::FunctionUnit fn;
  fn.name = "twice";
  fn.body = "int twice(int x)\n{\n    return 2 * x;\n}\n";
  fn.signature.return_type = "int";
  fn.deps = {"twice"};
  return fn;
}

const char* kHeader =
    "#ifndef HEADER_H\n#define HEADER_H\n#include <stdlib.h>\n"
    "int twice(int x);\n#endif\n";

retrieval::HelperCatalog catalog_with(const std::string& name) {
  retrieval::HelperCatalog cat;
  retrieval::CatalogEntry e;
  e.helper.name = name;
  e.helper.desc = "a pool helper";
  e.score = 0.9;
  cat.entries.push_back(e);
  return cat;
}

std::string ok_response(const std::string& reuse = "") {
  nlohmann::json j;
  j["reuse"] = reuse.empty() ? nlohmann::json::array()
                             : nlohmann::json::array({reuse});
  j["created"] = nlohmann::json::array(
      {{{"name", "make_input"},
        {"impl", "int make_input(int seed)\n{\n    return seed + 1;\n}\n"},
        {"desc", "builds a deterministic input"}}});
  j["deps"] = nlohmann::json::array({{{"callee", "twice"}, {"note", "direct call"}}});
  return j.dump();
}

}  // namespace

TEST_CASE("a clean response yields reuse, created and deps") {
  llm::ScriptedLlmClient client;
  client.set_default_response(Stage::Opmap, ok_response("pool_helper"));

  auto map = opmap::build_operation_map(subject(), kHeader,
                                        catalog_with("pool_helper"), client);
  CHECK(map.function_name == "twice");
  REQUIRE(map.reuse.size() == 1);
  CHECK(map.reuse[0] == "pool_helper");
  REQUIRE(map.created.size() == 1);
  CHECK(map.created[0].name == "make_input");
  CHECK(map.created[0].origin == retrieval::Helper::Origin::Created);
  CHECK(map.created[0].signature.return_type == "int");
  REQUIRE(map.created[0].signature.param_types.size() == 1);
  REQUIRE(map.deps_analysis.size() == 1);
  CHECK(map.deps_analysis[0].callee == "twice");
  CHECK(map.warnings.empty());
}

TEST_CASE("fenced responses still parse") {
  llm::ScriptedLlmClient client;
  client.set_default_response(Stage::Opmap,
                              "```json\n" + ok_response() + "\n```");
  auto map = opmap::build_operation_map(subject(), kHeader, {}, client);
  CHECK(map.created.size() == 1);
}

TEST_CASE("one bad response earns a reprompt, then succeeds with a warning") {
  llm::ScriptedLlmClient client;
  client.push_queue_response(Stage::Opmap, "not json at all");
  client.push_queue_response(Stage::Opmap, ok_response());

  auto map = opmap::build_operation_map(subject(), kHeader, {}, client);
  CHECK(map.created.size() == 1);
  REQUIRE(map.warnings.size() == 1);
  CHECK(map.warnings[0].find("reprompt") != std::string::npos);
  CHECK(client.history().size() == 2);
}

TEST_CASE("reusing an uncataloged helper twice raises HallucinatedReuse") {
  llm::ScriptedLlmClient client;
  nlohmann::json bad;
  bad["reuse"] = {"ghost_helper"};
  bad["created"] = nlohmann::json::array();
  bad["deps"] = nlohmann::json::array();
  client.set_default_response(Stage::Opmap, bad.dump());

  CHECK_THROWS_AS(
      opmap::build_operation_map(subject(), kHeader, catalog_with("real"), client),
      HallucinatedReuse);
}

TEST_CASE("persistent schema garbage raises SchemaViolation") {
  llm::ScriptedLlmClient client;
  client.set_default_response(Stage::Opmap, "{\"created\": [{\"name\": \"x\"}]}");
  CHECK_THROWS_AS(opmap::build_operation_map(subject(), kHeader, {}, client),
                  SchemaViolation);
}

TEST_CASE("created helpers may not shadow the function or its deps") {
  llm::ScriptedLlmClient client;
  nlohmann::json bad;
  bad["reuse"] = nlohmann::json::array();
  bad["created"] = nlohmann::json::array(
      {{{"name", "twice"}, {"impl", "int twice(int x)\n{\n    return x;\n}\n"},
        {"desc", "shadow"}}});
  bad["deps"] = nlohmann::json::array();
  client.push_queue_response(Stage::Opmap, bad.dump());
  client.push_queue_response(Stage::Opmap, ok_response());

  auto map = opmap::build_operation_map(subject(), kHeader, {}, client);
  CHECK(map.created.size() == 1);
  CHECK(map.created[0].name == "make_input");  // the corrected answer
}

TEST_CASE("created impls must define the named function") {
  llm::ScriptedLlmClient client;
  nlohmann::json bad;
  bad["reuse"] = nlohmann::json::array();
  bad["created"] = nlohmann::json::array(
      {{{"name", "wanted"},
        {"impl", "int other(void)\n{\n    return 0;\n}\n"},
        {"desc", "mismatch"}}});
  bad["deps"] = nlohmann::json::array();
  client.set_default_response(Stage::Opmap, bad.dump());
  CHECK_THROWS_AS(opmap::build_operation_map(subject(), kHeader, {}, client),
                  SchemaViolation);
}

TEST_CASE("merge_path_info builds identical allowed lists per path") {
  auto map = opmap::OperationMap{};
  map.function_name = "twice";
  map.reuse = {"pool_helper"};
  retrieval::Helper created;
  created.name = "make_input";
  map.created = {created};
  map.deps_analysis = {{"free_all", "teardown"}};

  auto g = cfg::build_cfg_from_source("twice",
                                      "int twice(int x)\n{\n    if (x > 0)\n"
                                      "        return 2 * x;\n    return 0;\n}\n");
  auto en = cfg::enumerate_paths(g, 1, 8);
  REQUIRE(en.paths.size() == 2);

  auto merged = opmap::merge_path_info(map, en.paths);
  REQUIRE(merged.per_path.size() == 2);
  for (const auto& [id, slice] : merged.per_path) {
    CHECK(slice.path_id == id);
    CHECK_FALSE(slice.linearized.empty());
    CHECK(std::is_sorted(slice.allowed_calls.begin(), slice.allowed_calls.end()));
    auto has = [&](const std::string& n) {
      return std::find(slice.allowed_calls.begin(), slice.allowed_calls.end(),
                       n) != slice.allowed_calls.end();
    };
    CHECK(has("twice"));        // the function under test
    CHECK(has("pool_helper"));  // reuse
    CHECK(has("make_input"));   // created
    CHECK(has("free_all"));     // analyzed dep
    CHECK(has("malloc"));       // standard allow-list
    CHECK(has("free"));
  }
}

TEST_CASE("the standard allow list covers the usual libc surface") {
  const auto& allow = opmap::standard_allow_list();
  for (const char* n : {"malloc", "calloc", "realloc", "free", "memcpy",
                        "strcmp", "printf", "snprintf"})
    CHECK(std::find(allow.begin(), allow.end(), n) != allow.end());
}

TEST_CASE("assemble_helpers compiles pool and created impls together") {
  toolchain::GccToolchain tc;

  opmap::OperationMap map;
  map.function_name = "twice";
  map.reuse = {"pool_helper"};
  retrieval::Helper created;
  created.name = "make_input";
  created.impl = "int make_input(int seed)\n{\n    return seed + 1;\n}\n";
  created.origin = retrieval::Helper::Origin::Created;
  map.created = {created};

  retrieval::Helper pooled;
  pooled.name = "pool_helper";
  pooled.impl = "int pool_helper(void)\n{\n    return 41;\n}\n";
  pooled.desc = "pooled";

  auto out = opmap::assemble_helpers(map, {pooled}, kHeader, tc);
  CHECK(out.source_text.find("#include \"header.h\"") == 0);
  CHECK(out.source_text.find("pool_helper") != std::string::npos);
  CHECK(out.source_text.find("make_input") != std::string::npos);
  REQUIRE(out.provided_names.size() == 2);
  CHECK(out.provided_names[0] == "pool_helper");  // reuse first
  CHECK(out.warnings.empty());
}

TEST_CASE("a created helper overrides its pool namesake with a warning") {
  toolchain::GccToolchain tc;
  opmap::OperationMap map;
  map.function_name = "twice";
  map.reuse = {"make_input"};
  retrieval::Helper created;
  created.name = "make_input";
  created.impl = "int make_input(int seed)\n{\n    return seed + 2;\n}\n";
  created.origin = retrieval::Helper::Origin::Created;
  map.created = {created};

  retrieval::Helper pooled;
  pooled.name = "make_input";
  pooled.impl = "int make_input(int seed)\n{\n    return seed;\n}\n";

  auto out = opmap::assemble_helpers(map, {pooled}, kHeader, tc);
  REQUIRE(out.provided_names.size() == 1);
  CHECK(out.source_text.find("seed + 2") != std::string::npos);
  CHECK(out.source_text.find("return seed;") == std::string::npos);
  REQUIRE(out.warnings.size() == 1);
  CHECK(out.warnings[0].find("make_input") != std::string::npos);
}

TEST_CASE("assemble_helpers failure modes") {
  toolchain::GccToolchain tc;
  opmap::OperationMap map;
  map.function_name = "twice";
  map.reuse = {"not_in_pool"};
  CHECK_THROWS_AS(opmap::assemble_helpers(map, {}, kHeader, tc), MissingPoolImpl);

  opmap::OperationMap broken;
  broken.function_name = "twice";
  retrieval::Helper bad;
  bad.name = "bad";
  bad.impl = "int bad(void)\n{\n    return notdeclared(;\n}\n";
  bad.origin = retrieval::Helper::Origin::Created;
  broken.created = {bad};
  CHECK_THROWS_AS(opmap::assemble_helpers(broken, {}, kHeader, tc),
                  HelperCompileFailure);
}

TEST_CASE("replicate_helpers hands each path its own copy") {
  opmap::HelpersFile file;
  file.source_text = "#include \"header.h\"\n\nint h(void)\n{\n    return 1;\n}\n";
  file.provided_names = {"h"};

  auto g = cfg::build_cfg_from_source("twice",
                                      "int twice(int x)\n{\n    if (x > 0)\n"
                                      "        return 2 * x;\n    return 0;\n}\n");
  auto en = cfg::enumerate_paths(g, 1, 8);
  auto copies = opmap::replicate_helpers(file, en.paths);
  REQUIRE(copies.size() == en.paths.size());
  for (const auto& p : en.paths) {
    REQUIRE(copies.count(p.path_id));
    CHECK(copies.at(p.path_id).source_text == file.source_text);
  }
}

TEST_CASE("opmap artifacts serialize to JSON") {
  opmap::OperationMap map;
  map.function_name = "twice";
  map.reuse = {"pool_helper"};
  auto text = opmap::opmap_to_json(map);
  auto j = nlohmann::json::parse(text);
  CHECK(j["function"] == "twice");
  CHECK(j["reuse"][0] == "pool_helper");
}
