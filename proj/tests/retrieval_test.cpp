#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>

#include "pathtest/errors.hpp"
#include "pathtest/retrieval.hpp"
#include "pathtest/util.hpp"

namespace fs = std::filesystem;
using namespace pathtest;
using retrieval::EmbeddingVector;

namespace {

EmbeddingVector vec(std::vector<double> v) {
  EmbeddingVector e;
  e.values = std::move(v);
  return e;
}

// Hands back canned vectors per exact text; used to pin retrieval scores.
struct TableEmbedder : retrieval::Embedder {
  std::map<std::string, std::vector<double>> table;
  EmbeddingVector embed(const std::string& text) override {
    auto it = table.find(text);
    REQUIRE(it != table.end());
    return vec(it->second);
  }
  int dim() const override { return 2; }
};

csource::FunctionUnit fn_with_body(const std::string& body) {
  csource::FunctionUnit fn;
  fn.name = "subject";
  fn.body = body;
  return fn;
}

retrieval::Helper helper(const std::string& name, const std::string& desc) {
  retrieval::Helper h;
  h.name = name;
  h.desc = desc;
  h.impl = name + " impl text";
  return h;
}

}  // namespace

TEST_CASE("cosine similarity matches hand-computed values") {
  // dot/(|a||b|) computed independently: (1*1+1*0) / (sqrt(2)*1)
  double expected = 1.0 / std::sqrt(2.0);
  CHECK(retrieval::cosine_similarity(vec({1, 1}), vec({1, 0})) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(retrieval::cosine_similarity(vec({1, 2, 3}), vec({1, 2, 3})) ==
        doctest::Approx(1.0));
  CHECK(retrieval::cosine_similarity(vec({1, 0}), vec({0, 1})) ==
        doctest::Approx(0.0));
  CHECK(retrieval::cosine_similarity(vec({1, 0}), vec({-1, 0})) ==
        doctest::Approx(-1.0));
}

TEST_CASE("cosine similarity rejects malformed inputs") {
  CHECK_THROWS_AS(retrieval::cosine_similarity(vec({1, 2}), vec({1, 2, 3})),
                  DimensionMismatch);
  CHECK_THROWS_AS(retrieval::cosine_similarity(vec({0, 0}), vec({1, 2})),
                  ZeroVector);
  CHECK_THROWS_AS(retrieval::cosine_similarity(vec({1, 2}), vec({0, 0})),
                  ZeroVector);
}

TEST_CASE("local embedder is deterministic, normalized and case-folding") {
  retrieval::LocalEmbedder e(64);
  CHECK(e.dim() == 64);
  auto a = e.embed("free the node list");
  auto b = e.embed("free the node list");
  CHECK(a.values == b.values);
  REQUIRE(a.dim() == 64);

  double norm = 0;
  for (double v : a.values) norm += v * v;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));

  auto upper = e.embed("FREE the NODE list");
  CHECK(a.values == upper.values);
}

TEST_CASE("local embedder buckets tokens by fnv1a hash") {
  // independent reimplementation of the bucketing rule
  auto fnv = [](const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  };
  retrieval::LocalEmbedder e(256);
  auto v = e.embed("alpha");
  auto bucket = static_cast<std::size_t>(fnv("alpha") % 256);
  CHECK(v.values[bucket] == doctest::Approx(1.0));

  // two distinct non-colliding tokens split the mass evenly
  auto two = e.embed("alpha beta");
  auto b2 = static_cast<std::size_t>(fnv("beta") % 256);
  REQUIRE(bucket != b2);
  CHECK(two.values[bucket] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(two.values[b2] == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("local embedder falls back to a unit vector with no tokens") {
  retrieval::LocalEmbedder e(16);
  auto v = e.embed("!!! ++ --");
  CHECK(v.values[0] == doctest::Approx(1.0));
  double norm = 0;
  for (double x : v.values) norm += x * x;
  CHECK(norm == doctest::Approx(1.0));
}

TEST_CASE("retrieve applies a strict threshold") {
  TableEmbedder emb;
  emb.table["body text"] = {1, 0};
  emb.table["aligned"] = {1, 0};     // score exactly 1.0
  emb.table["orthogonal"] = {0, 1};  // score exactly 0.0

  auto fn = fn_with_body("body text");
  std::vector<retrieval::Helper> pool = {helper("h_aligned", "aligned"),
                                         helper("h_orth", "orthogonal")};

  auto at_zero = retrieval::retrieve(fn, pool, 0.0, emb);
  REQUIRE(at_zero.entries.size() == 1);  // 0.0 is not > 0.0
  CHECK(at_zero.entries[0].helper.name == "h_aligned");
  CHECK(at_zero.entries[0].helper.impl.empty());  // impl stripped in catalogs

  auto at_one = retrieval::retrieve(fn, pool, 1.0, emb);
  CHECK(at_one.entries.empty());  // 1.0 is not > 1.0

  auto below = retrieval::retrieve(fn, pool, -0.5, emb);
  CHECK(below.entries.size() == 2);
}

TEST_CASE("retrieve sorts by descending score, ties by name") {
  TableEmbedder emb;
  emb.table["b"] = {1, 0};
  emb.table["high"] = {1, 0};
  emb.table["mid"] = {1, 1};
  emb.table["also high"] = {1, 0};

  auto fn = fn_with_body("b");
  std::vector<retrieval::Helper> pool = {helper("zeta", "also high"),
                                         helper("mid_h", "mid"),
                                         helper("alpha", "high")};
  auto cat = retrieval::retrieve(fn, pool, 0.1, emb);
  REQUIRE(cat.entries.size() == 3);
  CHECK(cat.entries[0].helper.name == "alpha");  // tie broken by name
  CHECK(cat.entries[1].helper.name == "zeta");
  CHECK(cat.entries[2].helper.name == "mid_h");
  CHECK(cat.entries[0].score > cat.entries[2].score);
}

TEST_CASE("the seed pool loads with metadata and implementations") {
  auto pool = retrieval::load_pool(fs::path(PATHTEST_SOURCE_DIR) / "pool");
  REQUIRE(pool.size() == 6);
  // directory order is sorted
  CHECK(pool[0].name == "cstring_equals");
  CHECK(pool[5].name == "make_int_array");
  for (const auto& h : pool) {
    CHECK_FALSE(h.desc.empty());
    CHECK(h.impl.find(h.name) != std::string::npos);
    CHECK(h.origin == retrieval::Helper::Origin::Pool);
  }
  // signatures survive the meta round trip
  const auto& mia = pool[5];
  CHECK(mia.signature.return_type == "int *");
  REQUIRE(mia.signature.param_types.size() == 2);
  CHECK(mia.signature.param_names[1] == "count");
}

TEST_CASE("load_pool failure modes") {
  auto dir = util::make_temp_dir("pooltest");
  CHECK(retrieval::load_pool(dir / "missing").empty());

  util::ensure_dir(dir / "broken");
  util::atomic_write(dir / "broken" / "meta.json",
                     R"({"name": "broken", "desc": "has no impl"})");
  CHECK_THROWS_AS(retrieval::load_pool(dir), MissingPoolImpl);

  fs::remove_all(dir / "broken");
  util::ensure_dir(dir / "nodesc");
  util::atomic_write(dir / "nodesc" / "meta.json", R"({"name": "nodesc"})");
  util::atomic_write(dir / "nodesc" / "impl.c", "void nodesc(void) {}\n");
  CHECK_THROWS_AS(retrieval::load_pool(dir), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("embed_pool caches and invalidates by name and dimension") {
  auto dir = util::make_temp_dir("embcache");
  auto cache = dir / "cache.json";
  retrieval::LocalEmbedder e(32);
  std::vector<retrieval::Helper> pool = {helper("one", "first helper"),
                                         helper("two", "second helper")};

  auto first = retrieval::embed_pool(pool, e, cache);
  REQUIRE(fs::exists(cache));
  auto second = retrieval::embed_pool(pool, e, cache);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i)
    CHECK(first[i].values == second[i].values);

  // different dimension: the cache must be ignored and rewritten
  retrieval::LocalEmbedder e64(64);
  auto wider = retrieval::embed_pool(pool, e64, cache);
  CHECK(wider[0].dim() == 64);

  // renamed helper: ditto
  pool[0].name = "renamed";
  auto renamed = retrieval::embed_pool(pool, e64, cache);
  CHECK(renamed.size() == 2);
  fs::remove_all(dir);
}
