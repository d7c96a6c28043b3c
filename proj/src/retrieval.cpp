#include "pathtest/retrieval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>

#include "pathtest/errors.hpp"
#include "pathtest/http.hpp"
#include "pathtest/util.hpp"

namespace pathtest::retrieval {

using nlohmann::json;

EmbeddingVector LocalEmbedder::embed(const std::string& text) {
  EmbeddingVector v;
  v.values.assign(static_cast<std::size_t>(dim_), 0.0);

  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    auto h = util::fnv1a64(word);
    v.values[h % static_cast<std::uint64_t>(dim_)] += 1.0;
    word.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();

  double norm = 0.0;
  for (double x : v.values) norm += x * x;
  if (norm == 0.0) {
    v.values[0] = 1.0;  // token-free input still yields a usable unit vector
    return v;
  }
  norm = std::sqrt(norm);
  for (double& x : v.values) x /= norm;
  return v;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch(a.dim(), b.dim());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVector();
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

HttpEmbedder::HttpEmbedder(HttpEmbedderOptions opts)
    : opts_(std::move(opts)), api_key_(util::env_or(opts_.api_key_env, "")) {}

EmbeddingVector HttpEmbedder::embed(const std::string& text) {
  json body;
  body["model"] = opts_.model_id;
  body["input"] = json::array({text});

  std::vector<std::pair<std::string, std::string>> headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);

  http::HttpResult res =
      http::post_json(opts_.base_url, opts_.path, headers, body.dump(), opts_.timeout);
  if (!res.error.empty()) throw EmbedderUnavailable(res.error);
  if (res.status != 200)
    throw EmbedderUnavailable("HTTP " + std::to_string(res.status) + ": " + res.body);

  json j;
  try {
    j = json::parse(res.body);
  } catch (const json::parse_error&) {
    throw EmbedderUnavailable("response is not JSON");
  }
  if (!j.contains("data") || j["data"].empty() ||
      !j["data"][0].contains("embedding"))
    throw EmbedderUnavailable("missing data[0].embedding");

  EmbeddingVector v;
  for (const auto& x : j["data"][0]["embedding"]) v.values.push_back(x.get<double>());
  if (opts_.dim == 0) opts_.dim = v.dim();
  if (v.dim() != opts_.dim) throw DimensionMismatch(v.dim(), opts_.dim);
  return v;
}

std::vector<Helper> load_pool(const fs::path& dir) {
  std::vector<Helper> pool;
  if (!fs::exists(dir)) return pool;

  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());

  for (const auto& sub : subdirs) {
    fs::path meta_path = sub / "meta.json";
    fs::path impl_path = sub / "impl.c";
    if (!fs::exists(meta_path)) continue;

    json meta;
    try {
      meta = json::parse(util::read_file(meta_path));
    } catch (const json::parse_error& e) {
      throw ConfigError(meta_path.string() + ": " + e.what());
    }
    Helper h;
    h.name = meta.value("name", sub.filename().string());
    h.desc = meta.value("desc", "");
    if (h.desc.empty())
      throw ConfigError(meta_path.string() + ": helper desc must be non-empty");
    if (meta.contains("signature")) {
      const auto& sig = meta["signature"];
      h.signature.return_type = sig.value("return_type", "void");
      for (const auto& p : sig.value("params", json::array())) {
        h.signature.param_types.push_back(p.value("type", ""));
        h.signature.param_names.push_back(p.value("name", ""));
        h.signature.param_texts.push_back(
            util::trim(p.value("type", "") + " " + p.value("name", "")));
      }
    }
    if (!fs::exists(impl_path)) throw MissingPoolImpl(h.name);
    h.impl = util::read_file(impl_path);
    h.origin = Helper::Origin::Pool;
    pool.push_back(std::move(h));
  }
  return pool;
}

std::vector<EmbeddingVector> embed_pool(const std::vector<Helper>& pool,
                                        Embedder& embedder,
                                        const std::optional<fs::path>& cache_path) {
  if (cache_path && fs::exists(*cache_path)) {
    try {
      json cache = json::parse(util::read_file(*cache_path));
      if (cache.value("dim", -1) == embedder.dim() &&
          cache.value("entries", json::array()).size() == pool.size()) {
        std::vector<EmbeddingVector> vectors;
        bool names_match = true;
        for (std::size_t i = 0; i < pool.size(); ++i) {
          const auto& e = cache["entries"][i];
          if (e.value("name", "") != pool[i].name) {
            names_match = false;
            break;
          }
          EmbeddingVector v;
          for (const auto& x : e["vector"]) v.values.push_back(x.get<double>());
          vectors.push_back(std::move(v));
        }
        if (names_match) return vectors;
      }
    } catch (const json::exception&) {
      // stale or corrupt cache: recompute below
    }
  }

  std::vector<EmbeddingVector> vectors;
  vectors.reserve(pool.size());
  for (const auto& h : pool) vectors.push_back(embedder.embed(h.desc));

  if (cache_path) {
    json cache;
    cache["dim"] = embedder.dim();
    cache["entries"] = json::array();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      cache["entries"].push_back(
          {{"name", pool[i].name}, {"vector", vectors[i].values}});
    }
    util::atomic_write(*cache_path, cache.dump(2));
  }
  return vectors;
}

HelperCatalog retrieve(const csource::FunctionUnit& fn,
                       const std::vector<Helper>& pool, double theta,
                       Embedder& embedder,
                       const std::vector<EmbeddingVector>* pool_vectors) {
  HelperCatalog catalog;
  if (pool.empty()) return catalog;

  EmbeddingVector fn_vec = embedder.embed(fn.body);
  std::vector<EmbeddingVector> local;
  if (!pool_vectors) {
    local = embed_pool(pool, embedder, std::nullopt);
    pool_vectors = &local;
  }

  for (std::size_t i = 0; i < pool.size(); ++i) {
    double score = cosine_similarity(fn_vec, (*pool_vectors)[i]);
    if (score > theta) {
      CatalogEntry entry;
      entry.helper = pool[i];
      entry.helper.impl.clear();  // catalogs never expose implementation text
      entry.score = score;
      catalog.entries.push_back(std::move(entry));
    }
  }
  std::sort(catalog.entries.begin(), catalog.entries.end(),
            [](const CatalogEntry& a, const CatalogEntry& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.helper.name < b.helper.name;
            });
  return catalog;
}

}  // namespace pathtest::retrieval
