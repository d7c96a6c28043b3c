#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pathtest/csource.hpp"

namespace pathtest::retrieval {

namespace fs = std::filesystem;

struct EmbeddingVector {
  std::vector<double> values;
  int dim() const { return static_cast<int>(values.size()); }
};

struct Helper {
  enum class Origin { Pool, Created };
  std::string name;
  csource::Signature signature;
  std::string impl;  // stripped when the helper sits in a catalog
  std::string desc;
  Origin origin = Origin::Pool;
};

struct CatalogEntry {
  Helper helper;  // impl always empty here
  double score = 0.0;
};

// Helpers scoring above the retrieval threshold, best first.
struct HelperCatalog {
  std::vector<CatalogEntry> entries;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(const std::string& text) = 0;
  virtual int dim() const = 0;
};

// Deterministic offline embedder: identifier-style tokens are lowercased,
// hashed into dim buckets, counted, and the vector is L2-normalized.
class LocalEmbedder : public Embedder {
 public:
  explicit LocalEmbedder(int dim = 256) : dim_(dim) {}
  EmbeddingVector embed(const std::string& text) override;
  int dim() const override { return dim_; }

 private:
  int dim_;
};

struct HttpEmbedderOptions {
  std::string base_url;
  std::string path = "/v1/embeddings";
  std::string api_key_env = "PATHTEST_API_KEY";
  std::string model_id;
  int dim = 0;  // expected dimension; 0 accepts whatever comes back first
  std::chrono::seconds timeout{60};
};

// Client for the common embeddings wire shape:
//   {model, input: [texts]} -> {data: [{embedding: [floats]}]}
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderOptions opts);
  EmbeddingVector embed(const std::string& text) override;
  int dim() const override { return opts_.dim; }

 private:
  HttpEmbedderOptions opts_;
  std::string api_key_;
};

// dot(a,b) / (|a||b|). Throws DimensionMismatch or ZeroVector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Pool directory layout: <dir>/<helper>/impl.c + meta.json
// (meta.json: {"name", "desc", "signature": {"return_type", "params":
// [{"type","name"}]}}).
std::vector<Helper> load_pool(const fs::path& dir);

// Embeddings for every pool helper desc, cached at cache_path when given
// (reused only if names and dimension still match).
std::vector<EmbeddingVector> embed_pool(const std::vector<Helper>& pool,
                                        Embedder& embedder,
                                        const std::optional<fs::path>& cache_path);

// Catalog of pool helpers whose desc-to-body similarity exceeds theta.
HelperCatalog retrieve(const csource::FunctionUnit& fn,
                       const std::vector<Helper>& pool, double theta,
                       Embedder& embedder,
                       const std::vector<EmbeddingVector>* pool_vectors = nullptr);

}  // namespace pathtest::retrieval
