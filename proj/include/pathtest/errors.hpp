#pragma once

#include <stdexcept>
#include <string>

namespace pathtest {

// Base class for every error raised by the pipeline.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- source ingestion ---

class NoSourcesFound : public Error {
 public:
  explicit NoSourcesFound(const std::string& root)
      : Error("no .c sources found under " + root) {}
};

class ParseFailure : public Error {
 public:
  ParseFailure(const std::string& file, const std::string& diagnostic)
      : Error(file + ": " + diagnostic), file_(file), diagnostic_(diagnostic) {}
  const std::string& file() const { return file_; }
  const std::string& diagnostic() const { return diagnostic_; }

 private:
  std::string file_;
  std::string diagnostic_;
};

class UnresolvedType : public Error {
 public:
  explicit UnresolvedType(const std::string& name)
      : Error("prototype references type with no visible definition: " + name),
        name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class ExtractionFailure : public Error {
 public:
  ExtractionFailure(const std::string& name, const std::string& diagnostic)
      : Error("failed to extract " + name + ": " + diagnostic), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// --- cfg ---

class UnsupportedConstruct : public Error {
 public:
  UnsupportedConstruct(const std::string& kind, int line)
      : Error("unsupported construct " + kind + " at line " + std::to_string(line)),
        kind_(kind), line_(line) {}
  const std::string& kind() const { return kind_; }
  int line() const { return line_; }

 private:
  std::string kind_;
  int line_;
};

class InvalidCfg : public Error {
 public:
  explicit InvalidCfg(const std::string& why) : Error("invalid cfg: " + why) {}
};

// --- retrieval ---

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(int a, int b)
      : Error("embedding dimension mismatch: " + std::to_string(a) + " vs " +
              std::to_string(b)) {}
};

class ZeroVector : public Error {
 public:
  ZeroVector() : Error("cosine similarity undefined for a zero vector") {}
};

class EmbedderUnavailable : public Error {
 public:
  explicit EmbedderUnavailable(const std::string& why)
      : Error("embedder unavailable: " + why) {}
};

// --- llm ---

class LlmUnavailable : public Error {
 public:
  explicit LlmUnavailable(const std::string& why)
      : Error("llm unavailable: " + why) {}
};

class ProviderError : public Error {
 public:
  ProviderError(int status, const std::string& body)
      : Error("provider error " + std::to_string(status) + ": " + body),
        status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class MalformedResponse : public Error {
 public:
  explicit MalformedResponse(const std::string& why)
      : Error("malformed llm response: " + why) {}
};

class ScriptMiss : public Error {
 public:
  ScriptMiss(const std::string& stage, const std::string& fingerprint)
      : Error("no scripted response for stage=" + stage +
              " fingerprint=" + fingerprint) {}
};

class MalformedScript : public Error {
 public:
  explicit MalformedScript(const std::string& why)
      : Error("malformed mock script: " + why) {}
};

// --- operation map ---

class SchemaViolation : public Error {
 public:
  explicit SchemaViolation(const std::string& raw)
      : Error("operation-map response violates schema: " + raw), raw_(raw) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class HallucinatedReuse : public Error {
 public:
  explicit HallucinatedReuse(const std::string& name)
      : Error("operation map reuses helper not in catalog: " + name),
        name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class MissingPoolImpl : public Error {
 public:
  explicit MissingPoolImpl(const std::string& name)
      : Error("helper pool has no implementation for " + name), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class HelperCompileFailure : public Error {
 public:
  explicit HelperCompileFailure(const std::string& diagnostics)
      : Error("assembled helpers file does not compile:\n" + diagnostics),
        diagnostics_(diagnostics) {}
  const std::string& diagnostics() const { return diagnostics_; }

 private:
  std::string diagnostics_;
};

// --- synthesis ---

class ConstraintViolation : public Error {
 public:
  explicit ConstraintViolation(const std::string& identifier)
      : Error("test references identifier outside its operation-map slice: " +
              identifier),
        identifier_(identifier) {}
  const std::string& identifier() const { return identifier_; }

 private:
  std::string identifier_;
};

class EmptyResponse : public Error {
 public:
  EmptyResponse() : Error("llm returned an empty test body") {}
};

// --- validation / toolchain ---

class ToolchainMissing : public Error {
 public:
  explicit ToolchainMissing(const std::string& what)
      : Error("toolchain missing: " + what) {}
};

// --- suite / coverage ---

class MergeCompileFailure : public Error {
 public:
  explicit MergeCompileFailure(const std::string& diagnostics)
      : Error("merged suite does not compile:\n" + diagnostics) {}
};

class CoverageToolMissing : public Error {
 public:
  explicit CoverageToolMissing(const std::string& what)
      : Error("coverage tool missing: " + what) {}
};

class SuiteRunFailure : public Error {
 public:
  explicit SuiteRunFailure(const std::string& diagnostics)
      : Error("merged suite failed although all members validated:\n" +
              diagnostics) {}
};

class UnrecognizedFormat : public Error {
 public:
  explicit UnrecognizedFormat(const std::string& line)
      : Error("unrecognized coverage summary line: " + line) {}
};

// --- config / cli ---

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& why) : Error("config: " + why) {}
};

}  // namespace pathtest
