#include "pathtest/suite.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "pathtest/cparse.hpp"
#include "pathtest/errors.hpp"
#include "pathtest/subprocess.hpp"
#include "pathtest/util.hpp"

namespace pathtest::suite {

using nlohmann::json;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Token-stream spelling: whitespace- and comment-insensitive equality key.
std::string normalize(const std::string& text) {
  std::string out;
  for (const auto& tok : clex::tokenize(text)) {
    if (!out.empty()) out += ' ';
    out += tok.text;
  }
  return out;
}

enum class DefGroup { Macro, Type, Global, Helper, Test };

struct Registry {
  struct Def {
    DefGroup group;
    std::string name;
    std::string text;
    std::string norm;
    std::string origin;  // "<function>/path<id>"
  };
  std::vector<Def> defs;  // first-appearance order
  std::vector<std::string>* warnings = nullptr;

  // Returns false when the name was already taken by a divergent body.
  void add(DefGroup group, const std::string& name, const std::string& text,
           const std::string& origin) {
    std::string norm = normalize(text);
    for (const auto& d : defs) {
      if (d.name != name) continue;
      if (d.norm != norm && warnings)
        warnings->push_back("definition of '" + name +
                            "' differs between " + d.origin + " and " +
                            origin + "; kept " + d.origin);
      return;  // dedup: first one wins either way
    }
    defs.push_back({group, name, text, norm, origin});
  }
};

std::string trim_block(const std::string& text) {
  std::string t = util::trim(text);
  return t;
}

}  // namespace

MergedSuite merge_suite(const std::vector<synth::AtomicTestUnit>& units) {
  MergedSuite out;
  std::vector<const synth::AtomicTestUnit*> kept;
  for (const auto& u : units) {
    if (u.status == synth::UnitStatus::Pending)
      throw ConstraintViolation("pending unit passed to merge: " + u.test_name);
    if (u.status == synth::UnitStatus::Dropped) continue;
    kept.push_back(&u);
  }
  std::sort(kept.begin(), kept.end(),
            [](const synth::AtomicTestUnit* a, const synth::AtomicTestUnit* b) {
              if (a->function_name != b->function_name)
                return a->function_name < b->function_name;
              return a->path_id < b->path_id;
            });

  Registry reg;
  reg.warnings = &out.warnings;
  std::vector<std::string> includes;  // beyond the forced unity.h/header.h
  auto add_include = [&](const std::string& raw) {
    std::string line = util::trim(raw);
    // Textual .c includes are inlined via the registry instead.
    if (ends_with(line, ".c\"") || util::contains(line, "unity.h") ||
        util::contains(line, "header.h"))
      return;
    if (std::find(includes.begin(), includes.end(), line) == includes.end())
      includes.push_back(line);
  };

  auto ingest_parsed = [&](const cparse::ParsedFile& pf,
                           const std::string& origin,
                           const std::string& test_name) {
    for (const auto& inc : pf.includes) add_include(inc);
    for (const auto& m : pf.macros)
      reg.add(DefGroup::Macro, m.name, m.text, origin);
    for (const auto& t : pf.types)
      reg.add(DefGroup::Type, t.name, t.text, origin);
    for (const auto& g : pf.globals)
      reg.add(DefGroup::Global, g.name, g.text, origin);
    for (const auto& f : pf.functions) {
      if (f.name == "main") {
        out.warnings.push_back("dropped main() from " + origin);
        continue;
      }
      DefGroup group =
          f.name == test_name ? DefGroup::Test : DefGroup::Helper;
      reg.add(group, f.name, f.text, origin);
    }
  };

  for (const auto* u : kept) {
    std::string origin = u->function_name + "/path" + std::to_string(u->path_id);
    ingest_parsed(cparse::parse_file("test.c", u->test_source), origin,
                  u->test_name);
    ingest_parsed(cparse::parse_file("helpers.c", u->helpers.source_text),
                  origin, "");
    out.included_tests.push_back({u->function_name, u->path_id, u->test_name});
  }

  std::string& src = out.source_text;
  src += "#include \"unity.h\"\n";
  src += "#include \"header.h\"\n";
  for (const auto& inc : includes) src += inc + "\n";
  src += "\n";
  auto emit_group = [&](DefGroup g) {
    for (const auto& d : reg.defs) {
      if (d.group != g) continue;
      src += trim_block(d.text);
      src += g == DefGroup::Macro ? "\n" : "\n\n";
      if (g == DefGroup::Helper || g == DefGroup::Global)
        out.helper_definitions[d.name] = d.text;
    }
  };
  emit_group(DefGroup::Macro);
  emit_group(DefGroup::Type);
  emit_group(DefGroup::Global);
  emit_group(DefGroup::Helper);
  emit_group(DefGroup::Test);

  src += "int main(void) {\n";
  src += "    UNITY_BEGIN();\n";
  for (const auto& t : out.included_tests)
    src += "    RUN_TEST(" + t.test_name + ");\n";
  src += "    return UNITY_END();\n";
  src += "}\n";
  return out;
}

void verify_suite_compiles(const MergedSuite& suite,
                           const std::vector<fs::path>& support_sources,
                           const std::vector<fs::path>& include_dirs,
                           toolchain::Toolchain& tc) {
  fs::path dir = util::make_temp_dir("suitecheck");
  util::atomic_write(dir / "test_suite.c", suite.source_text);
  toolchain::CompileJob job;
  job.sources = {dir / "test_suite.c"};
  job.sources.insert(job.sources.end(), support_sources.begin(),
                     support_sources.end());
  job.output = dir / "suite_bin";
  job.include_dirs = include_dirs;
  job.tag = "suite";
  auto res = tc.compile(job);
  std::error_code ec;
  fs::remove_all(dir, ec);
  if (!res.ok) {
    std::string msg = res.diagnostics;
    if (!suite.warnings.empty())
      msg += "\nmerge divergences: " + util::join(suite.warnings, "; ");
    throw MergeCompileFailure(msg);
  }
}

// ---------------------------------------------------------------------------
// gcov parsing

namespace {

struct StatLine {
  std::optional<double> pct;
  long total = 0;
};

// "Lines executed:90.00% of 309" -> {90.00, 309}; "... of 0" -> {absent, 0}.
StatLine parse_stat(const std::string& line) {
  auto colon = line.find(':');
  auto pctpos = line.find('%', colon);
  auto ofpos = line.find(" of ", colon);
  if (colon == std::string::npos || pctpos == std::string::npos ||
      ofpos == std::string::npos)
    throw UnrecognizedFormat(line);
  StatLine out;
  try {
    double pct = std::stod(line.substr(colon + 1, pctpos - colon - 1));
    out.total = std::stol(line.substr(ofpos + 4));
    if (out.total > 0) out.pct = pct;
  } catch (const std::exception&) {
    throw UnrecognizedFormat(line);
  }
  return out;
}

std::string quoted_name(const std::string& line) {
  auto open = line.find('\'');
  auto close = line.rfind('\'');
  if (open == std::string::npos || close <= open)
    throw UnrecognizedFormat(line);
  return line.substr(open + 1, close - open - 1);
}

struct RecordBuilder {
  std::string name;
  bool is_file = false;
  StatLine lines;
  StatLine branches_executed;
  StatLine taken;
  bool open = false;

  std::optional<double> branch_pct() const {
    if (taken.total > 0) return taken.pct;
    if (branches_executed.total > 0) return branches_executed.pct;
    return std::nullopt;
  }
};

}  // namespace

std::vector<FileCoverage> parse_gcov(const std::string& raw) {
  std::vector<FileCoverage> files;
  std::vector<FunctionCoverage> pending;
  RecordBuilder cur;

  auto flush = [&]() {
    if (!cur.open) return;
    if (cur.is_file) {
      FileCoverage fc;
      fc.file = cur.name;
      fc.line_pct = cur.lines.pct;
      fc.lines_total = cur.lines.total;
      fc.branch_pct = cur.branch_pct();
      fc.branches_total = std::max(cur.taken.total, cur.branches_executed.total);
      fc.functions = std::move(pending);
      pending.clear();
      files.push_back(std::move(fc));
    } else {
      FunctionCoverage fn;
      fn.name = cur.name;
      fn.line_pct = cur.lines.pct;
      fn.lines_total = cur.lines.total;
      fn.branch_pct = cur.branch_pct();
      fn.branches_total = std::max(cur.taken.total, cur.branches_executed.total);
      pending.push_back(std::move(fn));
    }
    cur = RecordBuilder{};
  };

  for (auto& rawline : util::split_lines(raw)) {
    std::string line = util::trim(rawline);
    if (line.empty()) continue;
    if (util::starts_with(line, "Function '")) {
      flush();
      cur.open = true;
      cur.is_file = false;
      cur.name = quoted_name(line);
    } else if (util::starts_with(line, "File '")) {
      flush();
      cur.open = true;
      cur.is_file = true;
      cur.name = quoted_name(line);
    } else if (util::starts_with(line, "Lines executed:")) {
      if (cur.open) cur.lines = parse_stat(line);
      // else: the overall cross-file trailer; ignored
    } else if (util::starts_with(line, "Branches executed:")) {
      if (cur.open) cur.branches_executed = parse_stat(line);
    } else if (util::starts_with(line, "Taken at least once:")) {
      if (cur.open) cur.taken = parse_stat(line);
    } else if (util::starts_with(line, "Calls executed:") ||
               util::starts_with(line, "No executable lines") ||
               util::starts_with(line, "No branches") ||
               util::starts_with(line, "No calls") ||
               util::starts_with(line, "Creating '") ||
               util::starts_with(line, "Removing '")) {
      // summary noise
    } else {
      throw UnrecognizedFormat(line);
    }
  }
  flush();
  if (files.empty()) throw UnrecognizedFormat(raw.substr(0, 80));
  return files;
}

// ---------------------------------------------------------------------------
// coverage measurement

namespace {

void aggregate(CoverageReport& rep) {
  double line_cov = 0;
  long line_tot = 0;
  double br_cov = 0;
  long br_tot = 0;
  long fn_tot = 0;
  long fn_hit = 0;
  for (auto& f : rep.per_file) {
    if (!f.functions.empty()) {
      long hit = static_cast<long>(
          std::count_if(f.functions.begin(), f.functions.end(),
                        [](const FunctionCoverage& fn) {
                          return fn.line_pct && *fn.line_pct > 0.0;
                        }));
      f.function_pct = 100.0 * static_cast<double>(hit) /
                       static_cast<double>(f.functions.size());
      fn_tot += static_cast<long>(f.functions.size());
      fn_hit += hit;
    }
    if (f.line_pct) {
      line_cov += *f.line_pct / 100.0 * static_cast<double>(f.lines_total);
      line_tot += f.lines_total;
    }
    if (f.branch_pct) {
      br_cov += *f.branch_pct / 100.0 * static_cast<double>(f.branches_total);
      br_tot += f.branches_total;
    }
  }
  rep.project.file = "TOTAL";
  rep.project.lines_total = line_tot;
  rep.project.branches_total = br_tot;
  if (line_tot > 0)
    rep.project.line_pct = 100.0 * line_cov / static_cast<double>(line_tot);
  if (br_tot > 0)
    rep.project.branch_pct = 100.0 * br_cov / static_cast<double>(br_tot);
  if (fn_tot > 0)
    rep.project.function_pct =
        100.0 * static_cast<double>(fn_hit) / static_cast<double>(fn_tot);
}

}  // namespace

CoverageReport measure_coverage(const CoverageJob& job,
                                toolchain::Toolchain& tc) {
  util::ensure_dir(job.work_dir);
  fs::path objdir = job.work_dir / "obj";
  util::ensure_dir(objdir);

  std::vector<fs::path> objects;
  int idx = 0;
  auto compile_one = [&](const fs::path& src, bool instrument) {
    toolchain::CompileJob cj;
    cj.sources = {src};
    cj.compile_only = true;
    cj.coverage = instrument;
    cj.output = objdir / (std::to_string(idx++) + "_" + src.stem().string() +
                          ".o");
    cj.include_dirs = job.include_dirs;
    cj.tag = "coverage";
    auto r = tc.compile(cj);
    if (!r.ok) throw MergeCompileFailure(r.diagnostics);
    objects.push_back(cj.output);
    return cj.output;
  };

  std::vector<std::pair<fs::path, fs::path>> measured;  // source, object
  for (const auto& src : job.project_sources)
    measured.emplace_back(src, compile_one(src, true));
  compile_one(job.suite_source, false);
  for (const auto& src : job.extra_sources) compile_one(src, false);

  toolchain::CompileJob link;
  link.sources = objects;
  link.output = job.work_dir / "suite_bin";
  link.coverage = true;  // pulls in libgcov
  link.tag = "coverage-link";
  auto lr = tc.compile(link);
  if (!lr.ok) throw MergeCompileFailure(lr.diagnostics);

  toolchain::RunJob rj;
  rj.binary = link.output;
  rj.cwd = job.work_dir;
  rj.timeout = job.timeout;
  rj.tag = "coverage-run";
  auto out = tc.run(rj);
  if (out.timed_out)
    throw SuiteRunFailure("merged suite timed out\n" + out.output);
  if (out.exit_code != 0 || out.signal)
    throw SuiteRunFailure("merged suite failed (exit " +
                          std::to_string(out.exit_code) + ")\n" + out.output);

  if (!util::program_exists("gcov"))
    throw CoverageToolMissing("gcov not found on PATH");

  CoverageReport rep;
  for (const auto& [src, obj] : measured) {
    util::RunSpec spec;
    spec.argv = {"gcov", "-b", "-f", "-o", obj.string(),
                 fs::absolute(src).string()};
    spec.cwd = job.work_dir;
    spec.timeout = std::chrono::milliseconds(60000);
    auto g = util::run_process(spec);
    if (g.exit_code != 0)
      throw CoverageToolMissing("gcov failed on " + src.string() + ":\n" +
                                g.output);
    for (auto& f : parse_gcov(g.output)) {
      if (fs::path(f.file).filename() != src.filename()) continue;
      f.file = src.filename().string();
      rep.per_file.push_back(std::move(f));
    }
  }
  aggregate(rep);
  return rep;
}

std::string CoverageReport::to_json() const {
  auto pct_json = [](const std::optional<double>& p) {
    return p ? json(*p) : json(nullptr);
  };
  auto file_json = [&](const FileCoverage& f) {
    json j;
    j["file"] = f.file;
    j["function_pct"] = pct_json(f.function_pct);
    j["line_pct"] = pct_json(f.line_pct);
    j["branch_pct"] = pct_json(f.branch_pct);
    j["lines_total"] = f.lines_total;
    j["branches_total"] = f.branches_total;
    j["functions"] = json::array();
    for (const auto& fn : f.functions) {
      json fj;
      fj["name"] = fn.name;
      fj["line_pct"] = pct_json(fn.line_pct);
      fj["branch_pct"] = pct_json(fn.branch_pct);
      fj["lines_total"] = fn.lines_total;
      fj["branches_total"] = fn.branches_total;
      j["functions"].push_back(fj);
    }
    return j;
  };
  json j;
  j["per_file"] = json::array();
  for (const auto& f : per_file) j["per_file"].push_back(file_json(f));
  j["project"] = file_json(project);
  return j.dump(2) + "\n";
}

}  // namespace pathtest::suite
