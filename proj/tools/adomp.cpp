// SPDX-License-Identifier: Apache-2.0
// Command-line driver: analyze, diff, run, verify, bench.
#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "adomp/adjoint.hpp"
#include "adomp/analysis.hpp"
#include "adomp/executor.hpp"
#include "adomp/frontend.hpp"
#include "adomp/tangent.hpp"
#include "adomp/verify.hpp"

using namespace adomp;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

void bind_value(Bindings& b, const Program& p, const std::string& name, const std::vector<std::string>& values) {
  const VarDecl* d = p.find(name);
  if (!d) throw Error("'" + name + "' is not declared in " + p.name);
  if (d->type == BaseType::Integer) {
    if (values.size() != 1) throw Error("integer '" + name + "' takes one value");
    b.ints[name] = std::stoll(values[0]);
    return;
  }
  std::vector<double> v;
  for (const auto& s : values) {
    if (!is_number(s)) throw Error("bad value '" + s + "' for '" + name + "'");
    v.push_back(std::stod(s));
  }
  b.reals[name] = std::move(v);
}

// `@file.tsv`: header row of names, one column per variable; short columns end early.
void bind_table(Bindings& b, const Program& p, const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error("'" + path + "' is empty");
  std::vector<std::string> names = split(line, '\t');
  std::vector<std::vector<std::string>> columns(names.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, '\t');
    for (std::size_t k = 0; k < names.size() && k < cells.size(); ++k)
      if (!cells[k].empty()) columns[k].push_back(cells[k]);
  }
  for (std::size_t k = 0; k < names.size(); ++k) bind_value(b, p, names[k], columns[k]);
}

// `name=value`, `name=v1,v2,...` or `name=@column.tsv`.
void bind_arg(Bindings& b, const Program& p, const std::string& arg) {
  if (!arg.empty() && arg[0] == '@') {
    bind_table(b, p, arg.substr(1));
    return;
  }
  auto eq = arg.find('=');
  if (eq == std::string::npos) throw Error("expected name=value or @file.tsv, got '" + arg + "'");
  std::string name = arg.substr(0, eq);
  std::string value = arg.substr(eq + 1);
  if (!value.empty() && value[0] == '@') {
    std::istringstream in(read_file(value.substr(1)));
    std::vector<std::string> cells;
    std::string line;
    while (std::getline(in, line)) {
      auto first = split(line, '\t');
      if (first.empty() || first[0].empty()) continue;
      if (cells.empty() && !is_number(first[0])) continue;  // header
      cells.push_back(first[0]);
    }
    bind_value(b, p, name, cells);
    return;
  }
  bind_value(b, p, name, split(value, ','));
}

void write_table(std::ostream& os, const Bindings& values, const std::vector<std::string>& names) {
  std::vector<std::vector<std::string>> cols;
  std::size_t rows = 0;
  for (const auto& n : names) {
    std::vector<std::string> col;
    if (auto it = values.ints.find(n); it != values.ints.end()) {
      col.push_back(std::to_string(it->second));
    } else if (auto rt = values.reals.find(n); rt != values.reals.end()) {
      for (double v : rt->second) {
        std::ostringstream s;
        s << std::setprecision(17) << v;
        col.push_back(s.str());
      }
    } else {
      throw Error("no output named '" + n + "'");
    }
    rows = std::max(rows, col.size());
    cols.push_back(std::move(col));
  }
  for (std::size_t k = 0; k < names.size(); ++k) os << (k ? "\t" : "") << names[k];
  os << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "\t" : "") << (r < cols[k].size() ? cols[k][r] : "");
    os << '\n';
  }
}

std::vector<int> parse_threads(const std::string& list) {
  std::vector<int> out;
  for (const auto& s : split(list, ',')) {
    int n = std::stoi(s);
    if (n < 1) throw Error("thread counts must be positive");
    out.push_back(n);
  }
  return out;
}

int cmd_analyze(const std::string& file) {
  Program p = parse(read_file(file));
  Cfg cfg = propagate_scoping(build_cfg(p));
  std::cout << "region\tvariable\tpattern\tjustification\n";
  for (const auto& s : summarize(cfg))
    std::cout << s.region << '\t' << s.variable << '\t' << to_string(s.pattern) << '\t' << s.justification << '\n';
  return 0;
}

struct DiffArgs {
  std::string file;
  std::string mode = "adjoint";
  std::string output;
  std::uint64_t budget = kDefaultPrivatizationBudget;
  std::vector<std::string> sizes;
  bool save_all = false;
  bool report = false;
};

int cmd_diff(const DiffArgs& a) {
  Program p = parse(read_file(a.file));
  Program out;
  if (a.mode == "tangent") {
    out = differentiate_tangent(p);
  } else {
    AdjointOptions o;
    o.privatization_budget = a.budget;
    o.save_all = a.save_all;
    for (const auto& s : a.sizes) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw Error("--size expects name=value, got '" + s + "'");
      o.size_hints[s.substr(0, eq)] = std::stoll(s.substr(eq + 1));
    }
    AdjointResult r = differentiate_adjoint_report(p, o);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    if (a.report) {
      for (const auto& region : r.scoping)
        for (const auto& v : region.variables)
          std::cerr << "region " << region.region << " line " << region.line << ": " << v.variable << " "
                    << to_string(v.primal_scope) << " -> " << to_string(v.adjoint) << " (" << to_string(v.source)
                    << ")\n";
    }
    out = std::move(r.program);
  }
  std::string text = emit(out);
  if (a.output.empty() || a.output == "-") {
    std::cout << text;
  } else {
    std::ofstream f(a.output);
    if (!f) throw Error("cannot write '" + a.output + "'");
    f << text;
  }
  return 0;
}

struct RunArgs {
  std::string file;
  int threads = 0;
  std::string schedule;
  std::int64_t chunk = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  bool no_omp = false;
};

int cmd_run(const RunArgs& a) {
  Program p = parse(read_file(a.file), !a.no_omp);
  Bindings in;
  for (const auto& arg : a.inputs) bind_arg(in, p, arg);
  ExecOptions o;
  o.nthreads = a.threads > 0 ? a.threads : default_thread_count(1);
  if (!a.schedule.empty()) {
    Schedule s;
    s.kind = a.schedule == "static" ? ScheduleKind::Static : ScheduleKind::Dynamic;
    if (a.chunk > 0) s.chunk = a.chunk;
    o.schedule_override = s;
  } else if (a.chunk > 0) {
    o.dynamic_chunk = a.chunk;
  }
  ExecResult r = execute(p, in, o);
  std::vector<std::string> names = a.outputs;
  if (names.empty()) names = p.params;
  write_table(std::cout, r.values, names);
  return 0;
}

struct VerifyArgs {
  std::string fixture;
  std::string threads = "1,2,4,8";
  std::string variant;
  std::uint64_t seed = 1;
  bool tsv = false;
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<const FixtureSpec*> specs;
  if (a.fixture.empty()) {
    for (const auto& s : fixture_specs()) specs.push_back(&s);
  } else {
    specs.push_back(&fixture_spec(a.fixture));
  }
  std::optional<Variant> only;
  if (!a.variant.empty()) {
    only = parse_variant(a.variant);
    if (!only) throw Error("unknown variant '" + a.variant + "'");
  }
  std::vector<int> threads = parse_threads(a.threads);
  std::vector<CheckReport> reports;
  for (const auto* s : specs) {
    for (int t : threads) {
      reports.push_back(check_tangent(*s, t, a.seed));
      for (Variant v : s->variants) {
        if (only && v != *only) continue;
        auto r = check_adjoint(*s, t, v, a.seed);
        reports.insert(reports.end(), r.begin(), r.end());
      }
    }
    if (only && std::find(s->variants.begin(), s->variants.end(), *only) == s->variants.end() && !a.fixture.empty())
      throw Error("variant " + a.variant + " does not apply to fixture '" + s->name + "'");
  }
  bool ok = true;
  if (a.tsv) std::cout << "fixture\tcheck\tvariant\tthreads\tseed\terror\ttolerance\tresult\tdetail\n";
  for (const auto& r : reports) {
    ok = ok && r.pass;
    if (a.tsv) {
      std::cout << r.fixture << '\t' << r.check << '\t' << (r.variant.empty() ? "-" : r.variant) << '\t' << r.threads
                << '\t' << r.seed << '\t' << std::setprecision(3) << r.error << '\t' << r.tolerance << '\t'
                << (r.pass ? "pass" : "FAIL") << '\t' << r.detail << '\n';
    } else {
      std::cout << (r.pass ? "pass " : "FAIL ") << r.fixture << " " << r.check
                << (r.variant.empty() ? "" : " [" + r.variant + "]") << " threads=" << r.threads
                << " error=" << std::setprecision(3) << r.error << " (tol " << r.tolerance << ")"
                << (r.detail.empty() ? "" : "  " + r.detail) << '\n';
    }
  }
  if (!a.tsv) {
    auto failed = std::count_if(reports.begin(), reports.end(), [](const CheckReport& r) { return !r.pass; });
    std::cout << reports.size() << " checks, " << failed << " failed\n";
  }
  return ok ? 0 : 1;
}

int cmd_bench(const std::string& fixture, const std::string& threads, int repeats) {
  std::vector<const FixtureSpec*> specs;
  if (fixture.empty()) {
    for (const auto& s : fixture_specs()) specs.push_back(&s);
  } else {
    specs.push_back(&fixture_spec(fixture));
  }
  std::cout << "fixture\tmode\tthreads\tseconds\tspeedup\n";
  for (const auto* s : specs)
    for (const auto& r : bench(*s, parse_threads(threads), repeats))
      std::cout << r.fixture << '\t' << r.mode << '\t' << (r.threads == 0 ? "serial" : std::to_string(r.threads))
                << '\t' << std::fixed << std::setprecision(6) << r.seconds << '\t' << std::setprecision(3)
                << r.speedup << std::defaultfloat << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source-to-source differentiation of OpenMP-annotated loop programs"};
  app.require_subcommand(1);

  std::string analyze_file;
  auto* analyze = app.add_subcommand("analyze", "Print the shared-variable access summary as TSV");
  analyze->add_option("file", analyze_file, "Program (.adsl)")->required();

  DiffArgs diff_args;
  auto* diff = app.add_subcommand("diff", "Differentiate a program");
  diff->add_option("file", diff_args.file, "Program (.adsl)")->required();
  diff->add_option("--mode", diff_args.mode, "tangent or adjoint")->check(CLI::IsMember({"tangent", "adjoint"}));
  diff->add_option("-o,--output", diff_args.output, "Output file (default stdout)");
  diff->add_option("--privatization-budget", diff_args.budget, "Bytes a private adjoint copy may use");
  diff->add_option("--size", diff_args.sizes, "Integer parameter value used to size arrays (name=value)");
  diff->add_flag("--save-all", diff_args.save_all, "Push every overwritten value");
  diff->add_flag("--report", diff_args.report, "Print adjoint scoping decisions to stderr");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Execute a program");
  run->add_option("file", run_args.file, "Program (.adsl)")->required();
  run->add_option("--threads", run_args.threads, "Thread count (default ADOMP_NUM_THREADS or 1)");
  run->add_option("--schedule", run_args.schedule, "Override every loop schedule")
      ->check(CLI::IsMember({"static", "dynamic"}));
  run->add_option("--chunk", run_args.chunk, "Chunk size");
  run->add_option("--in", run_args.inputs, "name=value, name=v1,v2,..., name=@column.tsv or @table.tsv");
  run->add_option("--out", run_args.outputs, "Parameter to print (default all)");
  run->add_flag("--no-omp", run_args.no_omp, "Treat parallel directives as comments");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Check derivatives of the built-in fixtures");
  verify->add_option("--fixture", verify_args.fixture, "Fixture name (default all)");
  verify->add_option("--threads", verify_args.threads, "Comma-separated thread counts");
  verify->add_option("--variant", verify_args.variant, "atomic, reduction or override_shared");
  verify->add_option("--seed", verify_args.seed, "Input seed");
  verify->add_flag("--tsv", verify_args.tsv, "Machine-readable output");

  std::string bench_fixture, bench_threads = "1,2,4";
  int bench_repeats = 3;
  auto* bench_cmd = app.add_subcommand("bench", "Time primal, tangent and adjoint runs (informational)");
  bench_cmd->add_option("--fixture", bench_fixture, "Fixture name (default all)");
  bench_cmd->add_option("--threads", bench_threads, "Comma-separated thread counts");
  bench_cmd->add_option("--repeats", bench_repeats, "Best of N runs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) return cmd_analyze(analyze_file);
    if (*diff) return cmd_diff(diff_args);
    if (*run) return cmd_run(run_args);
    if (*verify) return cmd_verify(verify_args);
    if (*bench_cmd) return cmd_bench(bench_fixture, bench_threads, bench_repeats);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
