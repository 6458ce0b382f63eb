#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ivm/classify.hpp"
#include "ivm/delta_engine.hpp"
#include "ivm/error.hpp"
#include "ivm/harness.hpp"
#include "ivm/ivme.hpp"
#include "ivm/stream.hpp"
#include "ivm/view_tree.hpp"

namespace {

using namespace ivm;

void print_verdict(const std::string& label, const Verdict& v) {
  std::cout << std::left << std::setw(34) << (label + ":") << (v.ok ? "yes" : "no");
  if (!v.detail.empty()) std::cout << "  (" << v.detail << ")";
  std::cout << "\n";
}

int cmd_classify(const std::string& query_path) {
  Query q = parse_query_file(query_path);
  std::cout << q.str() << "\n\n";
  print_verdict("hierarchical", is_hierarchical(q));
  print_verdict("q-hierarchical", is_q_hierarchical(q));
  if (!q.fds.empty()) {
    Query red = sigma_reduct(q);
    print_verdict("q-hierarchical after fd closure", is_q_hierarchical(red));
  }
  if (!q.input_vars.empty()) print_verdict("tractable access pattern", is_tractable_cqap(q));
  print_verdict("static-dynamic plan", check_static_dynamic(q));
  std::cout << "\n";
  for (EngineKind k : {EngineKind::DeltaEager, EngineKind::DeltaLazy, EngineKind::ViewTree,
                       EngineKind::IvmEps})
    print_verdict("engine " + engine_name(k), engine_accepts(k, q));
  return 0;
}

Database load_db_or_empty(const std::string& path) {
  if (path.empty()) return Database{};
  return load_database_file(path);
}

int cmd_explain(const std::string& query_path, const std::string& db_path,
                std::string engine) {
  Query q = parse_query_file(query_path);
  Database db = load_db_or_empty(db_path);
  if (engine.empty()) {
    for (const char* cand : {"viewtree", "delta-eager", "ivm-eps"})
      if (engine_accepts(engine_kind(cand), q)) {
        engine = cand;
        break;
      }
    if (engine.empty()) engine = "delta-lazy";
  }
  EngineKind k = engine_kind(engine);
  Verdict v = engine_accepts(k, q);
  if (!v.ok) {
    std::cerr << "engine " << engine << " rejects this query: " << v.detail << "\n";
    return 2;
  }
  switch (k) {
    case EngineKind::DeltaEager:
      std::cout << EagerEngine(q, db).explain();
      break;
    case EngineKind::ViewTree:
      std::cout << ViewTreeEngine(q, db).explain();
      break;
    case EngineKind::IvmEps:
      std::cout << IvmEpsEngine(db).explain();
      break;
    case EngineKind::DeltaLazy:
      std::cout << "deferred maintenance: updates land in the base relations; the output\n"
                   "is recomputed on demand and cached until the next update.\n";
      break;
  }
  return 0;
}

int cmd_run(const std::string& query_path, const std::string& stream_path,
            const std::string& db_path, std::vector<std::string> engines, double eps,
            const std::string& report_path, bool no_oracle, bool parallel) {
  Query q = parse_query_file(query_path);
  Database db = load_db_or_empty(db_path);
  Stream s = parse_stream_file(stream_path);

  std::vector<EngineKind> kinds;
  if (engines.empty()) {
    for (EngineKind k : {EngineKind::DeltaEager, EngineKind::DeltaLazy, EngineKind::ViewTree,
                         EngineKind::IvmEps})
      if (engine_accepts(k, q)) kinds.push_back(k);
  } else {
    for (const auto& name : engines) {
      EngineKind k = engine_kind(name);
      Verdict v = engine_accepts(k, q);
      if (!v.ok) {
        std::cerr << "engine " << name << " rejects this query: " << v.detail << "\n";
        return 2;
      }
      kinds.push_back(k);
    }
  }
  if (kinds.empty()) {
    std::cerr << "no engine accepts this query\n";
    return 2;
  }

  RaceOptions opt;
  opt.eps = eps;
  opt.check_oracle = !no_oracle;
  opt.parallel = parallel;
  std::vector<RunReport> reports = run_race(q, db, s, kinds, opt);

  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) {
      std::cerr << "cannot write " << report_path << "\n";
      return 2;
    }
    out << "engine,record_index,op,probes,result\n";
    for (const auto& r : reports) {
      std::ostringstream one;
      write_trace_csv(r, one);
      std::string text = one.str();
      out << text.substr(text.find('\n') + 1);  // drop the repeated header
    }
  }

  write_summary_csv(reports, std::cout);
  bool all_ok = true;
  for (const auto& r : reports) {
    if (!r.ok) std::cerr << r.engine << " FAILED: " << r.failure << "\n";
    all_ok = all_ok && r.ok;
  }
  return all_ok ? 0 : 1;
}

int write_stream_out(const Stream& s, const std::string& out_path,
                     const std::vector<std::string>& header_comments) {
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "cannot write " << out_path << "\n";
      return 2;
    }
    out = &file;
  }
  for (const auto& c : header_comments) *out << "# " << c << "\n";
  save_stream(s, *out);
  return 0;
}

int cmd_triangle(const std::string& stream_path, const std::string& db_path, double eps,
                 const std::string& report_path) {
  Database db = load_db_or_empty(db_path);
  Stream s = parse_stream_file(stream_path);
  std::vector<TriangleRow> rows = run_triangle(db, s, eps);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) {
      std::cerr << "cannot write " << report_path << "\n";
      return 2;
    }
    write_triangle_csv(rows, out);
    std::cout << "applied " << s.update_count() << " updates, final count "
              << (rows.empty() ? 0 : rows.back().count) << "\n";
  } else {
    write_triangle_csv(rows, std::cout);
  }
  return 0;
}

std::vector<std::pair<std::string, std::size_t>> parse_rels(
    const std::vector<std::string>& specs) {
  std::vector<std::pair<std::string, std::size_t>> rels;
  for (const auto& spec : specs) {
    auto colon = spec.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size())
      throw Error("bad relation spec '" + spec + "' (expected name:arity)");
    rels.push_back({spec.substr(0, colon), std::stoul(spec.substr(colon + 1))});
  }
  return rels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incremental view maintenance over ring relations"};
  app.require_subcommand(1);

  std::string query_path, stream_path, db_path, report_path, out_path, engine_one;
  std::vector<std::string> engines, rel_specs;
  double eps = 0.5, skew = 1.0;
  bool no_oracle = false, parallel = false, insert_only = false;
  std::size_t length = 100, domain = 0, interval = 0, n = 8, flips = 64;
  std::uint64_t seed = 1;

  auto* classify = app.add_subcommand("classify", "report the query's maintenance class");
  classify->add_option("query", query_path, "query file")->required();

  auto* explain = app.add_subcommand("explain", "print an engine's maintenance plan");
  explain->add_option("query", query_path, "query file")->required();
  explain->add_option("--db", db_path, "initial database file");
  explain->add_option("--engine", engine_one, "delta-eager|delta-lazy|viewtree|ivm-eps");

  auto* run = app.add_subcommand("run", "replay a stream through one or more engines");
  run->add_option("--query", query_path, "query file")->required();
  run->add_option("--stream", stream_path, "update stream file")->required();
  run->add_option("--db", db_path, "initial database file");
  run->add_option("--engine", engines, "engine to run (repeatable; default: all that accept)");
  run->add_option("--eps", eps, "threshold exponent for ivm-eps");
  run->add_option("--report", report_path, "per-record trace CSV");
  run->add_flag("--no-oracle", no_oracle, "skip recompute diffing");
  run->add_flag("--parallel", parallel, "race engines in separate threads");

  auto* gen = app.add_subcommand("gen", "generate a reproducible stream");
  gen->require_subcommand(1);
  auto* uniform = gen->add_subcommand("uniform", "uniform keys");
  auto* zipf = gen->add_subcommand("zipf", "rank-weighted keys");
  for (auto* g : {uniform, zipf}) {
    g->add_option("--rel", rel_specs, "relation as name:arity (repeatable)")->required();
    g->add_option("--length", length, "number of updates");
    g->add_option("--seed", seed, "rng seed");
    g->add_option("--domain", domain, "value pool size (default: length/4)");
    g->add_option("--enumerate-interval", interval, "emit enumerate every k updates");
    g->add_flag("--insert-only", insert_only, "no deletes");
    g->add_option("-o,--out", out_path, "output file (default: stdout)");
  }
  zipf->add_option("--skew", skew, "zipf exponent s");
  auto* oumv = gen->add_subcommand("oumv", "matrix-vector detection rounds");
  oumv->add_option("--n", n, "matrix dimension");
  oumv->add_option("--seed", seed, "rng seed");
  oumv->add_option("-o,--out", out_path, "output file (default: stdout)");
  auto* triskew = gen->add_subcommand("triskew", "skewed triangle flip workload");
  triskew->add_option("--n", n, "base data scale");
  triskew->add_option("--flips", flips, "edge flip pairs");
  triskew->add_option("--seed", seed, "rng seed");
  triskew->add_option("--db", db_path, "write the preloaded database here")->required();
  triskew->add_option("-o,--out", out_path, "output file (default: stdout)");

  auto* triangle = app.add_subcommand("triangle", "trace the partitioned triangle counter");
  triangle->add_option("--stream", stream_path, "update stream file")->required();
  triangle->add_option("--db", db_path, "initial database file");
  triangle->add_option("--eps", eps, "threshold exponent");
  triangle->add_option("--report", report_path, "trace CSV (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*classify) return cmd_classify(query_path);
    if (*explain) return cmd_explain(query_path, db_path, engine_one);
    if (*run)
      return cmd_run(query_path, stream_path, db_path, engines, eps, report_path, no_oracle,
                     parallel);
    if (*uniform || *zipf) {
      GenSpec spec;
      spec.relations = parse_rels(rel_specs);
      spec.length = length;
      spec.seed = seed;
      spec.zipf_s = *zipf ? skew : 0.0;
      spec.domain = domain;
      spec.insert_only = insert_only;
      spec.enumerate_interval = interval;
      return write_stream_out(gen_stream(spec), out_path, {});
    }
    if (*oumv) {
      OumvInstance inst = gen_oumv(n, seed);
      std::string bits;
      for (bool b : inst.truth) bits += b ? '1' : '0';
      return write_stream_out(inst.stream, out_path, {"round truth: " + bits});
    }
    if (*triskew) {
      TriskewInstance inst = gen_triskew(n, flips, seed);
      std::ofstream dbout(db_path);
      if (!dbout) {
        std::cerr << "cannot write " << db_path << "\n";
        return 2;
      }
      save_database(inst.db, dbout);
      return write_stream_out(inst.stream, out_path, {});
    }
    if (*triangle) return cmd_triangle(stream_path, db_path, eps, report_path);
  } catch (const ivm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
