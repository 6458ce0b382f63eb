#include "ivm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <memory>
#include <ostream>
#include <thread>

#include "ivm/delta_engine.hpp"
#include "ivm/error.hpp"
#include "ivm/probes.hpp"
#include "ivm/view_tree.hpp"

namespace ivm {

EngineKind engine_kind(const std::string& name) {
  if (name == "delta-eager") return EngineKind::DeltaEager;
  if (name == "delta-lazy") return EngineKind::DeltaLazy;
  if (name == "viewtree") return EngineKind::ViewTree;
  if (name == "ivm-eps") return EngineKind::IvmEps;
  throw Error("unknown engine '" + name +
              "' (expected delta-eager, delta-lazy, viewtree, or ivm-eps)");
}

std::string engine_name(EngineKind k) {
  switch (k) {
    case EngineKind::DeltaEager:
      return "delta-eager";
    case EngineKind::DeltaLazy:
      return "delta-lazy";
    case EngineKind::ViewTree:
      return "viewtree";
    case EngineKind::IvmEps:
      return "ivm-eps";
  }
  return "?";
}

namespace {

Database gate_db(const Query& q) {
  Database db;
  for (const auto& a : q.atoms)
    if (!db.has(a.rel)) db.declare(a.rel, a.schema);
  return db;
}

Verdict triangle_shape(const Query& q) {
  Verdict no{false, "needs the exact triangle-count shape R(A,B), S(B,C), T(C,A) with no head"};
  if (!q.output_vars.empty() || !q.input_vars.empty()) return no;
  if (q.atoms.size() != 3) return no;
  const Atom* r = nullptr;
  const Atom* s = nullptr;
  const Atom* t = nullptr;
  for (const auto& a : q.atoms) {
    if (a.schema.arity() != 2) return no;
    if (a.rel == "R") r = &a;
    if (a.rel == "S") s = &a;
    if (a.rel == "T") t = &a;
  }
  if (!r || !s || !t) return no;
  const auto& a = r->schema.vars[0];
  const auto& b = r->schema.vars[1];
  const auto& c = s->schema.vars[1];
  if (s->schema.vars[0] != b || t->schema.vars[0] != c || t->schema.vars[1] != a) return no;
  if (a == b || b == c || a == c) return no;
  for (const auto& v : {a, b, c})
    if (!q.lifts.trivial(v)) return {false, "the triangle counter has no lifting hooks"};
  return {true, "triangle count"};
}

}  // namespace

Verdict engine_accepts(EngineKind k, const Query& q) {
  switch (k) {
    case EngineKind::DeltaEager:
    case EngineKind::DeltaLazy:
      try {
        EagerEngine probe(q, gate_db(q));
        return {true, "first-order deltas apply to any such query"};
      } catch (const Error& e) {
        return {false, e.what()};
      }
    case EngineKind::ViewTree:
      try {
        ViewTreeEngine probe(q, gate_db(q));
        return {true, "view tree built"};
      } catch (const Error& e) {
        return {false, e.what()};
      }
    case EngineKind::IvmEps:
      return triangle_shape(q);
  }
  return {false, "unknown engine"};
}

std::uint64_t relation_checksum(const Relation& r) {
  std::vector<std::string> lines;
  for (auto c = r.entries(); c.valid(); c.advance())
    lines.push_back(c.key().str() + "|" + std::to_string(c.payload()));
  std::sort(lines.begin(), lines.end());
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& l : lines)
    for (unsigned char ch : l) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  return h;
}

namespace {

using Emit = std::function<void(const Tuple&, std::int64_t)>;

/// One face over the four strategies. Enumeration goes through a callback
/// so the runner can clock probe gaps between consecutive emissions.
struct Adapter {
  virtual ~Adapter() = default;
  virtual void apply(const Update& u) = 0;
  virtual void enumerate(const Emit& emit) = 0;
  virtual Relation access(const Tuple& inputs) = 0;
  virtual std::int64_t count_value() = 0;
  virtual bool detect() = 0;
};

std::int64_t generic_count(const Relation& out, bool nullary) {
  if (nullary) return out.contains(Tuple{}) ? out.at(Tuple{}) : 0;
  return static_cast<std::int64_t>(out.size());
}

/// Filters a materialized output on the input columns and projects the
/// outputs. The flat head lays outputs first, inputs after.
Relation access_by_filter(const Relation& out, const Query& q, const Tuple& inputs) {
  if (inputs.size() != q.input_vars.size())
    throw SchemaError("access tuple arity " + std::to_string(inputs.size()) + " does not match " +
                      std::to_string(q.input_vars.size()) + " input variables");
  std::size_t nout = q.output_vars.size();
  Relation got{Schema(q.output_vars)};
  for (auto c = out.entries(); c.valid(); c.advance()) {
    const Tuple& t = c.key();
    bool match = true;
    for (std::size_t i = 0; i < inputs.size() && match; ++i)
      match = t.vals[nout + i] == inputs.vals[i];
    if (!match) continue;
    Tuple proj;
    proj.vals.assign(t.vals.begin(), t.vals.begin() + nout);
    got.apply(proj, c.payload());
  }
  return got;
}

struct EagerAdapter : Adapter {
  EagerEngine e;
  bool nullary;
  EagerAdapter(const Query& q, const Database& db) : e(q, db), nullary(q.free_vars().empty()) {}
  void apply(const Update& u) override { e.apply(u); }
  void enumerate(const Emit& emit) override {
    for (auto c = e.output().entries(); c.valid(); c.advance()) emit(c.key(), c.payload());
  }
  Relation access(const Tuple& inputs) override {
    return access_by_filter(e.output(), e.query(), inputs);
  }
  std::int64_t count_value() override { return generic_count(e.output(), nullary); }
  bool detect() override { return !e.output().empty(); }
};

struct LazyAdapter : Adapter {
  LazyEngine e;
  bool nullary;
  LazyAdapter(const Query& q, const Database& db) : e(q, db), nullary(q.free_vars().empty()) {}
  void apply(const Update& u) override { e.apply(u); }
  void enumerate(const Emit& emit) override {
    for (auto c = e.output().entries(); c.valid(); c.advance()) emit(c.key(), c.payload());
  }
  Relation access(const Tuple& inputs) override {
    return access_by_filter(e.output(), e.query(), inputs);
  }
  std::int64_t count_value() override { return generic_count(e.output(), nullary); }
  bool detect() override { return !e.output().empty(); }
};

struct TreeAdapter : Adapter {
  ViewTreeEngine e;
  bool nullary;
  TreeAdapter(const Query& q, const Database& db) : e(q, db), nullary(q.free_vars().empty()) {}
  void apply(const Update& u) override { e.apply(u); }
  void enumerate(const Emit& emit) override { e.enumerate(emit); }
  Relation access(const Tuple& inputs) override { return e.output_at(inputs); }
  std::int64_t count_value() override { return generic_count(e.output(), nullary); }
  bool detect() override { return !e.output().empty(); }
};

struct IvmeAdapter : Adapter {
  IvmEpsEngine e;
  IvmeAdapter(const Database& db, double eps) : e(db, eps) {}
  void apply(const Update& u) override { e.apply(u); }
  void enumerate(const Emit& emit) override {
    if (e.count() != 0) emit(Tuple{}, e.count());
  }
  Relation access(const Tuple&) override {
    throw EngineError("the triangle counter answers no access patterns");
  }
  std::int64_t count_value() override { return e.count(); }
  bool detect() override { return e.detect(); }
};

std::unique_ptr<Adapter> make_adapter(EngineKind k, const Query& q, const Database& db,
                                      double eps) {
  switch (k) {
    case EngineKind::DeltaEager:
      return std::make_unique<EagerAdapter>(q, db);
    case EngineKind::DeltaLazy:
      return std::make_unique<LazyAdapter>(q, db);
    case EngineKind::ViewTree:
      return std::make_unique<TreeAdapter>(q, db);
    case EngineKind::IvmEps:
      return std::make_unique<IvmeAdapter>(db, eps);
  }
  throw Error("unknown engine");
}

/// First differing entry, or empty when the relations agree.
std::string first_diff(const Relation& want, const Relation& got) {
  for (auto c = want.entries(); c.valid(); c.advance()) {
    auto have = got.contains(c.key()) ? got.at(c.key()) : 0;
    if (have != c.payload())
      return "expected " + c.key().str() + " -> " + std::to_string(c.payload()) + ", engine has " +
             std::to_string(have);
  }
  for (auto c = got.entries(); c.valid(); c.advance())
    if (!want.contains(c.key()))
      return "engine emits " + c.key().str() + " -> " + std::to_string(c.payload()) +
             ", expected absent";
  return "";
}

}  // namespace

RunReport run_engine(EngineKind k, const Query& q, const Database& db, const Stream& s,
                     const RaceOptions& opt) {
  RunReport rep;
  rep.engine = engine_name(k);
  auto t0 = std::chrono::steady_clock::now();
  bool nullary = q.free_vars().empty();

  try {
    auto eng = make_adapter(k, q, db, opt.eps);

    // Shadow copy of the base data, advanced outside the probe scopes, so
    // probe records can be diffed against a from-scratch answer.
    Database shadow = db;
    for (const auto& a : q.atoms)
      if (!shadow.has(a.rel)) shadow.declare(a.rel, a.schema);

    std::size_t rec_index = 0;
    for (const auto& rec : s.records) {
      RecordTrace row;
      row.op = rec.kind == StreamRecord::Kind::Apply ? rec.update.str() : rec.str();
      probes::Scope sc;
      switch (rec.kind) {
        case StreamRecord::Kind::Apply: {
          eng->apply(rec.update);
          row.probes = sc.elapsed();
          rep.update_probes.push_back(row.probes);
          rep.max_update_probes = std::max(rep.max_update_probes, row.probes);
          if (opt.check_oracle) {
            if (!shadow.has(rec.update.rel))
              shadow.declare(rec.update.rel,
                             Schema(std::vector<std::string>(rec.update.tuple.size(), "")));
            shadow.get(rec.update.rel).apply(rec.update.tuple, rec.update.payload);
          }
          break;
        }
        case StreamRecord::Kind::Enumerate: {
          Relation got{Schema(q.free_vars())};
          std::uint64_t last = probes::count();
          eng->enumerate([&](const Tuple& t, std::int64_t p) {
            std::uint64_t now = probes::count();
            rep.max_delay_probes = std::max(rep.max_delay_probes, now - last);
            last = now;
            got.apply(t, p);
            ++row.result;
          });
          rep.max_delay_probes = std::max(rep.max_delay_probes, probes::count() - last);
          row.probes = sc.elapsed();
          if (opt.check_oracle) {
            std::string d = first_diff(recompute(q, shadow), got);
            if (!d.empty()) throw EngineError("enumerate diverges: " + d);
          }
          break;
        }
        case StreamRecord::Kind::Count: {
          std::int64_t c = eng->count_value();
          row.probes = sc.elapsed();
          row.result = c;
          if (opt.check_oracle) {
            std::int64_t want = generic_count(recompute(q, shadow), nullary);
            if (c != want)
              throw EngineError("count diverges: expected " + std::to_string(want) +
                                ", engine says " + std::to_string(c));
          }
          break;
        }
        case StreamRecord::Kind::Detect: {
          bool hit = eng->detect();
          row.probes = sc.elapsed();
          row.result = hit ? 1 : 0;
          if (opt.check_oracle) {
            bool want = !recompute(q, shadow).empty();
            if (hit != want)
              throw EngineError(std::string("detect diverges: expected ") +
                                (want ? "true" : "false"));
          }
          break;
        }
        case StreamRecord::Kind::Access: {
          Relation got = eng->access(rec.inputs);
          row.probes = sc.elapsed();
          row.result = static_cast<std::int64_t>(got.size());
          if (opt.check_oracle) {
            Relation want = access_by_filter(recompute(q, shadow), q, rec.inputs);
            std::string d = first_diff(want, got);
            if (!d.empty()) throw EngineError(rec.str() + " diverges: " + d);
          }
          break;
        }
      }
      rep.total_probes += row.probes;
      rep.trace.push_back(std::move(row));
      ++rec_index;
    }

    if (q.input_vars.empty()) {
      Relation fin{Schema(q.free_vars())};
      eng->enumerate([&](const Tuple& t, std::int64_t p) { fin.apply(t, p); });
      rep.checksum = relation_checksum(fin);
    }
  } catch (const Error& e) {
    rep.ok = false;
    rep.failure = e.what();
  }

  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::vector<RunReport> run_race(const Query& q, const Database& db, const Stream& s,
                                const std::vector<EngineKind>& engines, const RaceOptions& opt) {
  std::vector<RunReport> reports(engines.size());
  if (!opt.parallel) {
    for (std::size_t i = 0; i < engines.size(); ++i)
      reports[i] = run_engine(engines[i], q, db, s, opt);
    return reports;
  }
  std::vector<std::thread> threads;
  threads.reserve(engines.size());
  for (std::size_t i = 0; i < engines.size(); ++i)
    threads.emplace_back([&, i, q, db, s] { reports[i] = run_engine(engines[i], q, db, s, opt); });
  for (auto& t : threads) t.join();
  return reports;
}

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_trace_csv(const RunReport& r, std::ostream& out) {
  out << "engine,record_index,op,probes,result\n";
  for (std::size_t i = 0; i < r.trace.size(); ++i)
    out << r.engine << "," << i << "," << csv_quote(r.trace[i].op) << "," << r.trace[i].probes
        << "," << r.trace[i].result << "\n";
}

void write_summary_csv(const std::vector<RunReport>& rs, std::ostream& out) {
  out << "engine,ok,total_probes,max_update_probes,max_delay_probes,wall_seconds,checksum,"
         "failure\n";
  for (const auto& r : rs)
    out << r.engine << "," << (r.ok ? 1 : 0) << "," << r.total_probes << ","
        << r.max_update_probes << "," << r.max_delay_probes << "," << r.wall_seconds << ","
        << r.checksum << "," << csv_quote(r.failure) << "\n";
}

std::vector<TriangleRow> run_triangle(const Database& db, const Stream& s, double eps) {
  IvmEpsEngine e(db, eps);
  std::vector<TriangleRow> rows;
  std::size_t idx = 0;
  for (const auto& rec : s.records) {
    TriangleRow row;
    row.update_index = idx++;
    row.op = rec.kind == StreamRecord::Kind::Apply ? rec.update.str() : rec.str();
    probes::Scope sc;
    switch (rec.kind) {
      case StreamRecord::Kind::Apply:
        e.apply(rec.update);
        break;
      case StreamRecord::Kind::Detect:
        e.detect();
        break;
      case StreamRecord::Kind::Access:
        throw EngineError("the triangle counter answers no access patterns");
      default:
        e.count();
        break;
    }
    row.probes = sc.elapsed();
    row.count = e.count();
    row.parts = e.partition_sizes();
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_triangle_csv(const std::vector<TriangleRow>& rows, std::ostream& out) {
  static const char* names[3] = {"R", "S", "T"};
  out << "update_index,op,probes,count,partition_sizes\n";
  for (const auto& r : rows) {
    out << r.update_index << "," << csv_quote(r.op) << "," << r.probes << "," << r.count << ",";
    std::string parts;
    for (int i = 0; i < 3; ++i) {
      if (i) parts += ";";
      parts += std::string(names[i]) + "=" + std::to_string(r.parts[i].light) + "/" +
               std::to_string(r.parts[i].heavy);
    }
    out << parts << "\n";
  }
}

}  // namespace ivm
