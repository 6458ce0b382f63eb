#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ivm/classify.hpp"
#include "ivm/database.hpp"
#include "ivm/ivme.hpp"
#include "ivm/query.hpp"
#include "ivm/stream.hpp"

namespace ivm {

/// The maintenance strategies the harness can race on one stream.
enum class EngineKind { DeltaEager, DeltaLazy, ViewTree, IvmEps };

EngineKind engine_kind(const std::string& name);
std::string engine_name(EngineKind k);

/// Structural gate: can this strategy maintain this query at all? The
/// detail explains a rejection (or names the accepted shape).
Verdict engine_accepts(EngineKind k, const Query& q);

struct RecordTrace {
  std::string op;           // canonical record text
  std::uint64_t probes = 0;
  std::int64_t result = 0;  // tuples emitted / count / detect flag, 0 for updates
};

struct RunReport {
  std::string engine;
  bool ok = true;
  std::string failure;  // first oracle divergence or engine error, empty when ok
  std::vector<RecordTrace> trace;            // one row per stream record
  std::vector<std::uint64_t> update_probes;  // apply records only, in order
  std::uint64_t total_probes = 0;
  std::uint64_t max_update_probes = 0;
  std::uint64_t max_delay_probes = 0;  // worst probe gap between consecutive emissions
  double wall_seconds = 0.0;
  std::uint64_t checksum = 0;  // final output hash; 0 for access-pattern queries
};

struct RaceOptions {
  double eps = 0.5;          // ivm-eps threshold exponent
  bool check_oracle = true;  // diff every probe record against recompute
  bool parallel = false;     // race engines in separate threads on cloned inputs
};

/// Order-independent content hash of a relation (tuple spellings, payloads).
std::uint64_t relation_checksum(const Relation& r);

/// Replays the stream through one engine. Enumerate, count, detect and
/// access records are answered by the engine and, when check_oracle is on,
/// diffed against a from-scratch recompute over a shadow database. Engine
/// errors and divergences land in the report instead of throwing.
RunReport run_engine(EngineKind k, const Query& q, const Database& db, const Stream& s,
                     const RaceOptions& opt = {});

/// Runs each engine on the identical stream and collects the reports.
std::vector<RunReport> run_race(const Query& q, const Database& db, const Stream& s,
                                const std::vector<EngineKind>& engines,
                                const RaceOptions& opt = {});

/// Per-record rows: engine,record_index,op,probes,result
void write_trace_csv(const RunReport& r, std::ostream& out);
/// One row per engine:
/// engine,ok,total_probes,max_update_probes,max_delay_probes,wall_seconds,checksum,failure
void write_summary_csv(const std::vector<RunReport>& rs, std::ostream& out);

/// One row per stream record of a triangle-count run.
struct TriangleRow {
  std::size_t update_index = 0;  // position in the stream
  std::string op;
  std::uint64_t probes = 0;
  std::int64_t count = 0;
  std::array<IvmEpsEngine::PartSizes, 3> parts{};
};

std::vector<TriangleRow> run_triangle(const Database& db, const Stream& s, double eps);
/// Columns: update_index,op,probes,count,partition_sizes where the last is
/// R=light/heavy;S=light/heavy;T=light/heavy.
void write_triangle_csv(const std::vector<TriangleRow>& rows, std::ostream& out);

}  // namespace ivm
