#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ivm/database.hpp"
#include "ivm/update.hpp"

namespace ivm {

/// One line of an update stream.
struct StreamRecord {
  enum class Kind { Apply, Enumerate, Count, Detect, Access };
  Kind kind = Kind::Apply;
  Update update;  // Apply only
  Tuple inputs;   // Access only
  std::string raw;  // the line as read, echoed bit for bit in replay logs

  std::string str() const;
};

struct Stream {
  std::vector<StreamRecord> records;

  std::size_t update_count() const;
};

/// One record per line:
///   + R(a1,b1)        insert, multiplicity 1
///   - R(a1,b1) * 2    delete, multiplicity 2
///   enumerate | count | detect
///   access(b1)        outputs under one input binding
/// Blank lines and # comments are skipped.
Stream parse_stream(std::istream& in);
Stream parse_stream_file(const std::string& path);
void save_stream(const Stream& s, std::ostream& out);

/// Reproducible random workload. Deletes pick live tuples only, so the
/// stream never drives a multiplicity negative.
struct GenSpec {
  std::vector<std::pair<std::string, std::size_t>> relations;  // name, arity
  std::size_t length = 0;
  std::uint64_t seed = 0;
  double zipf_s = 0.0;     // key skew; 0 draws values uniformly
  std::size_t domain = 0;  // distinct values per column; 0 picks from length
  bool insert_only = false;
  std::size_t enumerate_interval = 0;  // emit an enumerate every k updates
};
Stream gen_stream(const GenSpec& spec);

/// Matrix-vector rounds: S holds a random 0/1 matrix; each round replaces R
/// with a row vector u and T with a column vector v, then asks detect.
/// truth[r] is the direct u^T M v evaluation for round r.
struct OumvInstance {
  Stream stream;
  std::vector<bool> truth;
};
OumvInstance gen_oumv(std::size_t n, std::uint64_t seed);

/// Skewed triangle load: one hub key owns about half of S, T is a grid of
/// keys right at the heavy threshold for size n, and the stream flips R
/// tuples through the hub. Scanning the hub block costs about n/2 per
/// update; the skew-aware split caps the work near sqrt(n).
struct TriskewInstance {
  Database db;
  Stream stream;
};
TriskewInstance gen_triskew(std::size_t n, std::size_t flips, std::uint64_t seed);

}  // namespace ivm
