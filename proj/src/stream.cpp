#include "ivm/stream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "ivm/error.hpp"
#include "ivm/text_util.hpp"

namespace ivm {

std::string StreamRecord::str() const {
  if (!raw.empty()) return raw;
  switch (kind) {
    case Kind::Apply:
      return update.str();
    case Kind::Enumerate:
      return "enumerate";
    case Kind::Count:
      return "count";
    case Kind::Detect:
      return "detect";
    case Kind::Access: {
      std::string s = "access(";
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (i) s += ",";
        s += spell(inputs.vals[i]);
      }
      return s + ")";
    }
  }
  return "";
}

std::size_t Stream::update_count() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.kind == StreamRecord::Kind::Apply ? 1 : 0;
  return n;
}

namespace {

std::int64_t parse_int(const std::string& text, const std::string& where) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size())
    throw StreamError(where + "bad multiplier '" + text + "'");
  return v;
}

}  // namespace

Stream parse_stream(std::istream& in) {
  Stream s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = strip_comment(line);
    if (body.empty()) continue;
    auto where = [&] { return "line " + std::to_string(lineno) + ": "; };
    StreamRecord rec;
    rec.raw = line;
    if (body == "enumerate") {
      rec.kind = StreamRecord::Kind::Enumerate;
    } else if (body == "count") {
      rec.kind = StreamRecord::Kind::Count;
    } else if (body == "detect") {
      rec.kind = StreamRecord::Kind::Detect;
    } else if (body.rfind("access", 0) == 0) {
      rec.kind = StreamRecord::Kind::Access;
      auto [name, parts] = parse_call(body, where());
      if (name != "access") throw StreamError(where() + "unknown record '" + body + "'");
      for (const auto& p : parts) rec.inputs.vals.push_back(intern(p));
    } else if (body[0] == '+' || body[0] == '-') {
      rec.kind = StreamRecord::Kind::Apply;
      std::int64_t sign = body[0] == '+' ? 1 : -1;
      std::string rest = trim(body.substr(1));
      std::int64_t mult = 1;
      auto star = rest.rfind('*');
      if (star != std::string::npos && rest.find(')', star) == std::string::npos) {
        mult = parse_int(trim(rest.substr(star + 1)), where());
        rest = trim(rest.substr(0, star));
      }
      if (mult <= 0) throw StreamError(where() + "multiplier must be positive");
      auto [name, parts] = parse_call(rest, where());
      rec.update.rel = name;
      for (const auto& p : parts) rec.update.tuple.vals.push_back(intern(p));
      rec.update.payload = sign * mult;
    } else {
      throw StreamError(where() + "unrecognized record '" + body + "'");
    }
    s.records.push_back(std::move(rec));
  }
  return s;
}

Stream parse_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StreamError("cannot open stream file " + path);
  return parse_stream(in);
}

void save_stream(const Stream& s, std::ostream& out) {
  for (const auto& r : s.records) out << r.str() << "\n";
}

Stream gen_stream(const GenSpec& spec) {
  if (spec.relations.empty()) throw StreamError("generator needs at least one relation");
  std::mt19937_64 rng(spec.seed);
  std::size_t domain = spec.domain ? spec.domain : std::max<std::size_t>(4, spec.length / 4);

  // Rank weights 1/(k+1)^s; s = 0 degenerates to uniform.
  std::vector<double> cum(domain);
  double total = 0;
  for (std::size_t k = 0; k < domain; ++k) {
    total += 1.0 / std::pow(static_cast<double>(k + 1), spec.zipf_s);
    cum[k] = total;
  }
  auto draw_value = [&] {
    double x = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t k = std::lower_bound(cum.begin(), cum.end(), x) - cum.begin();
    if (k >= domain) k = domain - 1;
    return intern("v" + std::to_string(k));
  };

  Stream s;
  std::vector<std::pair<std::size_t, Tuple>> live;  // one entry per insert
  for (std::size_t i = 0; i < spec.length; ++i) {
    StreamRecord rec;
    bool insert = spec.insert_only || live.empty() ||
                  std::uniform_int_distribution<int>(0, 1)(rng) == 0;
    if (insert) {
      std::size_t r =
          std::uniform_int_distribution<std::size_t>(0, spec.relations.size() - 1)(rng);
      Tuple t;
      for (std::size_t c = 0; c < spec.relations[r].second; ++c) t.vals.push_back(draw_value());
      live.push_back({r, t});
      rec.update = Update{spec.relations[r].first, t, 1};
    } else {
      std::size_t pick = std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng);
      rec.update = Update{spec.relations[live[pick].first].first, live[pick].second, -1};
      live[pick] = live.back();
      live.pop_back();
    }
    s.records.push_back(std::move(rec));
    if (spec.enumerate_interval && (i + 1) % spec.enumerate_interval == 0)
      s.records.push_back(StreamRecord{StreamRecord::Kind::Enumerate, {}, {}, ""});
  }
  return s;
}

OumvInstance gen_oumv(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto coin = [&] { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; };
  std::vector<std::vector<bool>> m(n, std::vector<bool>(n));
  OumvInstance inst;
  Value a = intern("a");
  std::vector<Value> idx;
  for (std::size_t i = 0; i < n; ++i) idx.push_back(intern(std::to_string(i + 1)));

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      m[i][j] = coin();
      if (m[i][j])
        inst.stream.records.push_back(
            {StreamRecord::Kind::Apply, Update{"S", Tuple{{idx[i], idx[j]}}, 1}, {}, ""});
    }

  std::vector<Tuple> live_r, live_t;
  for (std::size_t round = 0; round < n; ++round) {
    for (const Tuple& t : live_r)
      inst.stream.records.push_back({StreamRecord::Kind::Apply, Update{"R", t, -1}, {}, ""});
    for (const Tuple& t : live_t)
      inst.stream.records.push_back({StreamRecord::Kind::Apply, Update{"T", t, -1}, {}, ""});
    live_r.clear();
    live_t.clear();
    std::vector<bool> u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = coin();
    for (std::size_t j = 0; j < n; ++j) v[j] = coin();
    for (std::size_t i = 0; i < n; ++i)
      if (u[i]) {
        live_r.push_back(Tuple{{a, idx[i]}});
        inst.stream.records.push_back(
            {StreamRecord::Kind::Apply, Update{"R", live_r.back(), 1}, {}, ""});
      }
    for (std::size_t j = 0; j < n; ++j)
      if (v[j]) {
        live_t.push_back(Tuple{{idx[j], a}});
        inst.stream.records.push_back(
            {StreamRecord::Kind::Apply, Update{"T", live_t.back(), 1}, {}, ""});
      }
    inst.stream.records.push_back(StreamRecord{StreamRecord::Kind::Detect, {}, {}, ""});
    bool hit = false;
    for (std::size_t i = 0; i < n && !hit; ++i)
      for (std::size_t j = 0; j < n && !hit; ++j) hit = u[i] && m[i][j] && v[j];
    inst.truth.push_back(hit);
  }
  return inst;
}

TriskewInstance gen_triskew(std::size_t n, std::size_t flips, std::uint64_t seed) {
  TriskewInstance inst;
  inst.db.declare("R", Schema({"A", "B"}));
  inst.db.declare("S", Schema({"B", "C"}));
  inst.db.declare("T", Schema({"C", "A"}));

  std::size_t hub_deg = std::max<std::size_t>(1, n / 2);
  auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  std::size_t grid_deg = std::max<std::size_t>(1, 2 * root);
  std::size_t grid_keys = std::max<std::size_t>(1, (n / 2) / grid_deg);

  Value hub = intern("hub");
  Relation& s = inst.db.get("S");
  for (std::size_t k = 0; k < hub_deg; ++k)
    s.apply(Tuple{{hub, intern("c" + std::to_string(k))}}, 1);
  Relation& t = inst.db.get("T");
  for (std::size_t j = 0; j < grid_keys; ++j)
    for (std::size_t i = 0; i < grid_deg; ++i)
      t.apply(Tuple{{intern("c" + std::to_string(j)), intern("a" + std::to_string(i))}}, 1);

  std::mt19937_64 rng(seed);
  for (std::size_t f = 0; f < flips; ++f) {
    std::size_t i = std::uniform_int_distribution<std::size_t>(0, grid_deg - 1)(rng);
    Tuple edge{{intern("a" + std::to_string(i)), hub}};
    inst.stream.records.push_back({StreamRecord::Kind::Apply, Update{"R", edge, 1}, {}, ""});
    inst.stream.records.push_back({StreamRecord::Kind::Apply, Update{"R", edge, -1}, {}, ""});
  }
  return inst;
}

}  // namespace ivm
