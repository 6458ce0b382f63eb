#include "ivm/ivme.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "ivm/error.hpp"
#include "ivm/ring.hpp"

namespace ivm {

namespace {

const char* kRel[3] = {"R", "S", "T"};

std::size_t threshold_for(std::size_t n, double eps) {
  if (n == 0) return 1;
  double p = std::pow(static_cast<double>(n), eps);
  auto t = static_cast<std::size_t>(std::ceil(p - 1e-9));
  return t == 0 ? 1 : t;
}

}  // namespace

IvmEpsEngine::IvmEpsEngine(const Database& db, double eps) : eps_(eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw Error("epsilon must be within [0, 1]");
  for (std::size_t i = 0; i < 3; ++i) {
    if (!db.has(kRel[i])) continue;  // an absent input starts empty
    const Relation& r = db.get(kRel[i]);
    if (r.schema().arity() != 2)
      throw SchemaError(std::string(kRel[i]) + " must be binary for the triangle count");
    for (auto c = r.entries(); c.valid(); c.advance())
      parts_[i].light.apply(c.key(), c.payload());
    views_[i] = Relation(Schema({"y", "x"}));
  }
  rebalance();
  count_ = recompute_count();
  version_ = 0;
}

std::size_t IvmEpsEngine::index_of(const std::string& rel) {
  for (std::size_t i = 0; i < 3; ++i)
    if (rel == kRel[i]) return i;
  throw EngineError("relation " + rel + " is not part of the triangle count");
}

std::size_t IvmEpsEngine::size() const {
  std::size_t n = 0;
  for (const Part& p : parts_) n += p.light.size() + p.heavy.size();
  return n;
}

std::size_t IvmEpsEngine::degree(std::size_t i, const Value& key) const {
  const Part& p = parts_[i];
  Tuple k{{key}};
  return p.light.bucket_size(p.light.ensure_index_positions({0}), k) +
         p.heavy.bucket_size(p.heavy.ensure_index_positions({0}), k);
}

bool IvmEpsEngine::is_heavy(std::size_t i, const Value& key) const {
  const Part& p = parts_[i];
  return p.heavy.bucket_size(p.heavy.ensure_index_positions({0}), Tuple{{key}}) > 0;
}

/// Applies p at t in the chosen partition of relation i and folds the
/// change into the one view that stores this partition as a factor.
void IvmEpsEngine::place(std::size_t i, bool heavy, const Tuple& t, std::int64_t p) {
  Part& part = parts_[i];
  (heavy ? part.heavy : part.light).apply(t, p);
  const Value& x = t.vals[0];
  const Value& y = t.vals[1];
  if (heavy) {
    // views_[(i+2)%3] = sum_z i_H(x, z) * light block of the next relation.
    Relation& view = views_[(i + 2) % 3];
    const Relation& nxt = parts_[(i + 1) % 3].light;
    auto idx = nxt.ensure_index_positions({0});
    for (auto c = nxt.probe(idx, Tuple{{y}}); c.valid(); c.advance())
      view.apply(Tuple{{x, c.key().vals[1]}}, Int64Ring::mul(p, c.payload()));
  } else {
    // views_[(i+1)%3] = sum_z prev_H(w, x) * i_L(x, y).
    Relation& view = views_[(i + 1) % 3];
    const Relation& prv = parts_[(i + 2) % 3].heavy;
    auto idx = prv.ensure_index_positions({1});
    for (auto c = prv.probe(idx, Tuple{{x}}); c.valid(); c.advance())
      view.apply(Tuple{{c.key().vals[0], y}}, Int64Ring::mul(c.payload(), p));
  }
}

void IvmEpsEngine::migrate(std::size_t i, const Value& key, bool to_heavy) {
  Part& part = parts_[i];
  Relation& src = to_heavy ? part.light : part.heavy;
  std::vector<std::pair<Tuple, std::int64_t>> moving;
  auto idx = src.ensure_index_positions({0});
  for (auto c = src.probe(idx, Tuple{{key}}); c.valid(); c.advance())
    moving.push_back({c.key(), c.payload()});
  for (const auto& [t, p] : moving) {
    place(i, !to_heavy, t, Int64Ring::neg(p));
    place(i, to_heavy, t, p);
  }
}

/// sum_z next(y, z) * prev(z, x) over the four part combinations, for an
/// update of relation i at t = (x, y).
std::int64_t IvmEpsEngine::delta_factor(std::size_t i, const Tuple& t) const {
  const Value& x = t.vals[0];
  const Value& y = t.vals[1];
  const Part& nxt = parts_[(i + 1) % 3];
  const Part& prv = parts_[(i + 2) % 3];
  std::int64_t f = 0;

  auto nxt_light = nxt.light.ensure_index_positions({0});
  Tuple ykey{{y}};
  // Light-light: scan the light block, below the migration bound.
  for (auto c = nxt.light.probe(nxt_light, ykey); c.valid(); c.advance())
    f = Int64Ring::add(f, Int64Ring::mul(c.payload(), prv.light.at(Tuple{{c.key().vals[1], x}})));

  // Light-heavy: scan whichever block is shorter, probe the other.
  auto prv_by_x = prv.heavy.ensure_index_positions({1});
  Tuple xkey{{x}};
  if (nxt.light.bucket_size(nxt_light, ykey) <= prv.heavy.bucket_size(prv_by_x, xkey)) {
    for (auto c = nxt.light.probe(nxt_light, ykey); c.valid(); c.advance())
      f = Int64Ring::add(f,
                         Int64Ring::mul(c.payload(), prv.heavy.at(Tuple{{c.key().vals[1], x}})));
  } else {
    for (auto c = prv.heavy.probe(prv_by_x, xkey); c.valid(); c.advance())
      f = Int64Ring::add(f, Int64Ring::mul(nxt.light.at(Tuple{{y, c.key().vals[0]}}),
                                           c.payload()));
  }

  // Heavy-light: one lookup in the materialized view.
  f = Int64Ring::add(f, views_[i].at(Tuple{{y, x}}));

  // Heavy-heavy: scan the distinct heavy keys of the previous relation,
  // bounded by size over threshold.
  auto prv_heavy = prv.heavy.ensure_index_positions({0});
  prv.heavy.for_each_index_key(prv_heavy, [&](const Tuple& z, std::size_t) {
    probes::bump();
    f = Int64Ring::add(f, Int64Ring::mul(nxt.heavy.at(Tuple{{y, z.vals[0]}}),
                                         prv.heavy.at(Tuple{{z.vals[0], x}})));
  });
  return f;
}

void IvmEpsEngine::apply(const Update& u) {
  if (u.payload == 0) return;
  std::size_t i = index_of(u.rel);
  if (u.tuple.size() != 2)
    throw SchemaError("triangle update arity " + std::to_string(u.tuple.size()));

  count_ = Int64Ring::add(count_, Int64Ring::mul(u.payload, delta_factor(i, u.tuple)));

  const Value& x = u.tuple.vals[0];
  bool heavy = is_heavy(i, x);
  place(i, heavy, u.tuple, u.payload);

  std::size_t deg = degree(i, x);
  if (!heavy && deg >= 2 * theta_)
    migrate(i, x, true);
  else if (heavy && deg > 0 && 2 * deg < theta_)
    migrate(i, x, false);

  std::size_t n = size();
  if (n > 2 * n0_ || 2 * n < n0_) rebalance();
  ++version_;
}

void IvmEpsEngine::rebalance() {
  std::size_t n = size();
  theta_ = threshold_for(n, eps_);
  n0_ = n;
  for (std::size_t i = 0; i < 3; ++i) {
    Part& part = parts_[i];
    std::vector<std::pair<Tuple, std::int64_t>> all;
    for (auto c = part.light.entries(); c.valid(); c.advance())
      all.push_back({c.key(), c.payload()});
    for (auto c = part.heavy.entries(); c.valid(); c.advance())
      all.push_back({c.key(), c.payload()});
    std::unordered_map<Value, std::size_t> deg;
    for (const auto& [t, p] : all) ++deg[t.vals[0]];
    part.light.clear();
    part.heavy.clear();
    for (const auto& [t, p] : all)
      (deg[t.vals[0]] >= theta_ ? part.heavy : part.light).apply(t, p);
  }
  for (std::size_t i = 0; i < 3; ++i) views_[i] = view_direct(i);
}

/// Direct evaluation of views_[j]: join the heavy next part with the light
/// previous part on their shared column.
Relation IvmEpsEngine::view_direct(std::size_t j) const {
  Relation out{Schema({"y", "x"})};
  const Relation& nxt = parts_[(j + 1) % 3].heavy;
  const Relation& prv = parts_[(j + 2) % 3].light;
  auto idx = prv.ensure_index_positions({0});
  for (auto c = nxt.entries(); c.valid(); c.advance()) {
    for (auto d = prv.probe(idx, Tuple{{c.key().vals[1]}}); d.valid(); d.advance())
      out.apply(Tuple{{c.key().vals[0], d.key().vals[1]}},
                Int64Ring::mul(c.payload(), d.payload()));
  }
  return out;
}

std::int64_t IvmEpsEngine::recompute_count() const {
  std::int64_t total = 0;
  auto scan = [&](const Relation& r, const Relation& s_light, const Relation& s_heavy,
                  const Relation& t_light, const Relation& t_heavy) {
    auto sl = s_light.ensure_index_positions({0});
    auto sh = s_heavy.ensure_index_positions({0});
    for (auto c = r.entries(); c.valid(); c.advance()) {
      const Value& a = c.key().vals[0];
      const Value& b = c.key().vals[1];
      for (const auto& [s, idx] : {std::pair{&s_light, sl}, std::pair{&s_heavy, sh}}) {
        for (auto d = s->probe(idx, Tuple{{b}}); d.valid(); d.advance()) {
          const Value& cv = d.key().vals[1];
          std::int64_t tpay = Int64Ring::add(t_light.at(Tuple{{cv, a}}),
                                             t_heavy.at(Tuple{{cv, a}}));
          total = Int64Ring::add(
              total, Int64Ring::mul(Int64Ring::mul(c.payload(), d.payload()), tpay));
        }
      }
    }
  };
  scan(parts_[0].light, parts_[1].light, parts_[1].heavy, parts_[2].light, parts_[2].heavy);
  scan(parts_[0].heavy, parts_[1].light, parts_[1].heavy, parts_[2].light, parts_[2].heavy);
  return total;
}

std::array<IvmEpsEngine::PartSizes, 3> IvmEpsEngine::partition_sizes() const {
  std::array<PartSizes, 3> out;
  for (std::size_t i = 0; i < 3; ++i)
    out[i] = {parts_[i].light.size(), parts_[i].heavy.size()};
  return out;
}

std::string IvmEpsEngine::explain() const {
  std::string s = "triangle count, eps=" + std::to_string(eps_) +
                  " threshold=" + std::to_string(theta_) + " n0=" + std::to_string(n0_) + "\n";
  for (std::size_t i = 0; i < 3; ++i) {
    s += std::string(kRel[i]) + ": light " + std::to_string(parts_[i].light.size()) + ", heavy " +
         std::to_string(parts_[i].heavy.size()) + "\n";
  }
  s += "V_ST " + std::to_string(views_[0].size()) + ", V_TR " + std::to_string(views_[1].size()) +
       ", V_RS " + std::to_string(views_[2].size()) + "\n";
  return s;
}

void IvmEpsEngine::check_invariants() const {
  for (std::size_t i = 0; i < 3; ++i) {
    const Part& p = parts_[i];
    auto light_idx = p.light.ensure_index_positions({0});
    auto heavy_idx = p.heavy.ensure_index_positions({0});
    p.light.for_each_index_key(light_idx, [&](const Tuple& k, std::size_t n) {
      if (p.heavy.bucket_size(heavy_idx, k) != 0)
        throw EngineError(std::string(kRel[i]) + " key " + k.str() + " is in both partitions");
      if (n >= 2 * theta_)
        throw EngineError(std::string(kRel[i]) + " light key " + k.str() + " has degree " +
                          std::to_string(n));
    });
    p.heavy.for_each_index_key(heavy_idx, [&](const Tuple& k, std::size_t n) {
      if (2 * n < theta_)
        throw EngineError(std::string(kRel[i]) + " heavy key " + k.str() + " has degree " +
                          std::to_string(n));
    });
  }
  for (std::size_t i = 0; i < 3; ++i)
    if (!same_entries(views_[i], view_direct(i)))
      throw EngineError("materialized view " + std::to_string(i) +
                        " deviates from direct evaluation");
  if (count_ != recompute_count()) throw EngineError("maintained count deviates from recompute");
}

}  // namespace ivm
