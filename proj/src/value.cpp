#include "ivm/value.hpp"

#include <charconv>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "ivm/error.hpp"

namespace ivm {
namespace {

class ValuePool {
 public:
  static ValuePool& instance() {
    static ValuePool pool;
    return pool;
  }

  Value intern(std::string_view s) {
    {
      std::shared_lock lock(mu_);
      auto it = ids_.find(std::string(s));
      if (it != ids_.end()) return it->second;
    }
    std::unique_lock lock(mu_);
    auto [it, inserted] = ids_.try_emplace(std::string(s), Value(spellings_.size()));
    if (inserted) spellings_.emplace_back(it->first);
    return it->second;
  }

  const std::string& spell(Value v) const {
    std::shared_lock lock(mu_);
    return spellings_.at(static_cast<std::size_t>(v));
  }

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Value> ids_;
  std::deque<std::string> spellings_;
};

}  // namespace

Value intern(std::string_view spelling) { return ValuePool::instance().intern(spelling); }

Value intern(std::int64_t number) { return intern(std::to_string(number)); }

const std::string& spell(Value v) { return ValuePool::instance().spell(v); }

std::int64_t numeric_value(Value v) {
  const std::string& s = spell(v);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error("value '" + s + "' is not numeric");
  return out;
}

}  // namespace ivm
