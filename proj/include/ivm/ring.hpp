#pragma once

#include <concepts>
#include <cstdint>
#include <limits>

#include "ivm/error.hpp"

namespace ivm {

/// Payload algebra: (zero, one, add, mul, neg). Inserts carry positive
/// payloads, deletes negative ones; a relation never stores a zero.
template <class R>
concept RingSpec = requires(typename R::value_type a, typename R::value_type b) {
  { R::zero() } -> std::same_as<typename R::value_type>;
  { R::one() } -> std::same_as<typename R::value_type>;
  { R::add(a, b) } -> std::same_as<typename R::value_type>;
  { R::mul(a, b) } -> std::same_as<typename R::value_type>;
  { R::neg(a) } -> std::same_as<typename R::value_type>;
  { R::is_zero(a) } -> std::same_as<bool>;
};

/// The shipped instance: 64-bit integers with checked overflow.
struct Int64Ring {
  using value_type = std::int64_t;

  static constexpr value_type zero() { return 0; }
  static constexpr value_type one() { return 1; }

  static value_type add(value_type a, value_type b) {
    value_type r;
    if (__builtin_add_overflow(a, b, &r)) throw OverflowError("int64 ring: add overflow");
    return r;
  }

  static value_type mul(value_type a, value_type b) {
    value_type r;
    if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("int64 ring: mul overflow");
    return r;
  }

  static value_type neg(value_type a) {
    if (a == std::numeric_limits<value_type>::min())
      throw OverflowError("int64 ring: neg overflow");
    return -a;
  }

  static bool is_zero(value_type a) { return a == 0; }
};

static_assert(RingSpec<Int64Ring>);

}  // namespace ivm
