#pragma once

#include <cstdint>

namespace ivm::probes {

// Machine-independent work measure: every hash probe and block step bumps
// the thread-local counter. Engines report per-update and per-emission
// deltas, so complexity claims are assertable in tests.

inline thread_local std::uint64_t tl_count = 0;

inline void bump(std::uint64_t n = 1) noexcept { tl_count += n; }
inline std::uint64_t count() noexcept { return tl_count; }
inline void reset() noexcept { tl_count = 0; }

/// Measures probes spent between construction and elapsed().
struct Scope {
  std::uint64_t start;
  Scope() : start(count()) {}
  std::uint64_t elapsed() const { return count() - start; }
};

}  // namespace ivm::probes
