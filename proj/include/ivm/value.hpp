#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ivm {

/// Interned domain value. Tuples hash and compare over these ids; the
/// spelling is recovered through the pool when printing or sorting
/// canonically. Ids are process-local and never appear in output formats.
using Value = std::int32_t;

Value intern(std::string_view spelling);
Value intern(std::int64_t number);
const std::string& spell(Value v);

/// Parses the spelling as a decimal integer (for numeric lifting functions).
std::int64_t numeric_value(Value v);

}  // namespace ivm
