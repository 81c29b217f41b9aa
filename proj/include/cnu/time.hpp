#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace cnu {

// Every instant and duration in the library is an integer count of
// nanoseconds. Instants are measured from the start of a run.
using Nanos = std::chrono::nanoseconds;

/// Parses "<decimal><unit>" with unit one of ns, us, ms, s (e.g. "4.865ms").
/// A bare number is taken as nanoseconds. Digits below one nanosecond are
/// rounded half up.
Nanos parse_duration(std::string_view text);

/// Parses a plain decimal number of milliseconds ("0.262").
Nanos parse_milliseconds(std::string_view text);

inline std::string to_string(Nanos d) { return std::to_string(d.count()); }

}  // namespace cnu
