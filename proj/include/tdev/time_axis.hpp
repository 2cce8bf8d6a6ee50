#pragma once

#include <cstdint>
#include <string>

namespace tdev {

// Timestamps are integer nanoseconds since the Unix epoch so that grid
// arithmetic (resampling, block partitioning) is exact.
using TimePoint = std::int64_t;
using Duration = std::int64_t;

constexpr std::int64_t kNanosPerSecond = 1'000'000'000;

// Converts a (possibly fractional) second count to nanoseconds.
Duration seconds(double s);

// Accepts ISO-8601 ("2021-03-04T05:06:07.25Z", "2021-03-04 05:06:07",
// "2021-03-04") or an epoch-seconds numeric literal ("1614834367", "12.5").
// Throws std::invalid_argument on anything else.
TimePoint parse_timestamp(const std::string& text);

// Epoch seconds with up to nine fractional digits, trailing zeros trimmed.
// parse_timestamp(format_timestamp(t)) == t for every t.
std::string format_timestamp(TimePoint t);

// Shortest decimal that round-trips the value exactly.
std::string format_double(double v);

}  // namespace tdev
