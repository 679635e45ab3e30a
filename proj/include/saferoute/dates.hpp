#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace saferoute {

// Calendar timestamp with minute/second precision, no timezone handling.
// Incident feeds are local civil time; we bucket them, so an offset-free
// reading is sufficient.
struct Timestamp {
    std::chrono::year_month_day date;
    int hour = 0;
    int minute = 0;
    int second = 0;

    std::chrono::sys_days day() const { return std::chrono::sys_days{date}; }
};

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM", "YYYY-MM-DDTHH:MM:SS"
// (space instead of 'T' and a trailing 'Z' are tolerated).
// Returns nullopt for anything unparseable or not a real calendar date.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// Accepts "YYYY-MM" or "YYYY-MM-DD"; "YYYY-MM" means the first of the month.
std::optional<std::chrono::year_month_day> parse_date(std::string_view text);

std::string format_date(const std::chrono::year_month_day& d);

enum class Bucket { Monthly, Weekly, Daily };

std::optional<Bucket> parse_bucket(std::string_view name);
std::string bucket_name(Bucket b);

// Half-open date range [start, end) chopped into equal strides.
// Monthly strides are calendar months; weekly/daily are 7/1 days.
struct BucketGrid {
    Bucket bucket;
    std::chrono::year_month_day start;
    std::chrono::year_month_day end;

    // Number of buckets. Throws DataError if the range is empty or the
    // stride does not divide it evenly.
    std::size_t size() const;
    // First day of bucket k.
    std::chrono::year_month_day bucket_start(std::size_t k) const;
    // Bucket index for a timestamp, or nullopt when outside [start, end).
    std::optional<std::size_t> index_of(const Timestamp& t) const;
};

}  // namespace saferoute
