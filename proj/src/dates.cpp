#include "saferoute/dates.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include "saferoute/csv.hpp"
#include "saferoute/errors.hpp"

namespace saferoute {

using std::chrono::day;
using std::chrono::days;
using std::chrono::month;
using std::chrono::months;
using std::chrono::sys_days;
using std::chrono::year;
using std::chrono::year_month;
using std::chrono::year_month_day;

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    for (std::size_t i = pos; i < pos + len; ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc{} && ptr == s.data() + pos + len;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    std::string_view s = text;
    while (!s.empty() && (s.back() == 'Z' || s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);

    int y, mo, d;
    if (!read_int(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || s[7] != '-' ||
        !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d))
        return std::nullopt;

    Timestamp ts;
    ts.date = year_month_day{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ts.date.ok()) return std::nullopt;

    if (s.size() == 10) return ts;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    if (s.size() < 16 || s[13] != ':' ||
        !read_int(s, 11, 2, ts.hour) || !read_int(s, 14, 2, ts.minute))
        return std::nullopt;
    if (s.size() > 16) {
        if (s.size() < 19 || s[16] != ':' || !read_int(s, 17, 2, ts.second))
            return std::nullopt;
    }
    if (ts.hour > 23 || ts.minute > 59 || ts.second > 60) return std::nullopt;
    return ts;
}

std::optional<year_month_day> parse_date(std::string_view text) {
    std::string t = trim(text);
    int y, mo, d = 1;
    if (!read_int(t, 0, 4, y) || t.size() < 7 || t[4] != '-' || !read_int(t, 5, 2, mo))
        return std::nullopt;
    if (t.size() == 7) {
        // YYYY-MM
    } else if (t.size() == 10 && t[7] == '-' && read_int(t, 8, 2, d)) {
        // YYYY-MM-DD
    } else {
        return std::nullopt;
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

std::string format_date(const year_month_day& d) {
    std::ostringstream os;
    os << int(d.year()) << '-';
    unsigned m = unsigned(d.month()), dd = unsigned(d.day());
    if (m < 10) os << '0';
    os << m << '-';
    if (dd < 10) os << '0';
    os << dd;
    return os.str();
}

std::optional<Bucket> parse_bucket(std::string_view name) {
    if (name == "monthly") return Bucket::Monthly;
    if (name == "weekly") return Bucket::Weekly;
    if (name == "daily") return Bucket::Daily;
    return std::nullopt;
}

std::string bucket_name(Bucket b) {
    switch (b) {
        case Bucket::Monthly: return "monthly";
        case Bucket::Weekly: return "weekly";
        case Bucket::Daily: return "daily";
    }
    return "?";
}

static long months_between(const year_month_day& a, const year_month_day& b) {
    return (int(b.year()) - int(a.year())) * 12L +
           (int(unsigned(b.month())) - int(unsigned(a.month())));
}

std::size_t BucketGrid::size() const {
    if (sys_days{end} <= sys_days{start})
        throw DataError("empty date range: " + format_date(start) + " .. " + format_date(end));
    if (bucket == Bucket::Monthly) {
        if (unsigned(start.day()) != 1 || unsigned(end.day()) != 1)
            throw DataError("monthly buckets require the range to start and end on the 1st");
        return static_cast<std::size_t>(months_between(start, end));
    }
    auto span = (sys_days{end} - sys_days{start}).count();
    long stride = bucket == Bucket::Weekly ? 7 : 1;
    if (span % stride != 0)
        throw DataError("bucket stride does not divide the date range evenly");
    return static_cast<std::size_t>(span / stride);
}

year_month_day BucketGrid::bucket_start(std::size_t k) const {
    if (bucket == Bucket::Monthly) {
        year_month ym{start.year(), start.month()};
        ym += months{static_cast<int>(k)};
        return year_month_day{ym.year(), ym.month(), day{1}};
    }
    long stride = bucket == Bucket::Weekly ? 7 : 1;
    return year_month_day{sys_days{start} + days{static_cast<long>(k) * stride}};
}

std::optional<std::size_t> BucketGrid::index_of(const Timestamp& t) const {
    sys_days d = t.day();
    if (d < sys_days{start} || d >= sys_days{end}) return std::nullopt;
    if (bucket == Bucket::Monthly) {
        long k = months_between(start, t.date);
        return static_cast<std::size_t>(k);
    }
    long stride = bucket == Bucket::Weekly ? 7 : 1;
    return static_cast<std::size_t>((d - sys_days{start}).count() / stride);
}

}  // namespace saferoute
