#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <optional>
#include <string>
#include <string_view>

#include "warcrace/error.hpp"

namespace warcrace {

/// All timestamps in this library are UTC with millisecond resolution.
using Timestamp = std::chrono::time_point<std::chrono::system_clock, std::chrono::milliseconds>;

inline Timestamp now_utc() {
    return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

inline Timestamp timestamp_from_millis(std::int64_t ms) {
    return Timestamp(std::chrono::milliseconds(ms));
}

inline std::int64_t millis_since_epoch(Timestamp t) {
    return t.time_since_epoch().count();
}

namespace detail {

inline std::tm to_utc_tm(Timestamp t) {
    std::time_t secs = static_cast<std::time_t>(millis_since_epoch(t) / 1000);
    std::tm out{};
    gmtime_r(&secs, &out);
    return out;
}

inline Timestamp from_utc_fields(int year, int mon, int day, int hour, int min, int sec, int ms) {
    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = mon - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = min;
    tm.tm_sec = sec;
    std::time_t secs = timegm(&tm);
    // timegm normalizes out-of-range fields; reject anything it had to adjust.
    std::tm check{};
    gmtime_r(&secs, &check);
    if (check.tm_year != year - 1900 || check.tm_mon != mon - 1 || check.tm_mday != day ||
        check.tm_hour != hour || check.tm_min != min || check.tm_sec != sec) {
        throw Error("invalid calendar time");
    }
    return timestamp_from_millis(static_cast<std::int64_t>(secs) * 1000 + ms);
}

}  // namespace detail

/// "2022-06-01T12:00:00.000Z" — the events-file timestamp format.
inline std::string format_iso8601_ms(Timestamp t) {
    std::tm tm = detail::to_utc_tm(t);
    int ms = static_cast<int>(((millis_since_epoch(t) % 1000) + 1000) % 1000);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
    return buf;
}

/// "2022-06-01T12:00:00Z" — WARC-Date, second precision.
inline std::string format_warc_date(Timestamp t) {
    std::tm tm = detail::to_utc_tm(t);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

/// "20220601120000" — CDXJ capture timestamp.
inline std::string format_timestamp14(Timestamp t) {
    std::tm tm = detail::to_utc_tm(t);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d%02d%02d%02d%02d%02d", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

/// Accepts "YYYY-MM-DDThh:mm:ssZ" with an optional ".mmm" part.
inline Timestamp parse_iso8601(std::string_view text) {
    int year, mon, day, hour, min, sec;
    int ms = 0;
    int consumed = 0;
    std::string s(text);
    if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &year, &mon, &day, &hour, &min, &sec,
                    &consumed) != 6) {
        throw Error("unparseable timestamp: " + s);
    }
    std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
    if (rest.size() == 5 && rest[0] == '.' && rest[4] == 'Z') {
        int frac = 0;
        for (int i = 1; i <= 3; ++i) {
            if (rest[static_cast<std::size_t>(i)] < '0' || rest[static_cast<std::size_t>(i)] > '9')
                throw Error("unparseable timestamp: " + s);
            frac = frac * 10 + (rest[static_cast<std::size_t>(i)] - '0');
        }
        ms = frac;
    } else if (rest != "Z") {
        throw Error("unparseable timestamp (expected UTC 'Z'): " + s);
    }
    return detail::from_utc_fields(year, mon, day, hour, min, sec, ms);
}

/// finish − start in seconds, millisecond resolution preserved. A finish
/// before the start means clock skew or a corrupt log and is an error.
inline double compute_speedrun_time(Timestamp start, Timestamp finish) {
    if (finish < start) throw Error("finish timestamp precedes start (clock skew or corrupt log)");
    return static_cast<double>((finish - start).count()) / 1000.0;
}

inline std::optional<Timestamp> parse_timestamp14(std::string_view text) {
    if (text.size() != 14) return std::nullopt;
    for (char c : text)
        if (c < '0' || c > '9') return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (text[i] - '0');
        return v;
    };
    try {
        return detail::from_utc_fields(num(0, 4), num(4, 2), num(6, 2), num(8, 2), num(10, 2),
                                       num(12, 2), 0);
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace warcrace
