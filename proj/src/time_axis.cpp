#include "tdev/time_axis.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace tdev {

Duration seconds(double s) {
    return static_cast<Duration>(std::llround(s * static_cast<double>(kNanosPerSecond)));
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool all_digits(const std::string& s, size_t from, size_t to) {
    if (from >= to || to > s.size()) return false;
    for (size_t i = from; i < to; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

long parse_int(const std::string& s, size_t from, size_t to) {
    long v = 0;
    for (size_t i = from; i < to; ++i) v = v * 10 + (s[i] - '0');
    return v;
}

}  // namespace

TimePoint parse_timestamp(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty timestamp");

    // Epoch numeric first: the whole string must be consumed.
    {
        const char* begin = text.c_str();
        char* end = nullptr;
        errno = 0;
        double v = std::strtod(begin, &end);
        if (end == begin + text.size() && errno == 0 && std::isfinite(v)) {
            return seconds(v);
        }
    }

    // ISO-8601: YYYY-MM-DD[ T]HH:MM:SS[.frac][Z]
    if (text.size() < 10 || text[4] != '-' || text[7] != '-' ||
        !all_digits(text, 0, 4) || !all_digits(text, 5, 7) || !all_digits(text, 8, 10)) {
        throw std::invalid_argument("unparseable timestamp '" + text + "'");
    }
    long year = parse_int(text, 0, 4);
    long month = parse_int(text, 5, 7);
    long day = parse_int(text, 8, 10);
    if (month < 1 || month > 12 || day < 1 || day > 31) {
        throw std::invalid_argument("unparseable timestamp '" + text + "'");
    }

    long hh = 0, mm = 0, ss = 0;
    std::int64_t frac_ns = 0;
    size_t pos = 10;
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
        ++pos;
        if (text.size() < pos + 8 || text[pos + 2] != ':' || text[pos + 5] != ':' ||
            !all_digits(text, pos, pos + 2) || !all_digits(text, pos + 3, pos + 5) ||
            !all_digits(text, pos + 6, pos + 8)) {
            throw std::invalid_argument("unparseable timestamp '" + text + "'");
        }
        hh = parse_int(text, pos, pos + 2);
        mm = parse_int(text, pos + 3, pos + 5);
        ss = parse_int(text, pos + 6, pos + 8);
        pos += 8;
        if (pos < text.size() && text[pos] == '.') {
            size_t fs = ++pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            if (pos == fs) throw std::invalid_argument("unparseable timestamp '" + text + "'");
            std::int64_t scale = 100'000'000;
            for (size_t i = fs; i < pos && i < fs + 9; ++i) {
                frac_ns += (text[i] - '0') * scale;
                scale /= 10;
            }
        }
        if (hh > 23 || mm > 59 || ss > 60) {
            throw std::invalid_argument("unparseable timestamp '" + text + "'");
        }
    }
    if (pos < text.size() && text[pos] == 'Z') ++pos;
    if (pos != text.size()) {
        throw std::invalid_argument("unparseable timestamp '" + text + "'");
    }

    std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    std::int64_t secs = days * 86400 + hh * 3600 + mm * 60 + ss;
    return secs * kNanosPerSecond + frac_ns;
}

std::string format_timestamp(TimePoint t) {
    const bool neg = t < 0;
    const unsigned long long mag =
        neg ? 0ULL - static_cast<unsigned long long>(t) : static_cast<unsigned long long>(t);
    const unsigned long long secs = mag / kNanosPerSecond;
    const unsigned long long frac = mag % kNanosPerSecond;
    char buf[40];
    if (frac == 0) {
        std::snprintf(buf, sizeof(buf), "%s%llu", neg ? "-" : "", secs);
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%s%llu.%09llu", neg ? "-" : "", secs, frac);
    std::string out(buf);
    while (out.back() == '0') out.pop_back();
    return out;
}

std::string format_double(double v) {
    std::array<char, 40> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

}  // namespace tdev
