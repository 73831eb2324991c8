#include "llmfactor/date.hpp"

#include <cstdio>

namespace llmfactor {

namespace {

// Days-from-civil / civil-from-days (Howard Hinnant's algorithms).
std::int32_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(std::int32_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int yr = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = yr + (m <= 2);
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day)
    : serial_(days_from_civil(year, month, day)) {}

std::optional<Date> Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
    auto digits = [&](size_t pos, size_t n) -> int {
        int v = 0;
        for (size_t i = pos; i < pos + n; ++i) {
            char c = iso[i];
            if (c < '0' || c > '9') return -1;
            v = v * 10 + (c - '0');
        }
        return v;
    };
    int y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
    if (y < 0 || m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    Date result(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    // Round-trip rejects out-of-range days like Feb 30.
    int ry; unsigned rm, rd;
    civil_from_days(result.serial_, ry, rm, rd);
    if (ry != y || rm != static_cast<unsigned>(m) || rd != static_cast<unsigned>(d))
        return std::nullopt;
    return result;
}

std::string Date::to_string() const {
    int y; unsigned m, d;
    civil_from_days(serial_, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
    return buf;
}

int Date::weekday() const {
    // 1970-01-01 was a Thursday (weekday 4).
    std::int32_t w = (serial_ + 4) % 7;
    return w < 0 ? w + 7 : w;
}

Date next_weekday(Date d) {
    do {
        d = d + 1;
    } while (d.is_weekend());
    return d;
}

}  // namespace llmfactor
