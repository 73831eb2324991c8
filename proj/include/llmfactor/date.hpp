#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace llmfactor {

/// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
/// Parses and formats "YYYY-MM-DD" only; no time zones.
class Date {
public:
    Date() = default;
    explicit Date(std::int32_t serial_days) : serial_(serial_days) {}
    Date(int year, unsigned month, unsigned day);

    static std::optional<Date> parse(std::string_view iso);

    std::int32_t serial() const { return serial_; }
    std::string to_string() const;

    /// 0 = Sunday ... 6 = Saturday.
    int weekday() const;
    bool is_weekend() const { int w = weekday(); return w == 0 || w == 6; }

    Date operator+(int days) const { return Date(serial_ + days); }
    Date operator-(int days) const { return Date(serial_ - days); }
    int operator-(Date other) const { return serial_ - other.serial_; }
    auto operator<=>(const Date&) const = default;

private:
    std::int32_t serial_ = 0;
};

/// Next weekday strictly after d (Sat/Sun skipped). Test fixtures use this to
/// lay out synthetic trading calendars; ingest never invents trading days.
Date next_weekday(Date d);

}  // namespace llmfactor
