// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dtkg {

/// UNIX epoch seconds, UTC.
struct Timestamp {
    std::int64_t seconds = 0;

    friend constexpr auto operator<=>(Timestamp, Timestamp) = default;
};

inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Midnight UTC of the given civil date. Throws Error(kInvalidArgument) on an invalid date.
Timestamp from_civil(int year, unsigned month, unsigned day);

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS[Z|+hh:mm]", "DD-MM-YYYY" and "Month D, YYYY".
/// Date-only forms map to 00:00:00 UTC.
std::optional<Timestamp> parse_date(std::string_view text);

std::string format_iso_date(Timestamp ts);    // "2024-06-18"
std::string format_human_date(Timestamp ts);  // "June 18, 2024"
std::string format_month_year(Timestamp ts);  // "June 2024"

Timestamp truncate_to_day(Timestamp ts);
Timestamp add_days(Timestamp ts, std::int64_t days);
/// Same day-of-month `months` earlier, clamped to the last day of the target month.
Timestamp subtract_months(Timestamp ts, int months);

/// Sorted, duplicate-free set of timestamps. An empty list means "unknown".
class TimeList {
  public:
    using const_iterator = std::vector<Timestamp>::const_iterator;

    TimeList() = default;
    TimeList(std::initializer_list<Timestamp> items);
    explicit TimeList(std::vector<Timestamp> items);

    void insert(Timestamp ts);
    void merge(const TimeList& other);

    [[nodiscard]] bool contains(Timestamp ts) const;
    [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
    [[nodiscard]] const std::vector<Timestamp>& items() const noexcept { return items_; }
    [[nodiscard]] Timestamp front() const { return items_.front(); }
    [[nodiscard]] Timestamp back() const { return items_.back(); }
    [[nodiscard]] const_iterator begin() const noexcept { return items_.begin(); }
    [[nodiscard]] const_iterator end() const noexcept { return items_.end(); }

    friend bool operator==(const TimeList&, const TimeList&) = default;
    friend auto operator<=>(const TimeList& a, const TimeList& b) { return a.items_ <=> b.items_; }

  private:
    std::vector<Timestamp> items_;
};

TimeList set_union(const TimeList& a, const TimeList& b);

/// "[2020-01-24,2020-01-27]"
std::string format_time_list(const TimeList& list);

}  // namespace dtkg
