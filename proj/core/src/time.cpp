// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/time.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>

#include <fmt/format.h>

#include "dtkg/error.hpp"

namespace dtkg {

namespace {

namespace chr = std::chrono;

constexpr std::array<std::string_view, 12> kMonthNames = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

chr::year_month_day civil(Timestamp ts) {
    const auto days = chr::floor<chr::days>(chr::sys_seconds{chr::seconds{ts.seconds}});
    return chr::year_month_day{days};
}

std::optional<int> parse_int(std::string_view s) {
    if (s.empty()) return std::nullopt;
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::optional<Timestamp> make_date(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(m)},
                                  chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Timestamp{chr::sys_seconds{chr::sys_days{ymd}}.time_since_epoch().count()};
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<unsigned> month_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kMonthNames.size(); ++i) {
        const auto full = kMonthNames[i];
        if (name.size() < 3 || name.size() > full.size()) continue;
        bool match = true;
        for (std::size_t k = 0; k < name.size(); ++k) {
            if (std::tolower(static_cast<unsigned char>(name[k])) !=
                std::tolower(static_cast<unsigned char>(full[k]))) {
                match = false;
                break;
            }
        }
        // Accept full names and three-letter abbreviations only.
        if (match && (name.size() == full.size() || name.size() == 3)) return static_cast<unsigned>(i + 1);
    }
    return std::nullopt;
}

// "YYYY-MM-DD" with optional "THH:MM:SS" and zone suffix.
std::optional<Timestamp> parse_iso(std::string_view s) {
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    const auto y = parse_int(s.substr(0, 4));
    const auto m = parse_int(s.substr(5, 2));
    const auto d = parse_int(s.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    auto date = make_date(*y, *m, *d);
    if (!date) return std::nullopt;
    if (s.size() == 10) return date;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    auto rest = s.substr(11);
    if (rest.size() < 8 || rest[2] != ':' || rest[5] != ':') return std::nullopt;
    const auto hh = parse_int(rest.substr(0, 2));
    const auto mm = parse_int(rest.substr(3, 2));
    const auto ss = parse_int(rest.substr(6, 2));
    if (!hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 60) return std::nullopt;
    rest.remove_prefix(8);
    if (!rest.empty() && rest.front() == '.') {  // fractional seconds are truncated
        rest.remove_prefix(1);
        while (!rest.empty() && std::isdigit(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
    }
    std::int64_t offset = 0;
    if (rest == "Z" || rest.empty()) {
        offset = 0;
    } else if ((rest.front() == '+' || rest.front() == '-') && rest.size() == 6 && rest[3] == ':') {
        const auto oh = parse_int(rest.substr(1, 2));
        const auto om = parse_int(rest.substr(4, 2));
        if (!oh || !om) return std::nullopt;
        offset = (*oh * 3600 + *om * 60) * (rest.front() == '+' ? 1 : -1);
    } else {
        return std::nullopt;
    }
    return Timestamp{date->seconds + *hh * 3600 + *mm * 60 + *ss - offset};
}

// "DD-MM-YYYY"
std::optional<Timestamp> parse_dmy(std::string_view s) {
    if (s.size() != 10 || s[2] != '-' || s[5] != '-') return std::nullopt;
    const auto d = parse_int(s.substr(0, 2));
    const auto m = parse_int(s.substr(3, 2));
    const auto y = parse_int(s.substr(6, 4));
    if (!y || !m || !d) return std::nullopt;
    return make_date(*y, *m, *d);
}

// "June 18, 2024" / "June 18 2024"
std::optional<Timestamp> parse_month_name(std::string_view s) {
    const auto space = s.find(' ');
    if (space == std::string_view::npos) return std::nullopt;
    const auto month = month_from_name(s.substr(0, space));
    if (!month) return std::nullopt;
    auto rest = trim(s.substr(space + 1));
    const auto sep = rest.find_first_of(", ");
    if (sep == std::string_view::npos) return std::nullopt;
    const auto d = parse_int(rest.substr(0, sep));
    const auto y = parse_int(trim(rest.substr(rest.find_first_not_of(", ", sep))));
    if (!d || !y) return std::nullopt;
    return make_date(*y, static_cast<int>(*month), *d);
}

}  // namespace

Timestamp from_civil(int year, unsigned month, unsigned day) {
    auto ts = make_date(year, static_cast<int>(month), static_cast<int>(day));
    if (!ts) throw Error(ErrorCode::kInvalidArgument, fmt::format("invalid date {}-{}-{}", year, month, day));
    return *ts;
}

std::optional<Timestamp> parse_date(std::string_view text) {
    const auto s = trim(text);
    if (s.empty()) return std::nullopt;
    if (auto ts = parse_iso(s)) return ts;
    if (auto ts = parse_dmy(s)) return ts;
    return parse_month_name(s);
}

std::string format_iso_date(Timestamp ts) {
    const auto ymd = civil(ts);
    return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()));
}

std::string format_human_date(Timestamp ts) {
    const auto ymd = civil(ts);
    return fmt::format("{} {}, {}", kMonthNames[static_cast<unsigned>(ymd.month()) - 1],
                       static_cast<unsigned>(ymd.day()), static_cast<int>(ymd.year()));
}

std::string format_month_year(Timestamp ts) {
    const auto ymd = civil(ts);
    return fmt::format("{} {}", kMonthNames[static_cast<unsigned>(ymd.month()) - 1], static_cast<int>(ymd.year()));
}

Timestamp truncate_to_day(Timestamp ts) {
    std::int64_t days = ts.seconds / kSecondsPerDay;
    if (ts.seconds % kSecondsPerDay < 0) --days;
    return Timestamp{days * kSecondsPerDay};
}

Timestamp add_days(Timestamp ts, std::int64_t days) { return Timestamp{ts.seconds + days * kSecondsPerDay}; }

Timestamp subtract_months(Timestamp ts, int months) {
    const auto ymd = civil(ts);
    const chr::year_month target = chr::year_month{ymd.year(), ymd.month()} - chr::months{months};
    const auto last = chr::year_month_day_last{target.year(), chr::month_day_last{target.month()}};
    const auto day = std::min(ymd.day(), last.day());
    const chr::year_month_day out{target.year(), target.month(), day};
    const auto time_of_day = ts.seconds - truncate_to_day(ts).seconds;
    return Timestamp{chr::sys_seconds{chr::sys_days{out}}.time_since_epoch().count() + time_of_day};
}

TimeList::TimeList(std::initializer_list<Timestamp> items) : TimeList(std::vector<Timestamp>(items)) {}

TimeList::TimeList(std::vector<Timestamp> items) : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
}

void TimeList::insert(Timestamp ts) {
    const auto it = std::lower_bound(items_.begin(), items_.end(), ts);
    if (it == items_.end() || *it != ts) items_.insert(it, ts);
}

void TimeList::merge(const TimeList& other) {
    if (other.empty()) return;
    std::vector<Timestamp> out;
    out.reserve(items_.size() + other.items_.size());
    std::set_union(items_.begin(), items_.end(), other.items_.begin(), other.items_.end(), std::back_inserter(out));
    items_ = std::move(out);
}

bool TimeList::contains(Timestamp ts) const { return std::binary_search(items_.begin(), items_.end(), ts); }

TimeList set_union(const TimeList& a, const TimeList& b) {
    TimeList out = a;
    out.merge(b);
    return out;
}

std::string format_time_list(const TimeList& list) {
    std::string out = "[";
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (i) out += ',';
        out += format_iso_date(list.items()[i]);
    }
    out += ']';
    return out;
}

}  // namespace dtkg
