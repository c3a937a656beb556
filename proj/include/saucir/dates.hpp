#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace saucir {

using Date = std::chrono::sys_days;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Returns nullopt on any
/// deviation, including impossible dates such as 2020-02-30.
std::optional<Date> parse_date(std::string_view text);

std::string format_date(Date d);

/// Inclusive date window, written `START:END` on the command line.
struct DateWindow {
    Date start;
    Date end;

    int days() const { return static_cast<int>((end - start).count()) + 1; }
};

std::optional<DateWindow> parse_window(std::string_view text);

inline int days_between(Date from, Date to) { return static_cast<int>((to - from).count()); }

}  // namespace saucir
