#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace newsent {

using Date = std::chrono::year_month_day;
using Month = std::chrono::year_month;

/// Parses a strict "YYYY-MM-DD" calendar day. Returns nullopt for anything else,
/// including impossible days such as 2021-02-30.
std::optional<Date> parse_date(std::string_view text);

/// Parses "YYYY-MM".
std::optional<Month> parse_month(std::string_view text);

std::string format_date(Date d);
std::string format_month(Month m);

inline Month month_of(Date d) { return Month{d.year(), d.month()}; }

/// Signed number of months from `from` to `to`.
int months_between(Month from, Month to);

Month add_months(Month m, int n);

}  // namespace newsent
