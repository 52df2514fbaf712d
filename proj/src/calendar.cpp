#include "newsent/calendar.hpp"

#include <cctype>
#include <charconv>

#include <fmt/format.h>

namespace newsent {
namespace {

bool parse_fixed_int(std::string_view text, int& out) {
    for (char c : text) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!parse_fixed_int(text.substr(0, 4), y) || !parse_fixed_int(text.substr(5, 2), m) ||
        !parse_fixed_int(text.substr(8, 2), d)) {
        return std::nullopt;
    }
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

std::optional<Month> parse_month(std::string_view text) {
    if (text.size() != 7 || text[4] != '-') return std::nullopt;
    int y = 0, m = 0;
    if (!parse_fixed_int(text.substr(0, 4), y) || !parse_fixed_int(text.substr(5, 2), m)) {
        return std::nullopt;
    }
    Month month{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)}};
    if (!month.ok()) return std::nullopt;
    return month;
}

std::string format_date(Date d) {
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                       static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

std::string format_month(Month m) {
    return fmt::format("{:04d}-{:02d}", static_cast<int>(m.year()),
                       static_cast<unsigned>(m.month()));
}

int months_between(Month from, Month to) {
    return (static_cast<int>(to.year()) - static_cast<int>(from.year())) * 12 +
           (static_cast<int>(static_cast<unsigned>(to.month())) -
            static_cast<int>(static_cast<unsigned>(from.month())));
}

Month add_months(Month m, int n) { return m + std::chrono::months{n}; }

}  // namespace newsent
