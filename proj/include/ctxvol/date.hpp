#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "error.hpp"

namespace ctxvol {

/// A calendar date at day resolution.
class Date {
public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  constexpr Date(int y, unsigned m, unsigned d)
      : days_(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}}) {}

  constexpr std::chrono::sys_days days() const { return days_; }
  constexpr std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
  constexpr int year() const { return static_cast<int>(ymd().year()); }
  constexpr unsigned month() const { return static_cast<unsigned>(ymd().month()); }
  constexpr unsigned day() const { return static_cast<unsigned>(ymd().day()); }

  constexpr Date add_days(long n) const { return Date{days_ + std::chrono::days{n}}; }
  constexpr long serial() const { return days_.time_since_epoch().count(); }

  std::string iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
    return buf;
  }

  friend constexpr auto operator<=>(const Date &, const Date &) = default;

private:
  std::chrono::sys_days days_{};
};

/// Parses YYYY-MM-DD; anything else (including 2009-13-40) yields nullopt.
inline std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len, int &out) {
    auto first = s.data() + pos, last = first + len;
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && p == last;
  };
  int y = 0, m = 0, d = 0;
  if (!field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d)) return std::nullopt;
  if (m < 1 || d < 1) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{std::chrono::sys_days{ymd}};
}

/// Slice width: a calendar unit times a positive multiplier.
struct Granularity {
  enum class Unit { year, month, week, day };
  Unit unit = Unit::month;
  int span = 1;

  friend bool operator==(const Granularity &, const Granularity &) = default;
};

inline std::string to_string(Granularity g) {
  std::string name;
  switch (g.unit) {
  case Granularity::Unit::year: name = "year"; break;
  case Granularity::Unit::month: name = "month"; break;
  case Granularity::Unit::week: name = "week"; break;
  case Granularity::Unit::day: name = "day"; break;
  }
  return g.span == 1 ? name : std::to_string(g.span) + name;
}

/// Accepts "year", "month", "week", "day", optionally prefixed by a count
/// ("14day", "2week").
inline Granularity parse_granularity(std::string_view s) {
  Granularity g;
  std::size_t digits = 0;
  while (digits < s.size() && s[digits] >= '0' && s[digits] <= '9') ++digits;
  if (digits > 0) {
    std::from_chars(s.data(), s.data() + digits, g.span);
    if (g.span < 1) throw ConfigError("granularity multiplier must be >= 1");
  }
  auto unit = s.substr(digits);
  if (unit == "year") g.unit = Granularity::Unit::year;
  else if (unit == "month") g.unit = Granularity::Unit::month;
  else if (unit == "week") g.unit = Granularity::Unit::week;
  else if (unit == "day") g.unit = Granularity::Unit::day;
  else throw ConfigError("unknown granularity '" + std::string(s) + "' (year|month|week|day)");
  return g;
}

/// Start of the calendar unit containing `d` (Jan 1, day 1 of month, Monday).
inline Date unit_floor(Date d, Granularity::Unit unit) {
  using namespace std::chrono;
  switch (unit) {
  case Granularity::Unit::year: return Date{d.year(), 1, 1};
  case Granularity::Unit::month: return Date{d.year(), d.month(), 1};
  case Granularity::Unit::week: {
    auto wd = weekday{d.days()}.iso_encoding(); // Monday = 1
    return d.add_days(-static_cast<long>(wd - 1));
  }
  case Granularity::Unit::day: return d;
  }
  return d;
}

/// Whole units from `origin` (already unit-aligned) to `d`.
inline long units_between(Date origin, Date d, Granularity::Unit unit) {
  switch (unit) {
  case Granularity::Unit::year: return d.year() - origin.year();
  case Granularity::Unit::month:
    return (d.year() - origin.year()) * 12L + (static_cast<long>(d.month()) - origin.month());
  case Granularity::Unit::week: {
    long diff = d.serial() - origin.serial();
    return diff >= 0 ? diff / 7 : -((-diff + 6) / 7);
  }
  case Granularity::Unit::day: return d.serial() - origin.serial();
  }
  return 0;
}

/// `origin` advanced by n units.
inline Date add_units(Date origin, long n, Granularity::Unit unit) {
  using namespace std::chrono;
  switch (unit) {
  case Granularity::Unit::year: return Date{sys_days{origin.ymd() + years{n}}};
  case Granularity::Unit::month: return Date{sys_days{origin.ymd() + months{n}}};
  case Granularity::Unit::week: return origin.add_days(7 * n);
  case Granularity::Unit::day: return origin.add_days(n);
  }
  return origin;
}

} // namespace ctxvol
