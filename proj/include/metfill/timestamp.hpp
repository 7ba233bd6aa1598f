#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace metfill {

using TimePoint = std::chrono::sys_seconds;
using Cadence = std::chrono::seconds;

inline constexpr Cadence kDefaultCadence = std::chrono::minutes{15};
inline constexpr Cadence kOneDay = std::chrono::hours{24};

namespace detail {

inline bool parse_fixed_int(std::string_view text, int& out) {
	if (text.empty()) return false;
	for (char c : text)
		if (c < '0' || c > '9') return false;
	auto res = std::from_chars(text.data(), text.data() + text.size(), out);
	return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

} // namespace detail

/// Parses `YYYY-MM-DDTHH:MM:SSZ` (UTC). Anything else, including valid ISO-8601
/// variants with offsets or fractional seconds, is rejected.
inline std::optional<TimePoint> parse_timestamp(std::string_view text) {
	using namespace std::chrono;
	if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
	    text[16] != ':' || text[19] != 'Z')
		return std::nullopt;
	int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
	if (!detail::parse_fixed_int(text.substr(0, 4), y) || !detail::parse_fixed_int(text.substr(5, 2), mo) ||
	    !detail::parse_fixed_int(text.substr(8, 2), d) || !detail::parse_fixed_int(text.substr(11, 2), h) ||
	    !detail::parse_fixed_int(text.substr(14, 2), mi) || !detail::parse_fixed_int(text.substr(17, 2), s))
		return std::nullopt;
	const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
	if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
	return TimePoint{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s};
}

inline std::string format_timestamp(TimePoint tp) {
	using namespace std::chrono;
	const auto day_start = floor<days>(tp);
	const year_month_day ymd{day_start};
	const hh_mm_ss tod{tp - day_start};
	char buf[32];
	std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
	              static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
	              static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
	              static_cast<int>(tod.seconds().count()));
	return buf;
}

inline TimePoint day_floor(TimePoint tp) {
	return std::chrono::floor<std::chrono::days>(tp);
}

inline std::chrono::year_month_day civil_date(TimePoint tp) {
	return std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(tp)};
}

inline TimePoint make_date(int y, unsigned m, unsigned d) {
	using namespace std::chrono;
	return TimePoint{sys_days{year{y} / month{m} / day{d}}};
}

/// Parses a cadence such as `15m`, `1h` or `900s`. The cadence must be positive
/// and divide one day evenly, so that every day holds a whole number of slots.
inline std::optional<Cadence> parse_cadence(std::string_view text) {
	if (text.size() < 2) return std::nullopt;
	int count = 0;
	if (!detail::parse_fixed_int(text.substr(0, text.size() - 1), count) || count <= 0) return std::nullopt;
	Cadence cadence{};
	switch (text.back()) {
	case 's': cadence = std::chrono::seconds{count}; break;
	case 'm': cadence = std::chrono::minutes{count}; break;
	case 'h': cadence = std::chrono::hours{count}; break;
	default: return std::nullopt;
	}
	if (kOneDay % cadence != Cadence::zero()) return std::nullopt;
	return cadence;
}

inline std::size_t slots_per_day(Cadence cadence) {
	return static_cast<std::size_t>(kOneDay / cadence);
}

} // namespace metfill
