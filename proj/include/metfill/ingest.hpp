#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "metfill/error.hpp"
#include "metfill/model.hpp"
#include "metfill/timestamp.hpp"

namespace metfill {

namespace csv {

/// Splits one CSV record. Double-quoted fields may contain commas and `""`
/// escapes; no multi-line fields.
inline std::vector<std::string> split(std::string_view line) {
	std::vector<std::string> fields;
	std::string field;
	bool quoted = false;
	for (std::size_t i = 0; i < line.size(); ++i) {
		const char c = line[i];
		if (quoted) {
			if (c == '"') {
				if (i + 1 < line.size() && line[i + 1] == '"') {
					field.push_back('"');
					++i;
				} else {
					quoted = false;
				}
			} else {
				field.push_back(c);
			}
		} else if (c == '"') {
			quoted = true;
		} else if (c == ',') {
			fields.push_back(std::move(field));
			field.clear();
		} else {
			field.push_back(c);
		}
	}
	fields.push_back(std::move(field));
	return fields;
}

inline std::string quote_if_needed(std::string_view text) {
	if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
	std::string out = "\"";
	for (char c : text) {
		if (c == '"') out.push_back('"');
		out.push_back(c);
	}
	out.push_back('"');
	return out;
}

inline bool read_line(std::istream& in, std::string& line) {
	if (!std::getline(in, line)) return false;
	if (!line.empty() && line.back() == '\r') line.pop_back();
	return true;
}

inline std::optional<double> parse_double(std::string_view text) {
	double v = 0.0;
	auto res = std::from_chars(text.data(), text.data() + text.size(), v);
	if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
	return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
	char buf[64];
	auto res = std::to_chars(buf, buf + sizeof buf, v);
	return std::string(buf, res.ptr);
}

} // namespace csv

inline std::ifstream open_input(const std::filesystem::path& path) {
	std::ifstream in(path);
	if (!in) throw Error(Errc::FileNotFound, path.string());
	return in;
}

// ---------------------------------------------------------------------------
// Station metadata

inline constexpr std::string_view kStationMetaHeader = "station_id,longitude,latitude,label";

inline std::vector<StationMeta> parse_station_meta(std::istream& in) {
	std::string line;
	if (!csv::read_line(in, line) || line != kStationMetaHeader)
		throw Error(Errc::MalformedRow, "line 1: expected header '" + std::string(kStationMetaHeader) + "'");

	std::vector<StationMeta> stations;
	std::set<std::string> seen;
	std::size_t line_no = 1;
	while (csv::read_line(in, line)) {
		++line_no;
		if (line.empty()) continue;
		const auto where = "line " + std::to_string(line_no);
		auto fields = csv::split(line);
		if (fields.size() < 3 || fields.size() > 4) throw Error(Errc::MalformedRow, where + ": expected 4 fields");
		const auto lon = csv::parse_double(fields[1]);
		const auto lat = csv::parse_double(fields[2]);
		if (fields[0].empty() || !lon || !lat) throw Error(Errc::MalformedRow, where);

		StationMeta meta{fields[0], *lon, *lat, fields.size() == 4 ? fields[3] : std::string{}};
		if (!coordinates_in_range(meta.position()))
			throw Error(Errc::CoordinateOutOfRange, where + ": station " + meta.station_id);
		if (!seen.insert(meta.station_id).second)
			throw Error(Errc::DuplicateStationId, where + ": station " + meta.station_id);
		stations.push_back(std::move(meta));
	}
	return stations;
}

inline std::vector<StationMeta> parse_station_meta(const std::filesystem::path& path) {
	auto in = open_input(path);
	return parse_station_meta(in);
}

inline void write_station_meta(std::ostream& out, std::span<const StationMeta> stations) {
	out << kStationMetaHeader << '\n';
	for (const auto& s : stations)
		out << csv::quote_if_needed(s.station_id) << ',' << csv::format_double(s.longitude) << ','
		    << csv::format_double(s.latitude) << ',' << csv::quote_if_needed(s.label) << '\n';
}

// ---------------------------------------------------------------------------
// Observations

inline constexpr std::string_view kObservationHeader = "station_id,timestamp,variable,value";

/// Parses long-format observations into one series per (station, variable),
/// sorted by station id then variable. Each series is anchored at midnight of
/// its earliest timestamp and ends at its latest timestamp.
inline std::vector<StationSeries> parse_observations(std::istream& in, Cadence cadence = kDefaultCadence) {
	if (cadence <= Cadence::zero() || kOneDay % cadence != Cadence::zero())
		throw Error(Errc::InvalidConfig, "cadence must be positive and divide one day");

	std::string line;
	if (!csv::read_line(in, line) || line != kObservationHeader)
		throw Error(Errc::MalformedRow, "line 1: expected header '" + std::string(kObservationHeader) + "'");

	enum class Kind { Value, Empty, Null };
	struct Row {
		TimePoint time;
		Kind kind;
		double value;
		std::size_t line_no;
	};
	std::map<std::pair<std::string, Variable>, std::vector<Row>> groups;

	std::size_t line_no = 1;
	while (csv::read_line(in, line)) {
		++line_no;
		if (line.empty()) continue;
		const auto where = "line " + std::to_string(line_no);
		auto fields = csv::split(line);
		if (fields.size() != 4 || fields[0].empty()) throw Error(Errc::MalformedRow, where);
		const auto tp = parse_timestamp(fields[1]);
		if (!tp) throw Error(Errc::MalformedRow, where + ": bad timestamp '" + fields[1] + "'");
		const auto var = variable_from_string(fields[2]);
		if (!var) throw Error(Errc::UnknownVariable, where + ": '" + fields[2] + "'");

		Row row{*tp, Kind::Value, 0.0, line_no};
		if (fields[3].empty()) {
			row.kind = Kind::Empty;
		} else if (fields[3] == "null") {
			row.kind = Kind::Null;
		} else {
			const auto v = csv::parse_double(fields[3]);
			if (!v) throw Error(Errc::UnparseableValue, where + ": '" + fields[3] + "'");
			row.value = *v;
		}
		groups[{fields[0], *var}].push_back(row);
	}

	std::vector<StationSeries> result;
	result.reserve(groups.size());
	for (auto& [key, rows] : groups) {
		StationSeries s;
		s.station_id = key.first;
		s.variable = key.second;
		s.cadence = cadence;
		const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
		                                          [](const Row& a, const Row& b) { return a.time < b.time; });
		s.start = day_floor(lo->time);
		s.slots.assign(static_cast<std::size_t>((hi->time - s.start) / cadence) + 1, std::nullopt);
		std::vector<bool> filled(s.slots.size(), false);
		for (const auto& row : rows) {
			const auto offset = row.time - s.start;
			if (offset % cadence != Cadence::zero())
				throw Error(Errc::OffGridTimestamp, "line " + std::to_string(row.line_no) + ": " + format_timestamp(row.time));
			const auto idx = static_cast<std::size_t>(offset / cadence);
			if (filled[idx])
				throw Error(Errc::DuplicateSlot, "line " + std::to_string(row.line_no) + ": " + key.first + " " +
				                                     std::string(to_string(key.second)) + " " + format_timestamp(row.time));
			filled[idx] = true;
			if (row.kind == Kind::Value) s.slots[idx] = row.value;
			if (row.kind == Kind::Null) s.null_slots.push_back(idx);
		}
		std::sort(s.null_slots.begin(), s.null_slots.end());
		result.push_back(std::move(s));
	}
	return result;
}

inline std::vector<StationSeries> parse_observations(const std::filesystem::path& path, Cadence cadence = kDefaultCadence) {
	auto in = open_input(path);
	return parse_observations(in, cadence);
}

/// Writes one row per slot, missing slots included (empty value, or `null`
/// for slots listed in `null_slots`).
inline void write_observations(std::ostream& out, std::span<const StationSeries> series) {
	out << kObservationHeader << '\n';
	for (const auto& s : series) {
		const auto var = to_string(s.variable);
		const auto id = csv::quote_if_needed(s.station_id);
		for (std::size_t i = 0; i < s.slots.size(); ++i) {
			out << id << ',' << format_timestamp(s.time_at(i)) << ',' << var << ',';
			if (s.slots[i])
				out << csv::format_double(*s.slots[i]);
			else if (s.is_null(i))
				out << "null";
			out << '\n';
		}
	}
}

inline void write_observations(const std::filesystem::path& path, std::span<const StationSeries> series) {
	std::ofstream out(path, std::ios::binary);
	if (!out) throw Error(Errc::Io, "cannot write " + path.string());
	write_observations(out, series);
}

inline void sort_series(std::vector<StationSeries>& series) {
	std::sort(series.begin(), series.end(), [](const StationSeries& a, const StationSeries& b) {
		return std::tie(a.station_id, a.variable) < std::tie(b.station_id, b.variable);
	});
}

// ---------------------------------------------------------------------------
// Gap detection

inline std::vector<GapSpan> detect_gaps(const StationSeries& series) {
	std::vector<GapSpan> gaps;
	const auto n = series.slots.size();
	std::size_t i = 0;
	while (i < n) {
		if (series.slots[i]) {
			++i;
			continue;
		}
		std::size_t j = i;
		while (j < n && !series.slots[j]) ++j;
		gaps.push_back({i, j - i, classify_gap(j - i, series.cadence)});
		i = j;
	}
	return gaps;
}

// ---------------------------------------------------------------------------
// Validation

struct Bounds {
	double min = 0.0;
	double max = 0.0;

	bool contains(double v) const { return v >= min && v <= max; }
};

struct PlausibilityBounds {
	Bounds temperature{-35.2, 60.0};
	Bounds rainfall{0.0, 500.0};

	const Bounds& operator[](Variable v) const { return v == Variable::Temperature ? temperature : rainfall; }
	Bounds& operator[](Variable v) { return v == Variable::Temperature ? temperature : rainfall; }
};

struct ValidationEntry {
	std::string station_id;
	Variable variable = Variable::Temperature;
	int year = 0;
	std::size_t expected_records = 0;
	std::size_t present_records = 0;
	std::size_t null_records = 0;
	std::size_t missing_records = 0;
	std::size_t out_of_bounds_records = 0;
	std::size_t short_gaps = 0;
	std::size_t long_gaps = 0;
};

struct ValidationReport {
	Cadence cadence = kDefaultCadence;
	PlausibilityBounds bounds;
	std::vector<ValidationEntry> entries;
	std::vector<std::string> stations_without_meta;
};

/// Number of cadence slots expected for `days` whole days.
inline std::size_t expected_records(std::size_t days, Cadence cadence = kDefaultCadence) {
	return days * slots_per_day(cadence);
}

/// Counts records per (station, variable, calendar year). Each series is viewed
/// over whole days, from midnight of its first slot to the end of the day of its
/// last slot; slots outside the stored vector count as missing. Gaps are
/// attributed to the year of their first slot.
inline ValidationReport validate(std::span<const StationSeries> series, const PlausibilityBounds& bounds = {}) {
	for (auto v : {Variable::Temperature, Variable::Rainfall})
		if (!(bounds[v].min < bounds[v].max))
			throw Error(Errc::InvalidConfig, "bounds for " + std::string(to_string(v)) + " must satisfy min < max");

	ValidationReport report;
	report.bounds = bounds;
	if (!series.empty()) report.cadence = series.front().cadence;

	for (const auto& s : series) {
		if (s.slots.empty()) {
			ValidationEntry e;
			e.station_id = s.station_id;
			e.variable = s.variable;
			e.year = static_cast<int>(civil_date(s.start).year());
			report.entries.push_back(e);
			continue;
		}

		// Whole-day view of the series.
		const TimePoint view_start = day_floor(s.start);
		const TimePoint view_end = day_floor(s.time_at(s.slots.size() - 1)) + kOneDay;
		const auto lead = static_cast<std::size_t>((s.start - view_start) / s.cadence);
		const auto total = static_cast<std::size_t>((view_end - view_start) / s.cadence);
		enum class State : unsigned char { Present, Null, Missing };
		std::vector<State> state(total, State::Missing);
		std::vector<bool> oob(total, false);
		for (std::size_t i = 0; i < s.slots.size() && lead + i < total; ++i) {
			if (s.slots[i]) {
				state[lead + i] = State::Present;
				oob[lead + i] = !bounds[s.variable].contains(*s.slots[i]);
			} else if (s.is_null(i)) {
				state[lead + i] = State::Null;
			}
		}

		std::map<int, ValidationEntry> per_year;
		auto entry_for = [&](std::size_t pos) -> ValidationEntry& {
			const int y = static_cast<int>(civil_date(view_start + s.cadence * static_cast<long long>(pos)).year());
			auto [it, inserted] = per_year.try_emplace(y);
			if (inserted) {
				it->second.station_id = s.station_id;
				it->second.variable = s.variable;
				it->second.year = y;
			}
			return it->second;
		};

		const std::size_t per_day = slots_per_day(s.cadence);
		for (std::size_t day_pos = 0; day_pos < total; day_pos += per_day) {
			auto& e = entry_for(day_pos);
			for (std::size_t pos = day_pos; pos < day_pos + per_day; ++pos) {
				++e.expected_records;
				switch (state[pos]) {
				case State::Present: ++e.present_records; break;
				case State::Null: ++e.null_records; break;
				case State::Missing: ++e.missing_records; break;
				}
				if (oob[pos]) ++e.out_of_bounds_records;
			}
		}

		std::size_t pos = 0;
		while (pos < total) {
			if (state[pos] == State::Present) {
				++pos;
				continue;
			}
			std::size_t end = pos;
			while (end < total && state[end] != State::Present) ++end;
			auto& e = entry_for(pos);
			if (classify_gap(end - pos, s.cadence) == GapClass::Short)
				++e.short_gaps;
			else
				++e.long_gaps;
			pos = end;
		}

		for (auto& [year, e] : per_year) report.entries.push_back(std::move(e));
	}
	return report;
}

inline ValidationReport validate(std::span<const StationSeries> series, std::span<const StationMeta> stations,
                                 const PlausibilityBounds& bounds = {}) {
	auto report = validate(series, bounds);
	std::set<std::string> known;
	for (const auto& m : stations) known.insert(m.station_id);
	std::set<std::string> unknown;
	for (const auto& s : series)
		if (!known.count(s.station_id)) unknown.insert(s.station_id);
	report.stations_without_meta.assign(unknown.begin(), unknown.end());
	return report;
}

inline nlohmann::ordered_json to_json(const ValidationReport& report) {
	using nlohmann::ordered_json;
	ordered_json bounds = ordered_json::object();
	for (auto v : {Variable::Temperature, Variable::Rainfall})
		bounds[std::string(to_string(v))] = {{"min", report.bounds[v].min}, {"max", report.bounds[v].max}};

	ordered_json entries = ordered_json::array();
	for (const auto& e : report.entries) {
		ordered_json hist = ordered_json::object();
		if (e.short_gaps) hist["short"] = e.short_gaps;
		if (e.long_gaps) hist["long"] = e.long_gaps;
		entries.push_back({{"station_id", e.station_id},
		                   {"variable", to_string(e.variable)},
		                   {"year", e.year},
		                   {"expected_records", e.expected_records},
		                   {"present_records", e.present_records},
		                   {"null_records", e.null_records},
		                   {"missing_records", e.missing_records},
		                   {"out_of_bounds_records", e.out_of_bounds_records},
		                   {"gap_histogram", hist}});
	}

	ordered_json j;
	j["cadence_seconds"] = report.cadence.count();
	j["bounds"] = bounds;
	j["entries"] = entries;
	j["stations_without_meta"] = report.stations_without_meta;
	return j;
}

} // namespace metfill
