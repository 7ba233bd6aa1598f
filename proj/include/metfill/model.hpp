#pragma once

// Domain types shared by every module. No I/O, no algorithms beyond trivial
// accessors.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metfill/error.hpp"
#include "metfill/timestamp.hpp"

namespace metfill {

struct GeoPoint {
	double longitude = 0.0;
	double latitude = 0.0;
};

inline bool coordinates_in_range(GeoPoint p) {
	return p.longitude >= -180.0 && p.longitude <= 180.0 && p.latitude >= -90.0 && p.latitude <= 90.0;
}

struct StationMeta {
	std::string station_id;
	double longitude = 0.0;
	double latitude = 0.0;
	std::string label;

	GeoPoint position() const { return {longitude, latitude}; }

	friend bool operator==(const StationMeta&, const StationMeta&) = default;
};

enum class Variable { Temperature, Rainfall };

constexpr std::string_view to_string(Variable v) {
	return v == Variable::Temperature ? "temperature" : "rainfall";
}

inline std::optional<Variable> variable_from_string(std::string_view text) {
	if (text == "temperature") return Variable::Temperature;
	if (text == "rainfall") return Variable::Rainfall;
	return std::nullopt;
}

/// One station, one variable, on a fixed cadence grid. Slot `i` is the
/// observation at `start + i * cadence`; an empty optional is a missing value.
struct StationSeries {
	std::string station_id;
	Variable variable = Variable::Temperature;
	TimePoint start{};
	Cadence cadence = kDefaultCadence;
	std::vector<std::optional<double>> slots;
	// Sorted indices of absent slots that arrived as a literal `null` rather than
	// an empty value or no row at all. Only the validation report cares.
	std::vector<std::size_t> null_slots;

	std::size_t size() const { return slots.size(); }

	TimePoint time_at(std::size_t slot) const { return start + cadence * static_cast<long long>(slot); }

	/// Grid index of `tp`, or nullopt when it is off-grid or outside the series.
	std::optional<std::size_t> slot_at(TimePoint tp) const {
		if (tp < start) return std::nullopt;
		const auto offset = tp - start;
		if (offset % cadence != Cadence::zero()) return std::nullopt;
		const auto idx = static_cast<std::size_t>(offset / cadence);
		if (idx >= slots.size()) return std::nullopt;
		return idx;
	}

	std::size_t present_count() const {
		return static_cast<std::size_t>(std::count_if(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); }));
	}

	bool is_null(std::size_t slot) const { return std::binary_search(null_slots.begin(), null_slots.end(), slot); }

	friend bool operator==(const StationSeries&, const StationSeries&) = default;
};

enum class GapClass { Short, Long };

constexpr std::string_view to_string(GapClass c) { return c == GapClass::Short ? "short" : "long"; }

/// Short iff the gap spans strictly less than one hour.
constexpr GapClass classify_gap(std::size_t length, Cadence cadence) {
	return cadence * static_cast<long long>(length) < std::chrono::hours{1} ? GapClass::Short : GapClass::Long;
}

struct GapSpan {
	std::size_t first_slot = 0;
	std::size_t length = 0;
	GapClass gap_class = GapClass::Short;

	std::size_t end_slot() const { return first_slot + length; }

	friend bool operator==(const GapSpan&, const GapSpan&) = default;
};

struct CoordinateOffset {
	double dlon = 0.0;
	double dlat = 0.0;

	double squared_norm() const { return dlon * dlon + dlat * dlat; }
};

struct Neighbour {
	StationMeta station;
	double distance_km = 0.0;
	CoordinateOffset offset;
	// Sample means over the pairwise-overlap window (slots where both target
	// and this neighbour are present).
	double target_mean = 0.0;
	double neighbour_mean = 0.0;
	std::size_t overlap = 0;
	// Pearson correlation over the same window; NaN when undefined.
	double correlation = std::nan("");
};

/// A target station plus its ranked neighbours. `neighbours.size()` is the
/// neighbour count used by every estimator.
struct NeighbourSet {
	StationMeta target;
	Variable variable = Variable::Temperature;
	std::vector<Neighbour> neighbours;
	// Nearest candidates dropped because they share no present slot with the target.
	std::vector<std::string> excluded;

	std::size_t size() const { return neighbours.size(); }
};

enum class MethodTag { LinearInterp, NR, GC, NRGC, NN };

enum class FillMethod { LinearInterp, NR, GC, NRGC, NN, LongTermMeanFallback };

constexpr std::string_view to_string(MethodTag m) {
	switch (m) {
	case MethodTag::LinearInterp: return "linear";
	case MethodTag::NR: return "nr";
	case MethodTag::GC: return "gc";
	case MethodTag::NRGC: return "nrgc";
	case MethodTag::NN: return "nn";
	}
	return "?";
}

constexpr std::string_view to_string(FillMethod m) {
	switch (m) {
	case FillMethod::LinearInterp: return "LinearInterp";
	case FillMethod::NR: return "NR";
	case FillMethod::GC: return "GC";
	case FillMethod::NRGC: return "NRGC";
	case FillMethod::NN: return "NN";
	case FillMethod::LongTermMeanFallback: return "LongTermMeanFallback";
	}
	return "?";
}

inline std::optional<MethodTag> method_from_string(std::string_view text) {
	for (auto m : {MethodTag::LinearInterp, MethodTag::NR, MethodTag::GC, MethodTag::NRGC, MethodTag::NN})
		if (text == to_string(m)) return m;
	return std::nullopt;
}

inline std::optional<FillMethod> fill_method_from_string(std::string_view text) {
	for (auto m : {FillMethod::LinearInterp, FillMethod::NR, FillMethod::GC, FillMethod::NRGC, FillMethod::NN,
	               FillMethod::LongTermMeanFallback})
		if (text == to_string(m)) return m;
	return std::nullopt;
}

struct ImputedValue {
	double value = 0.0;
	FillMethod method = FillMethod::LinearInterp;
	std::size_t slot = 0;
	std::vector<std::string> contributing_stations;
	bool clamped = false;    // negative rainfall estimate raised to 0
	bool degenerate = false; // coincident neighbour returned directly

	friend bool operator==(const ImputedValue&, const ImputedValue&) = default;
};

/// Station metadata plus every observation series (both variables).
struct Dataset {
	std::vector<StationMeta> stations;
	std::vector<StationSeries> series;

	const StationMeta* station(std::string_view id) const {
		for (const auto& m : stations)
			if (m.station_id == id) return &m;
		return nullptr;
	}

	friend bool operator==(const Dataset&, const Dataset&) = default;
};

} // namespace metfill
