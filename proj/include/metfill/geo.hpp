#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metfill/error.hpp"
#include "metfill/model.hpp"

namespace metfill {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance on a sphere of radius 6371 km.
inline double haversine_km(GeoPoint a, GeoPoint b) {
	constexpr double deg = std::numbers::pi / 180.0;
	const double phi1 = a.latitude * deg;
	const double phi2 = b.latitude * deg;
	const double dphi = (b.latitude - a.latitude) * deg;
	const double dlambda = (b.longitude - a.longitude) * deg;
	const double s1 = std::sin(dphi / 2.0);
	const double s2 = std::sin(dlambda / 2.0);
	const double h = std::clamp(s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2, 0.0, 1.0);
	return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

enum class Ranking { Geometric, Correlation };

/// Values of `other` resampled onto the slot grid of `reference` (same cadence,
/// same grid phase). Slots `other` does not cover are absent.
inline std::vector<std::optional<double>> align_to(const StationSeries& reference, const StationSeries& other) {
	if (reference.cadence != other.cadence || (other.start - reference.start) % reference.cadence != Cadence::zero())
		throw Error(Errc::MisalignedGrid, other.station_id + " is not on the grid of " + reference.station_id);
	std::vector<std::optional<double>> out(reference.slots.size());
	const long long shift = (other.start - reference.start) / reference.cadence;
	const auto n = static_cast<long long>(reference.slots.size());
	const auto m = static_cast<long long>(other.slots.size());
	const long long lo = std::max(0LL, shift);
	const long long hi = std::min(n, shift + m);
	for (long long i = lo; i < hi; ++i) out[static_cast<std::size_t>(i)] = other.slots[static_cast<std::size_t>(i - shift)];
	return out;
}

struct OverlapStats {
	double target_mean = 0.0;
	double neighbour_mean = 0.0;
	std::size_t count = 0;
	double correlation = std::nan("");
};

/// Means (and Pearson correlation) of both sequences over the slots where both
/// are present.
inline OverlapStats overlap_stats(std::span<const std::optional<double>> target,
                                  std::span<const std::optional<double>> neighbour) {
	OverlapStats st;
	const auto n = std::min(target.size(), neighbour.size());
	double sum_t = 0.0, sum_n = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		if (!target[i] || !neighbour[i]) continue;
		sum_t += *target[i];
		sum_n += *neighbour[i];
		++st.count;
	}
	if (st.count == 0) return st;
	st.target_mean = sum_t / static_cast<double>(st.count);
	st.neighbour_mean = sum_n / static_cast<double>(st.count);

	double sxy = 0.0, sxx = 0.0, syy = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		if (!target[i] || !neighbour[i]) continue;
		const double dx = *target[i] - st.target_mean;
		const double dy = *neighbour[i] - st.neighbour_mean;
		sxy += dx * dy;
		sxx += dx * dx;
		syy += dy * dy;
	}
	if (sxx > 0.0 && syy > 0.0) st.correlation = sxy / std::sqrt(sxx * syy);
	return st;
}

namespace detail {

inline const StationSeries* find_series(std::span<const StationSeries> series, const std::string& id,
                                        std::optional<Variable> variable = std::nullopt) {
	for (const auto& s : series)
		if (s.station_id == id && (!variable || s.variable == *variable)) return &s;
	return nullptr;
}

} // namespace detail

/// Builds the ranked neighbour set of `target` using `target_series` as the
/// target's data (it may differ from the copy in `series`, e.g. when masked).
///
/// Geometric ranking takes the `k` nearest candidates by haversine distance,
/// ties broken by station id. Correlation ranking takes the `k` candidates
/// with the highest Pearson correlation over the pairwise overlap, ties broken
/// by distance then id. Selected candidates with no overlap are excluded and
/// listed in `excluded`; the slot is not refilled from further candidates.
inline NeighbourSet build_neighbour_set(const StationMeta& target, const StationSeries& target_series,
                                        std::span<const StationMeta> candidates, std::size_t k,
                                        std::span<const StationSeries> series, Ranking rank = Ranking::Geometric) {
	if (k == 0) throw Error(Errc::InvalidConfig, "neighbour count must be at least 1");

	struct Candidate {
		const StationMeta* meta;
		const StationSeries* series;
		double distance_km;
		std::optional<OverlapStats> stats;
	};
	std::vector<Candidate> pool;
	for (const auto& c : candidates) {
		if (c.station_id == target.station_id) continue;
		const auto* cs = detail::find_series(series, c.station_id, target_series.variable);
		if (!cs) continue;
		pool.push_back({&c, cs, haversine_km(target.position(), c.position()), std::nullopt});
	}
	if (k > pool.size())
		throw Error(Errc::NoCandidates, target.station_id + ": requested " + std::to_string(k) + " neighbours, " +
		                                    std::to_string(pool.size()) + " available");

	auto compute_stats = [&](Candidate& c) {
		if (c.stats) return;
		const auto aligned = align_to(target_series, *c.series);
		c.stats = overlap_stats(target_series.slots, aligned);
	};

	auto by_distance = [](const Candidate& a, const Candidate& b) {
		if (a.distance_km != b.distance_km) return a.distance_km < b.distance_km;
		return a.meta->station_id < b.meta->station_id;
	};
	if (rank == Ranking::Geometric) {
		std::sort(pool.begin(), pool.end(), by_distance);
	} else {
		for (auto& c : pool) compute_stats(c);
		std::sort(pool.begin(), pool.end(), [&](const Candidate& a, const Candidate& b) {
			const double ca = std::isnan(a.stats->correlation) ? -2.0 : a.stats->correlation;
			const double cb = std::isnan(b.stats->correlation) ? -2.0 : b.stats->correlation;
			if (ca != cb) return ca > cb;
			return by_distance(a, b);
		});
	}
	pool.resize(k);

	NeighbourSet ns;
	ns.target = target;
	ns.variable = target_series.variable;
	for (auto& c : pool) {
		compute_stats(c);
		if (c.stats->count == 0) {
			ns.excluded.push_back(c.meta->station_id);
			continue;
		}
		Neighbour nb;
		nb.station = *c.meta;
		nb.distance_km = c.distance_km;
		nb.offset = {c.meta->longitude - target.longitude, c.meta->latitude - target.latitude};
		nb.target_mean = c.stats->target_mean;
		nb.neighbour_mean = c.stats->neighbour_mean;
		nb.overlap = c.stats->count;
		nb.correlation = c.stats->correlation;
		ns.neighbours.push_back(std::move(nb));
	}
	if (ns.neighbours.empty())
		throw Error(Errc::EmptyOverlap, target.station_id + ": no selected neighbour shares a present slot with the target");
	return ns;
}

/// Same as above with the target's own series looked up in `series`.
inline NeighbourSet build_neighbour_set(const StationMeta& target, std::span<const StationMeta> candidates, std::size_t k,
                                        std::span<const StationSeries> series, Ranking rank = Ranking::Geometric) {
	const auto* ts = detail::find_series(series, target.station_id);
	if (!ts) throw Error(Errc::NoTargetSeries, target.station_id);
	return build_neighbour_set(target, *ts, candidates, k, series, rank);
}

/// Each neighbour's series aligned onto the target grid, in neighbour order.
inline std::vector<std::vector<std::optional<double>>> aligned_neighbour_values(const NeighbourSet& ns,
                                                                                const StationSeries& target_series,
                                                                                std::span<const StationSeries> series) {
	std::vector<std::vector<std::optional<double>>> out;
	out.reserve(ns.size());
	for (const auto& nb : ns.neighbours) {
		const auto* s = detail::find_series(series, nb.station.station_id, ns.variable);
		if (!s) throw Error(Errc::NoTargetSeries, nb.station.station_id);
		out.push_back(align_to(target_series, *s));
	}
	return out;
}

} // namespace metfill
