#pragma once

// Fill methods: linear interpolation for short gaps, and the four
// neighbour-based estimators (normal ratio, inverse squared coordinate offset,
// their product, nearest-neighbour cascade) for long gaps.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metfill/error.hpp"
#include "metfill/model.hpp"

namespace metfill {

inline constexpr std::size_t kDefaultCascadeDepth = 3;

namespace detail {

inline ImputedValue finish(const NeighbourSet& ns, ImputedValue iv) {
	if (ns.variable == Variable::Rainfall && iv.value < 0.0) {
		iv.value = 0.0;
		iv.clamped = true;
	}
	return iv;
}

inline void check_obs(const NeighbourSet& ns, std::span<const std::optional<double>> obs) {
	if (obs.size() != ns.size())
		throw Error(Errc::InvalidConfig, "expected " + std::to_string(ns.size()) + " neighbour observations, got " +
		                                     std::to_string(obs.size()));
}

inline double mean_ratio(const Neighbour& nb) { return nb.target_mean / nb.neighbour_mean; }

} // namespace detail

// ---------------------------------------------------------------------------
// Short gaps

inline std::vector<ImputedValue> linear_interpolate(const StationSeries& series, const GapSpan& gap) {
	if (gap.length == 0 || classify_gap(gap.length, series.cadence) != GapClass::Short)
		throw Error(Errc::NotShortGap, series.station_id + " slot " + std::to_string(gap.first_slot));
	if (gap.first_slot == 0 || gap.end_slot() >= series.slots.size() || !series.slots[gap.first_slot - 1] ||
	    !series.slots[gap.end_slot()])
		throw Error(Errc::BoundaryMissing, series.station_id + " slot " + std::to_string(gap.first_slot));

	const double prev = *series.slots[gap.first_slot - 1];
	const double next = *series.slots[gap.end_slot()];
	const double step = (next - prev) / static_cast<double>(gap.length + 1);
	std::vector<ImputedValue> out;
	out.reserve(gap.length);
	for (std::size_t j = 1; j <= gap.length; ++j) {
		ImputedValue iv;
		iv.value = prev + static_cast<double>(j) * step;
		iv.method = FillMethod::LinearInterp;
		iv.slot = gap.first_slot + j - 1;
		if (series.variable == Variable::Rainfall && iv.value < 0.0) {
			iv.value = 0.0;
			iv.clamped = true;
		}
		out.push_back(std::move(iv));
	}
	return out;
}

// ---------------------------------------------------------------------------
// Long gaps

/// Normalized weights over the contributing neighbours. When a contributing
/// neighbour sits at zero offset from the target, `coincident` names it and
/// the weights are left empty.
struct ContributingWeights {
	std::vector<std::size_t> contributors;
	std::vector<double> weights;
	std::optional<std::size_t> coincident;
};

namespace detail {

inline ContributingWeights offset_weights(const NeighbourSet& ns, std::span<const std::optional<double>> obs,
                                          bool with_mean_ratio) {
	check_obs(ns, obs);
	ContributingWeights cw;
	bool any_present = false;
	for (std::size_t i = 0; i < ns.size(); ++i) {
		if (!obs[i]) continue;
		any_present = true;
		if (with_mean_ratio && ns.neighbours[i].neighbour_mean == 0.0) continue;
		cw.contributors.push_back(i);
	}
	if (!any_present) throw Error(Errc::NoNeighbourData, ns.target.station_id);
	if (cw.contributors.empty()) throw Error(Errc::ZeroNeighbourMean, ns.target.station_id);

	for (auto i : cw.contributors) {
		if (ns.neighbours[i].offset.squared_norm() == 0.0) {
			cw.coincident = i;
			cw.contributors = {i};
			return cw;
		}
	}

	double total = 0.0;
	for (auto i : cw.contributors) {
		const auto& nb = ns.neighbours[i];
		double w = 1.0 / nb.offset.squared_norm();
		if (with_mean_ratio) w *= mean_ratio(nb);
		cw.weights.push_back(w);
		total += w;
	}
	if (total == 0.0 || !std::isfinite(total)) throw Error(Errc::DegenerateWeights, ns.target.station_id);
	for (auto& w : cw.weights) w /= total;
	return cw;
}

inline ImputedValue weighted_estimate(const NeighbourSet& ns, std::size_t slot, std::span<const std::optional<double>> obs,
                                      const ContributingWeights& cw, FillMethod method) {
	ImputedValue iv;
	iv.method = method;
	iv.slot = slot;
	if (cw.coincident) {
		iv.value = *obs[*cw.coincident];
		iv.degenerate = true;
		iv.contributing_stations = {ns.neighbours[*cw.coincident].station.station_id};
		return finish(ns, std::move(iv));
	}
	double value = 0.0;
	for (std::size_t j = 0; j < cw.contributors.size(); ++j) {
		const auto i = cw.contributors[j];
		value += cw.weights[j] * *obs[i];
		iv.contributing_stations.push_back(ns.neighbours[i].station.station_id);
	}
	iv.value = value;
	return finish(ns, std::move(iv));
}

} // namespace detail

/// Weights w_i = (1/(dlon_i^2 + dlat_i^2)) / sum_j (1/(dlon_j^2 + dlat_j^2)) over
/// neighbours present at the slot.
inline ContributingWeights gc_weights(const NeighbourSet& ns, std::span<const std::optional<double>> obs) {
	return detail::offset_weights(ns, obs, false);
}

/// GC weights multiplied by the mean ratio M_s/M_i, renormalized. Neighbours
/// with M_i = 0 are excluded.
inline ContributingWeights nrgc_weights(const NeighbourSet& ns, std::span<const std::optional<double>> obs) {
	return detail::offset_weights(ns, obs, true);
}

/// Normal ratio: (1/T') * sum (M_s/M_i) * Y_i over the T' neighbours present at
/// `slot` with a nonzero mean.
inline ImputedValue impute_nr(const NeighbourSet& ns, std::size_t slot, std::span<const std::optional<double>> obs) {
	detail::check_obs(ns, obs);
	ImputedValue iv;
	iv.method = FillMethod::NR;
	iv.slot = slot;
	bool any_present = false;
	double sum = 0.0;
	std::size_t used = 0;
	for (std::size_t i = 0; i < ns.size(); ++i) {
		if (!obs[i]) continue;
		any_present = true;
		const auto& nb = ns.neighbours[i];
		if (nb.neighbour_mean == 0.0) continue;
		sum += detail::mean_ratio(nb) * *obs[i];
		++used;
		iv.contributing_stations.push_back(nb.station.station_id);
	}
	if (!any_present) throw Error(Errc::NoNeighbourData, ns.target.station_id);
	if (used == 0) throw Error(Errc::ZeroNeighbourMean, ns.target.station_id);
	iv.value = sum / static_cast<double>(used);
	return detail::finish(ns, std::move(iv));
}

inline ImputedValue impute_gc(const NeighbourSet& ns, std::size_t slot, std::span<const std::optional<double>> obs) {
	return detail::weighted_estimate(ns, slot, obs, gc_weights(ns, obs), FillMethod::GC);
}

inline ImputedValue impute_nrgc(const NeighbourSet& ns, std::size_t slot, std::span<const std::optional<double>> obs) {
	return detail::weighted_estimate(ns, slot, obs, nrgc_weights(ns, obs), FillMethod::NRGC);
}

/// Long-term mean per calendar month (index 0 = January) over all present
/// values of the series, across years.
using MonthlyMeans = std::array<std::optional<double>, 12>;

inline MonthlyMeans long_term_monthly_means(const StationSeries& series) {
	std::array<double, 12> sum{};
	std::array<std::size_t, 12> count{};
	// Walk day by day so the calendar conversion happens once per day.
	std::size_t i = 0;
	while (i < series.slots.size()) {
		const TimePoint tp = series.time_at(i);
		const auto month_idx = static_cast<unsigned>(civil_date(tp).month()) - 1;
		const auto remaining = day_floor(tp) + kOneDay - tp;
		const auto in_day = static_cast<std::size_t>((remaining + series.cadence - Cadence{1}) / series.cadence);
		const auto day_end = std::min(series.slots.size(), i + in_day);
		for (; i < day_end; ++i) {
			if (!series.slots[i]) continue;
			sum[month_idx] += *series.slots[i];
			++count[month_idx];
		}
	}
	MonthlyMeans means;
	for (std::size_t m = 0; m < 12; ++m)
		if (count[m]) means[m] = sum[m] / static_cast<double>(count[m]);
	return means;
}

/// Calendar month (1-12) of a slot.
inline unsigned month_of(const StationSeries& series, std::size_t slot) {
	return static_cast<unsigned>(civil_date(series.time_at(slot)).month());
}

/// Nearest-neighbour cascade: the first of the `depth` nearest neighbours with
/// a value at the slot is transferred unchanged; if none has one, the target's
/// long-term mean for `month` (1-12) is used.
inline ImputedValue impute_nn(const NeighbourSet& ns, std::size_t slot, std::span<const std::optional<double>> obs,
                              const MonthlyMeans& target_means, unsigned month, std::size_t depth = kDefaultCascadeDepth) {
	detail::check_obs(ns, obs);
	if (ns.size() == 0) throw Error(Errc::NoCandidates, ns.target.station_id);
	if (month < 1 || month > 12) throw Error(Errc::InvalidConfig, "month out of range");

	ImputedValue iv;
	iv.slot = slot;
	const auto walk = std::min(depth, ns.size());
	for (std::size_t i = 0; i < walk; ++i) {
		if (!obs[i]) continue;
		iv.value = *obs[i];
		iv.method = FillMethod::NN;
		iv.contributing_stations = {ns.neighbours[i].station.station_id};
		return detail::finish(ns, std::move(iv));
	}
	const auto& fallback = target_means[month - 1];
	if (!fallback)
		throw Error(Errc::NoFallbackMean, ns.target.station_id + " month " + std::to_string(month));
	iv.value = *fallback;
	iv.method = FillMethod::LongTermMeanFallback;
	return detail::finish(ns, std::move(iv));
}

/// Dispatches one long-gap method. `target_means` and `month` are only read by NN.
inline ImputedValue impute_long(MethodTag method, const NeighbourSet& ns, std::size_t slot,
                                std::span<const std::optional<double>> obs, const MonthlyMeans& target_means,
                                unsigned month, std::size_t depth = kDefaultCascadeDepth) {
	switch (method) {
	case MethodTag::NR: return impute_nr(ns, slot, obs);
	case MethodTag::GC: return impute_gc(ns, slot, obs);
	case MethodTag::NRGC: return impute_nrgc(ns, slot, obs);
	case MethodTag::NN: return impute_nn(ns, slot, obs, target_means, month, depth);
	case MethodTag::LinearInterp: break;
	}
	throw Error(Errc::InvalidConfig, "linear interpolation is not a long-gap method");
}

} // namespace metfill
