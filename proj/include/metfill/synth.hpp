#pragma once

// Synthetic multi-station weather data: a stand-in for real station networks
// when none can be shipped. Temperature is seasonal + diurnal + spatially
// correlated AR(1) noise; rainfall is storm bursts shared by nearby stations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "metfill/eval.hpp"
#include "metfill/geo.hpp"
#include "metfill/model.hpp"

namespace metfill {

struct SynthOptions {
	std::size_t stations = 12;
	std::size_t days = 365;
	std::uint64_t seed = 7;
	// Multiplies every stochastic amplitude; 0 leaves only the deterministic signal.
	double noise_scale = 1.0;
	TimePoint start = make_date(2014, 1, 1);
	Cadence cadence = kDefaultCadence;
};

namespace synth_detail {

// Station box, roughly southern Britain.
inline constexpr double kLonMin = -4.5, kLonMax = -0.5;
inline constexpr double kLatMin = 50.5, kLatMax = 53.5;

inline constexpr double kTempMean = 10.0;
inline constexpr double kLapsePerDegLat = -0.6;
inline constexpr double kSeasonalAmp = 6.5;
inline constexpr double kDiurnalAmp = 4.0;
inline constexpr double kTempNoiseSd = 2.0;
inline constexpr double kTempWhiteSd = 0.3;
inline constexpr double kTempSharedFraction = 0.5;
inline constexpr double kTempCorrLengthKm = 80.0;
inline constexpr double kTempMemoryHours = 6.0;

inline constexpr double kStormsPerDay = 2.0;
inline constexpr double kStormMeanSlots = 8.0;
inline constexpr double kStormMeanIntensity = 0.8; // mm per slot at the centre
inline constexpr double kRainNoiseSd = 0.3;        // lognormal sigma
inline constexpr double kRainDetectionMm = 0.05;

inline double round2(double v) { return std::round(v * 100.0) / 100.0 + 0.0; }

inline std::uint64_t stream(std::uint64_t seed, std::uint64_t tag) {
	return detail::splitmix64(detail::splitmix64(seed) ^ tag);
}

} // namespace synth_detail

/// Deterministic in `opts`. Series come back sorted by (station, variable)
/// and complete (no missing slots).
inline Dataset synth_dataset(const SynthOptions& opts) {
	using namespace synth_detail;
	if (opts.stations < 2) throw Error(Errc::InvalidConfig, "synthetic dataset needs at least 2 stations");
	if (opts.cadence <= Cadence::zero() || kOneDay % opts.cadence != Cadence::zero())
		throw Error(Errc::InvalidConfig, "cadence must divide one day");
	const std::size_t n = opts.stations;
	const std::size_t per_day = slots_per_day(opts.cadence);
	const std::size_t n_slots = opts.days * per_day;
	const double slot_hours = std::chrono::duration<double, std::ratio<3600>>(opts.cadence).count();

	Dataset data;
	{
		std::mt19937_64 rng(stream(opts.seed, 1));
		std::uniform_real_distribution<double> lon(kLonMin, kLonMax), lat(kLatMin, kLatMax);
		while (data.stations.size() < n) {
			const double x = std::round(lon(rng) * 1000.0) / 1000.0;
			const double y = std::round(lat(rng) * 1000.0) / 1000.0;
			bool clash = false;
			for (const auto& s : data.stations) clash = clash || (s.longitude == x && s.latitude == y);
			if (clash) continue;
			const auto idx = data.stations.size() + 1;
			char id[32];
			std::snprintf(id, sizeof id, "S%02zu", idx);
			data.stations.push_back({id, x, y, "Synthetic station " + std::to_string(idx)});
		}
	}

	Eigen::MatrixXd dist(n, n);
	for (std::size_t i = 0; i < n; ++i)
		for (std::size_t j = 0; j < n; ++j)
			dist(i, j) = haversine_km(data.stations[i].position(), data.stations[j].position());

	std::vector<StationSeries> temperature(n), rainfall(n);
	for (std::size_t i = 0; i < n; ++i) {
		for (auto* s : {&temperature[i], &rainfall[i]}) {
			s->station_id = data.stations[i].station_id;
			s->start = opts.start;
			s->cadence = opts.cadence;
			s->slots.resize(n_slots);
		}
		temperature[i].variable = Variable::Temperature;
		rainfall[i].variable = Variable::Rainfall;
	}

	// Temperature: shared + distance-decaying covariance, AR(1) in time.
	{
		Eigen::MatrixXd cov(n, n);
		for (std::size_t i = 0; i < n; ++i)
			for (std::size_t j = 0; j < n; ++j)
				cov(i, j) = kTempSharedFraction + (1.0 - kTempSharedFraction) * std::exp(-std::pow(dist(i, j) / kTempCorrLengthKm, 2.0));
		cov.diagonal().array() += 1e-9;
		const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();

		std::mt19937_64 rng(stream(opts.seed, 2));
		std::normal_distribution<double> normal(0.0, 1.0);
		const double phi = std::exp(-slot_hours / kTempMemoryHours);
		const double innovation = std::sqrt(1.0 - phi * phi);
		Eigen::VectorXd state = Eigen::VectorXd::Zero(n), z(n), white(n);
		for (std::size_t i = 0; i < n; ++i) z(i) = normal(rng);
		state = chol * z;
		for (std::size_t t = 0; t < n_slots; ++t) {
			for (std::size_t i = 0; i < n; ++i) z(i) = normal(rng);
			for (std::size_t i = 0; i < n; ++i) white(i) = normal(rng);
			state = phi * state + innovation * (chol * z);

			const TimePoint tp = opts.start + opts.cadence * static_cast<long long>(t);
			const auto day = std::chrono::floor<std::chrono::days>(tp);
			const auto ymd = std::chrono::year_month_day{day};
			const double year_frac =
			    static_cast<double>((day - std::chrono::sys_days{ymd.year() / std::chrono::January / 1}).count()) / 365.25;
			const double hour_frac = std::chrono::duration<double>(tp - day).count() / 86400.0;
			const double seasonal = kSeasonalAmp * std::sin(2.0 * std::numbers::pi * (year_frac - 0.3));
			const double diurnal = kDiurnalAmp * std::sin(2.0 * std::numbers::pi * (hour_frac - 0.375));
			for (std::size_t i = 0; i < n; ++i) {
				const double base = kTempMean + kLapsePerDegLat * (data.stations[i].latitude - 52.0);
				const double noise = opts.noise_scale * (kTempNoiseSd * state(i) + kTempWhiteSd * white(i));
				temperature[i].slots[t] = round2(base + seasonal + diurnal + noise);
			}
		}
	}

	// Rainfall: storms with a centre, radius and duration. A station joins a
	// storm with probability exp(-d/R) and then receives intensity decaying with
	// distance, times per-slot lognormal noise.
	{
		std::mt19937_64 storm_rng(stream(opts.seed, 3));
		std::mt19937_64 noise_rng(stream(opts.seed, 4));
		std::normal_distribution<double> normal(0.0, 1.0);
		std::vector<double> amount(n * n_slots, 0.0);
		const double storms_per_slot = kStormsPerDay / static_cast<double>(per_day);
		std::poisson_distribution<int> arrivals(storms_per_slot);
		std::uniform_real_distribution<double> lon(kLonMin - 0.5, kLonMax + 0.5), lat(kLatMin - 0.5, kLatMax + 0.5);
		std::uniform_real_distribution<double> radius(30.0, 120.0), unit(0.0, 1.0);
		std::geometric_distribution<int> duration(1.0 / kStormMeanSlots);
		std::exponential_distribution<double> intensity(1.0 / kStormMeanIntensity);

		for (std::size_t t = 0; t < n_slots; ++t) {
			for (int k = arrivals(storm_rng); k > 0; --k) {
				const GeoPoint centre{lon(storm_rng), lat(storm_rng)};
				const double r = radius(storm_rng);
				const auto len = static_cast<std::size_t>(duration(storm_rng)) + 1;
				const double peak = intensity(storm_rng);
				// One draw per storm: the footprint is the disc d < -r ln(u), so each
				// station still joins with probability exp(-d/r) but wet stations
				// are contiguous.
				const double u = unit(storm_rng);
				for (std::size_t i = 0; i < n; ++i) {
					const double d = haversine_km(centre, data.stations[i].position());
					if (u >= std::exp(-d / r)) continue;
					const double local = peak * std::exp(-(d / r) * (d / r));
					for (std::size_t s = t; s < std::min(n_slots, t + len); ++s) amount[i * n_slots + s] += local;
				}
			}
		}
		for (std::size_t i = 0; i < n; ++i) {
			for (std::size_t t = 0; t < n_slots; ++t) {
				const double eps = normal(noise_rng);
				double v = amount[i * n_slots + t];
				if (v > 0.0) v *= std::exp(opts.noise_scale * kRainNoiseSd * eps);
				v = round2(v);
				rainfall[i].slots[t] = v < kRainDetectionMm ? 0.0 : v;
			}
		}
	}

	for (std::size_t i = 0; i < n; ++i) {
		data.series.push_back(std::move(temperature[i]));
		data.series.push_back(std::move(rainfall[i]));
	}
	sort_series(data.series);
	return data;
}

} // namespace metfill
