#pragma once

// Mask-and-score benchmarking: hide known values, impute them back with each
// long-gap method and report RMSE per (station, variable, method, level).

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "metfill/error.hpp"
#include "metfill/geo.hpp"
#include "metfill/impute.hpp"
#include "metfill/ingest.hpp"
#include "metfill/model.hpp"

namespace metfill {

inline constexpr std::string_view kVersion = "metfill 0.1.0";

enum class MaskPattern { PointwiseRandom, BlockRandom };

struct MaskSpec {
	MaskPattern kind = MaskPattern::PointwiseRandom;
	std::size_t block_len = 1;

	friend bool operator==(const MaskSpec&, const MaskSpec&) = default;
};

inline std::string to_string(const MaskSpec& p) {
	return p.kind == MaskPattern::PointwiseRandom ? "point" : "block:" + std::to_string(p.block_len);
}

/// Parses `point` or `block:N`.
inline std::optional<MaskSpec> mask_spec_from_string(std::string_view text) {
	if (text == "point") return MaskSpec{};
	constexpr std::string_view prefix = "block:";
	if (text.substr(0, prefix.size()) != prefix) return std::nullopt;
	int len = 0;
	if (!detail::parse_fixed_int(text.substr(prefix.size()), len) || len < 1) return std::nullopt;
	return MaskSpec{MaskPattern::BlockRandom, static_cast<std::size_t>(len)};
}

// ---------------------------------------------------------------------------
// Seeded streams

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char c : text) {
		h ^= c;
		h *= 0x100000001b3ULL;
	}
	return h;
}

} // namespace detail

/// Seed of the masking stream for one (series, level, pattern). Independent of
/// evaluation order, so cells can run on any thread.
inline std::uint64_t mask_stream_seed(std::uint64_t seed, const StationSeries& series, double level, const MaskSpec& pattern) {
	std::uint64_t h = detail::splitmix64(seed);
	h = detail::splitmix64(h ^ detail::fnv1a(series.station_id));
	h = detail::splitmix64(h ^ static_cast<std::uint64_t>(series.variable));
	h = detail::splitmix64(h ^ std::bit_cast<std::uint64_t>(level));
	h = detail::splitmix64(h ^ detail::fnv1a(to_string(pattern)));
	return h;
}

// ---------------------------------------------------------------------------
// Missingness injection

struct MaskResult {
	StationSeries masked;
	std::vector<std::size_t> mask; // sorted slot indices hidden from the method
};

/// Hides exactly round(level * present) present slots. Level 0 yields an empty
/// mask; otherwise level must lie in (0, 1), the series must hold at least
/// ceil(1/level) present slots and at least one present slot must survive.
inline MaskResult inject_missingness(const StationSeries& series, double level, const MaskSpec& pattern, std::uint64_t seed) {
	if (!(level >= 0.0 && level < 1.0)) throw Error(Errc::LevelInfeasible, "level must lie in [0, 1)");
	if (pattern.kind == MaskPattern::BlockRandom && pattern.block_len == 0)
		throw Error(Errc::InvalidConfig, "block length must be at least 1");

	MaskResult result{series, {}};
	if (level == 0.0) return result;

	std::vector<std::size_t> present;
	for (std::size_t i = 0; i < series.slots.size(); ++i)
		if (series.slots[i]) present.push_back(i);
	if (static_cast<double>(present.size()) < std::ceil(1.0 / level))
		throw Error(Errc::LevelInfeasible, series.station_id + ": too few present slots for level " + std::to_string(level));
	const auto n = static_cast<std::size_t>(std::llround(level * static_cast<double>(present.size())));
	if (n >= present.size()) throw Error(Errc::LevelInfeasible, series.station_id + ": mask would hide every present slot");
	if (n == 0) return result;

	std::mt19937_64 rng(mask_stream_seed(seed, series, level, pattern));
	if (pattern.kind == MaskPattern::PointwiseRandom) {
		// Partial Fisher-Yates.
		for (std::size_t i = 0; i < n; ++i) {
			std::uniform_int_distribution<std::size_t> pick(i, present.size() - 1);
			std::swap(present[i], present[pick(rng)]);
		}
		result.mask.assign(present.begin(), present.begin() + static_cast<std::ptrdiff_t>(n));
	} else {
		std::vector<std::size_t> blocks(n / pattern.block_len, pattern.block_len);
		if (n % pattern.block_len) blocks.push_back(n % pattern.block_len);
		std::vector<bool> available(series.slots.size());
		for (auto i : present) available[i] = true;
		for (auto len : blocks) {
			// Runs of available slots; a run of length r offers r - len + 1 starts.
			std::vector<std::pair<std::size_t, std::size_t>> runs;
			std::size_t starts = 0;
			for (std::size_t i = 0; i < available.size();) {
				if (!available[i]) {
					++i;
					continue;
				}
				std::size_t j = i;
				while (j < available.size() && available[j]) ++j;
				if (j - i >= len) {
					runs.emplace_back(i, j - i - len + 1);
					starts += j - i - len + 1;
				}
				i = j;
			}
			if (starts == 0) throw Error(Errc::LevelInfeasible, series.station_id + ": no room for another block");
			std::uniform_int_distribution<std::size_t> pick(0, starts - 1);
			auto u = pick(rng);
			std::size_t begin = 0;
			for (const auto& [first, count] : runs) {
				if (u < count) {
					begin = first + u;
					break;
				}
				u -= count;
			}
			for (std::size_t i = begin; i < begin + len; ++i) {
				available[i] = false;
				result.mask.push_back(i);
			}
		}
	}
	std::sort(result.mask.begin(), result.mask.end());
	for (auto i : result.mask) result.masked.slots[i].reset();
	return result;
}

// ---------------------------------------------------------------------------
// RMSE

/// sqrt(mean((estimate - truth)^2)) over (estimate, truth) pairs.
inline double rmse(std::span<const std::pair<double, double>> pairs) {
	if (pairs.empty()) throw Error(Errc::EmptyInput, "rmse of an empty sequence");
	double sum = 0.0;
	for (const auto& [estimate, truth] : pairs) {
		const double d = estimate - truth;
		sum += d * d;
	}
	return std::sqrt(sum / static_cast<double>(pairs.size()));
}

// ---------------------------------------------------------------------------
// Benchmark

struct EvalConfig {
	std::vector<double> levels{0.05, 0.10, 0.15, 0.20, 0.25};
	std::uint64_t seed = 42;
	std::vector<MethodTag> methods{MethodTag::NR, MethodTag::GC, MethodTag::NRGC, MethodTag::NN};
	MaskSpec pattern;
	std::size_t neighbour_k = 2;
	std::size_t cascade_depth = kDefaultCascadeDepth;
	Ranking rank = Ranking::Geometric;
	std::vector<std::string> targets; // empty: every station with metadata

	friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

inline void check_config(const EvalConfig& cfg) {
	if (cfg.levels.empty()) throw Error(Errc::InvalidConfig, "no missingness levels");
	for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
		if (!(cfg.levels[i] > 0.0 && cfg.levels[i] < 1.0)) throw Error(Errc::InvalidConfig, "levels must lie in (0, 1)");
		if (i > 0 && !(cfg.levels[i] > cfg.levels[i - 1])) throw Error(Errc::InvalidConfig, "levels must be strictly increasing");
	}
	if (cfg.methods.empty()) throw Error(Errc::InvalidConfig, "no methods");
	for (auto m : cfg.methods)
		if (m == MethodTag::LinearInterp) throw Error(Errc::InvalidConfig, "linear interpolation cannot be benchmarked");
	if (cfg.neighbour_k == 0 || cfg.cascade_depth == 0) throw Error(Errc::InvalidConfig, "neighbour counts must be positive");
	if (cfg.pattern.kind == MaskPattern::BlockRandom && cfg.pattern.block_len == 0)
		throw Error(Errc::InvalidConfig, "block length must be at least 1");
}

struct EvalCell {
	std::string station_id;
	Variable variable = Variable::Temperature;
	MethodTag method = MethodTag::NR;
	double level = 0.0;
	std::optional<double> rmse; // absent when nothing could be filled
	std::size_t n_masked = 0;
	std::size_t n_unfilled = 0;

	friend bool operator==(const EvalCell&, const EvalCell&) = default;
};

struct EvalReport {
	EvalConfig config;
	std::vector<EvalCell> cells;
	std::string version{kVersion};

	friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

namespace detail {

inline std::size_t candidate_count(const Dataset& data, const std::string& target_id, Variable variable) {
	std::size_t n = 0;
	for (const auto& m : data.stations)
		if (m.station_id != target_id && find_series(data.series, m.station_id, variable)) ++n;
	return n;
}

} // namespace detail

/// Neighbour count a method actually uses: the cascade walks `cascade_depth`
/// neighbours, so NN asks for at least that many when candidates allow.
inline std::size_t neighbours_for(MethodTag method, std::size_t k, std::size_t cascade_depth, std::size_t available) {
	if (method != MethodTag::NN) return k;
	return std::max(k, std::min(cascade_depth, available));
}

/// Benchmarks one target series against the original data of every other
/// station. Only the target is masked; neighbours keep their own values.
inline std::vector<EvalCell> benchmark_series(const Dataset& data, const StationMeta& target,
                                              const StationSeries& target_series, const EvalConfig& cfg) {
	const auto available = detail::candidate_count(data, target.station_id, target_series.variable);
	std::vector<EvalCell> cells;
	for (auto level : cfg.levels) {
		std::optional<MaskResult> mr;
		try {
			mr = inject_missingness(target_series, level, cfg.pattern, cfg.seed);
		} catch (const Error&) {
		}

		struct Prepared {
			std::optional<NeighbourSet> ns;
			std::vector<std::vector<std::optional<double>>> aligned;
		};
		std::map<std::size_t, Prepared> by_k;
		std::optional<MonthlyMeans> means;

		for (auto method : cfg.methods) {
			EvalCell cell{target.station_id, target_series.variable, method, level, std::nullopt, 0, 0};
			if (!mr) {
				cells.push_back(cell);
				continue;
			}
			cell.n_masked = mr->mask.size();

			const auto k = neighbours_for(method, cfg.neighbour_k, cfg.cascade_depth, available);
			auto [it, inserted] = by_k.try_emplace(k);
			auto& prep = it->second;
			if (inserted) {
				try {
					prep.ns = build_neighbour_set(target, mr->masked, data.stations, k, data.series, cfg.rank);
					prep.aligned = aligned_neighbour_values(*prep.ns, mr->masked, data.series);
				} catch (const Error&) {
					prep.ns.reset();
				}
			}
			if (!prep.ns) {
				cell.n_unfilled = cell.n_masked;
				cells.push_back(cell);
				continue;
			}
			if (method == MethodTag::NN && !means) means = long_term_monthly_means(mr->masked);
			static const MonthlyMeans no_means{};

			std::vector<std::pair<double, double>> pairs;
			pairs.reserve(mr->mask.size());
			std::vector<std::optional<double>> obs(prep.ns->size());
			for (auto slot : mr->mask) {
				for (std::size_t i = 0; i < obs.size(); ++i) obs[i] = prep.aligned[i][slot];
				try {
					const auto iv = impute_long(method, *prep.ns, slot, obs, means ? *means : no_means,
					                            month_of(mr->masked, slot), cfg.cascade_depth);
					pairs.emplace_back(iv.value, *target_series.slots[slot]);
				} catch (const Error&) {
					++cell.n_unfilled;
				}
			}
			if (!pairs.empty()) cell.rmse = rmse(pairs);
			cells.push_back(cell);
		}
	}
	// Report order within a series: method-major, then level.
	std::stable_sort(cells.begin(), cells.end(), [&](const EvalCell& a, const EvalCell& b) {
		const auto rank = [&](MethodTag m) { return std::find(cfg.methods.begin(), cfg.methods.end(), m) - cfg.methods.begin(); };
		return rank(a.method) < rank(b.method);
	});
	return cells;
}

/// Runs every (station, variable) target. Cells are computed independently on
/// `threads` workers and assembled in a fixed order, so the report does not
/// depend on the thread count.
inline EvalReport run_benchmark(const Dataset& data, const EvalConfig& cfg, unsigned threads = 1) {
	check_config(cfg);

	std::vector<const StationSeries*> targets;
	for (const auto& s : data.series) {
		if (!data.station(s.station_id)) continue;
		if (!cfg.targets.empty() && std::find(cfg.targets.begin(), cfg.targets.end(), s.station_id) == cfg.targets.end())
			continue;
		targets.push_back(&s);
	}
	std::sort(targets.begin(), targets.end(), [](const StationSeries* a, const StationSeries* b) {
		return std::tie(a->station_id, a->variable) < std::tie(b->station_id, b->variable);
	});

	std::vector<std::vector<EvalCell>> results(targets.size());
	std::atomic<std::size_t> next{0};
	auto worker = [&] {
		for (std::size_t i = next++; i < targets.size(); i = next++)
			results[i] = benchmark_series(data, *data.station(targets[i]->station_id), *targets[i], cfg);
	};
	const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(targets.size())));
	if (n_threads == 1) {
		worker();
	} else {
		std::vector<std::jthread> pool;
		for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
	}

	EvalReport report;
	report.config = cfg;
	for (auto& r : results)
		for (auto& c : r) report.cells.push_back(std::move(c));
	return report;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string_view to_string(Ranking r) { return r == Ranking::Geometric ? "geometric" : "correlation"; }

inline nlohmann::ordered_json to_json(const EvalConfig& cfg) {
	nlohmann::ordered_json methods = nlohmann::ordered_json::array();
	for (auto m : cfg.methods) methods.push_back(std::string(to_string(m)));
	nlohmann::ordered_json j;
	j["levels"] = cfg.levels;
	j["seed"] = cfg.seed;
	j["methods"] = methods;
	j["pattern"] = to_string(cfg.pattern);
	j["neighbour_k"] = cfg.neighbour_k;
	j["cascade_depth"] = cfg.cascade_depth;
	j["ranking"] = std::string(to_string(cfg.rank));
	j["masking"] = "per-station-independent";
	j["targets"] = cfg.targets;
	return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& report) {
	nlohmann::ordered_json cells = nlohmann::ordered_json::array();
	for (const auto& c : report.cells) {
		nlohmann::ordered_json cell;
		cell["station_id"] = c.station_id;
		cell["variable"] = std::string(to_string(c.variable));
		cell["method"] = std::string(to_string(c.method));
		cell["level"] = c.level;
		cell["rmse"] = c.rmse ? nlohmann::ordered_json(*c.rmse) : nlohmann::ordered_json(nullptr);
		cell["n_masked"] = c.n_masked;
		cell["n_unfilled"] = c.n_unfilled;
		cells.push_back(std::move(cell));
	}
	nlohmann::ordered_json j;
	j["config"] = to_json(report.config);
	j["cells"] = std::move(cells);
	j["version"] = report.version;
	return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
	try {
		EvalReport report;
		const auto& c = j.at("config");
		report.config.levels = c.at("levels").get<std::vector<double>>();
		report.config.seed = c.at("seed").get<std::uint64_t>();
		report.config.methods.clear();
		for (const auto& m : c.at("methods")) {
			const auto tag = method_from_string(m.get<std::string>());
			if (!tag) throw Error(Errc::MalformedRow, "unknown method " + m.get<std::string>());
			report.config.methods.push_back(*tag);
		}
		const auto pattern = mask_spec_from_string(c.at("pattern").get<std::string>());
		if (!pattern) throw Error(Errc::MalformedRow, "bad pattern");
		report.config.pattern = *pattern;
		report.config.neighbour_k = c.at("neighbour_k").get<std::size_t>();
		report.config.cascade_depth = c.value("cascade_depth", kDefaultCascadeDepth);
		report.config.rank = c.value("ranking", std::string("geometric")) == "correlation" ? Ranking::Correlation : Ranking::Geometric;
		report.config.targets = c.value("targets", std::vector<std::string>{});

		for (const auto& jc : j.at("cells")) {
			EvalCell cell;
			cell.station_id = jc.at("station_id").get<std::string>();
			const auto var = variable_from_string(jc.at("variable").get<std::string>());
			const auto method = method_from_string(jc.at("method").get<std::string>());
			if (!var || !method) throw Error(Errc::MalformedRow, "bad cell");
			cell.variable = *var;
			cell.method = *method;
			cell.level = jc.at("level").get<double>();
			if (!jc.at("rmse").is_null()) cell.rmse = jc.at("rmse").get<double>();
			cell.n_masked = jc.at("n_masked").get<std::size_t>();
			cell.n_unfilled = jc.at("n_unfilled").get<std::size_t>();
			report.cells.push_back(std::move(cell));
		}
		report.version = j.value("version", std::string(kVersion));
		return report;
	} catch (const nlohmann::json::exception& e) {
		throw Error(Errc::MalformedRow, std::string("report JSON: ") + e.what());
	}
}

inline void write_cells_csv(std::ostream& out, const EvalReport& report) {
	out << "station_id,variable,method,level,rmse,n_masked,n_unfilled\n";
	for (const auto& c : report.cells) {
		out << csv::quote_if_needed(c.station_id) << ',' << to_string(c.variable) << ',' << to_string(c.method) << ','
		    << csv::format_double(c.level) << ',' << (c.rmse ? csv::format_double(*c.rmse) : std::string{}) << ','
		    << c.n_masked << ',' << c.n_unfilled << '\n';
	}
}

/// Mean RMSE of one method over the cells of one (station, variable), ignoring
/// cells without an RMSE. Nullopt when no cell has one.
inline std::optional<double> mean_rmse(std::span<const EvalCell> cells, MethodTag method) {
	double sum = 0.0;
	std::size_t n = 0;
	for (const auto& c : cells)
		if (c.method == method && c.rmse) {
			sum += *c.rmse;
			++n;
		}
	if (n == 0) return std::nullopt;
	return sum / static_cast<double>(n);
}

} // namespace metfill
