#pragma once

// End-to-end workflow: ingest and validate, detect gaps, interpolate short
// gaps, fill long gaps from neighbours (optionally choosing the method per
// series by benchmark RMSE), then write the filled data and a provenance file.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "metfill/error.hpp"
#include "metfill/eval.hpp"
#include "metfill/geo.hpp"
#include "metfill/impute.hpp"
#include "metfill/ingest.hpp"
#include "metfill/model.hpp"

namespace metfill {

struct FillOptions {
	std::size_t neighbour_k = 2;
	std::optional<MethodTag> long_gap_method; // nullopt: choose per series by benchmark
	std::size_t cascade_depth = kDefaultCascadeDepth;
	Ranking rank = Ranking::Geometric;
	PlausibilityBounds bounds;
	bool treat_out_of_bounds_as_missing = false;
	EvalConfig selection; // levels, seed and pattern used by auto-selection
	unsigned threads = 1;
};

struct ProvenanceRow {
	std::string station_id;
	Variable variable = Variable::Temperature;
	TimePoint time{};
	ImputedValue imputed;
};

struct SeriesOutcome {
	std::string station_id;
	Variable variable = Variable::Temperature;
	std::optional<MethodTag> long_gap_method;
	std::string selection = "none"; // none | config | auto | auto-fallback
	std::map<MethodTag, double> selection_scores;
	std::size_t short_filled = 0;
	std::size_t long_filled = 0;
	std::vector<GapSpan> residual_gaps;
	std::string note;
};

struct FillResult {
	Dataset filled;
	std::vector<ProvenanceRow> provenance;
	std::vector<SeriesOutcome> outcomes;

	std::size_t residual_slots() const {
		std::size_t n = 0;
		for (const auto& o : outcomes)
			for (const auto& g : o.residual_gaps) n += g.length;
		return n;
	}
};

/// The longest run of consecutive present slots, as its own series (empty
/// when nothing is present).
inline StationSeries longest_complete_window(const StationSeries& series) {
	std::size_t best_start = 0, best_len = 0;
	for (std::size_t i = 0; i < series.slots.size();) {
		if (!series.slots[i]) {
			++i;
			continue;
		}
		std::size_t j = i;
		while (j < series.slots.size() && series.slots[j]) ++j;
		if (j - i > best_len) {
			best_start = i;
			best_len = j - i;
		}
		i = j;
	}
	StationSeries window = series;
	window.null_slots.clear();
	window.start = series.time_at(best_start);
	window.slots.assign(series.slots.begin() + static_cast<std::ptrdiff_t>(best_start),
	                    series.slots.begin() + static_cast<std::ptrdiff_t>(best_start + best_len));
	return window;
}

/// Picks the long-gap method for one series: benchmark every method on the
/// series' longest complete window, keep the methods that left the fewest
/// masked slots unfilled, and among those take the lowest mean RMSE. Ties go
/// to the earlier method in `selection.methods`.
inline std::pair<std::optional<MethodTag>, std::map<MethodTag, double>> select_method(const Dataset& data,
                                                                                      const StationMeta& target,
                                                                                      const StationSeries& series,
                                                                                      const FillOptions& opts) {
	EvalConfig cfg = opts.selection;
	cfg.neighbour_k = opts.neighbour_k;
	cfg.cascade_depth = opts.cascade_depth;
	cfg.rank = opts.rank;
	const auto window = longest_complete_window(series);
	const auto cells = benchmark_series(data, target, window, cfg);

	std::map<MethodTag, double> scores;
	std::optional<MethodTag> best;
	std::size_t best_unfilled = 0;
	for (auto m : cfg.methods) {
		const auto score = mean_rmse(cells, m);
		if (!score) continue;
		scores[m] = *score;
		std::size_t unfilled = 0;
		for (const auto& c : cells)
			if (c.method == m) unfilled += c.n_unfilled;
		if (!best || unfilled < best_unfilled || (unfilled == best_unfilled && *score < scores[*best])) {
			best = m;
			best_unfilled = unfilled;
		}
	}
	return {best, scores};
}

namespace detail {

struct SeriesFill {
	StationSeries filled;
	SeriesOutcome outcome;
	std::vector<ImputedValue> values;
};

inline SeriesFill fill_series(const Dataset& original, const StationSeries& input, const FillOptions& opts) {
	SeriesFill out{input, {}, {}};
	auto& outcome = out.outcome;
	outcome.station_id = input.station_id;
	outcome.variable = input.variable;

	const auto gaps = detect_gaps(input);
	std::vector<std::size_t> long_slots;
	for (const auto& gap : gaps) {
		const bool bounded = gap.first_slot > 0 && gap.end_slot() < input.slots.size();
		if (gap.gap_class == GapClass::Short && bounded) {
			for (auto& iv : linear_interpolate(input, gap)) {
				++outcome.short_filled;
				out.values.push_back(std::move(iv));
			}
		} else {
			for (auto s = gap.first_slot; s < gap.end_slot(); ++s) long_slots.push_back(s);
		}
	}

	std::vector<bool> residual(input.slots.size(), false);
	if (!long_slots.empty()) {
		const auto* meta = original.station(input.station_id);
		std::optional<MethodTag> method = opts.long_gap_method;
		if (!meta) {
			outcome.note = "no station metadata; long gaps left unfilled";
		} else if (method) {
			outcome.selection = "config";
		} else {
			auto [chosen, scores] = select_method(original, *meta, input, opts);
			outcome.selection_scores = std::move(scores);
			if (chosen) {
				method = chosen;
				outcome.selection = "auto";
			} else {
				method = MethodTag::NN;
				outcome.selection = "auto-fallback";
				outcome.note = "no method could be scored; defaulted to nn";
			}
		}
		outcome.long_gap_method = method;

		std::optional<NeighbourSet> ns;
		std::vector<std::vector<std::optional<double>>> aligned;
		MonthlyMeans means{};
		if (meta && method) {
			try {
				const auto available = candidate_count(original, input.station_id, input.variable);
				const auto k = neighbours_for(*method, opts.neighbour_k, opts.cascade_depth, available);
				ns = build_neighbour_set(*meta, input, original.stations, k, original.series, opts.rank);
				aligned = aligned_neighbour_values(*ns, input, original.series);
				if (*method == MethodTag::NN) means = long_term_monthly_means(input);
			} catch (const Error& e) {
				outcome.note = e.what();
			}
		}
		std::vector<std::optional<double>> obs(ns ? ns->size() : 0);
		for (auto slot : long_slots) {
			if (!ns) {
				residual[slot] = true;
				continue;
			}
			for (std::size_t i = 0; i < obs.size(); ++i) obs[i] = aligned[i][slot];
			try {
				out.values.push_back(impute_long(*method, *ns, slot, obs, means, month_of(input, slot), opts.cascade_depth));
				++outcome.long_filled;
			} catch (const Error&) {
				residual[slot] = true;
			}
		}
	}

	std::sort(out.values.begin(), out.values.end(), [](const ImputedValue& a, const ImputedValue& b) { return a.slot < b.slot; });
	for (const auto& iv : out.values) out.filled.slots[iv.slot] = iv.value;
	std::erase_if(out.filled.null_slots, [&](std::size_t s) { return out.filled.slots[s].has_value(); });

	for (std::size_t i = 0; i < residual.size();) {
		if (!residual[i]) {
			++i;
			continue;
		}
		std::size_t j = i;
		while (j < residual.size() && residual[j]) ++j;
		outcome.residual_gaps.push_back({i, j - i, classify_gap(j - i, input.cadence)});
		i = j;
	}
	return out;
}

} // namespace detail

/// Fills every series of `data`. Neighbour methods read only the original
/// (pre-fill) values of other stations.
inline FillResult fill_dataset(const Dataset& data, const FillOptions& opts = {}) {
	if (opts.long_gap_method == MethodTag::LinearInterp)
		throw Error(Errc::InvalidConfig, "linear interpolation cannot fill long gaps");
	if (opts.neighbour_k == 0) throw Error(Errc::InvalidConfig, "neighbour count must be at least 1");

	Dataset working = data;
	if (opts.treat_out_of_bounds_as_missing)
		for (auto& s : working.series)
			for (auto& v : s.slots)
				if (v && !opts.bounds[s.variable].contains(*v)) v.reset();

	std::vector<detail::SeriesFill> parts(working.series.size());
	std::atomic<std::size_t> next{0};
	auto worker = [&] {
		for (std::size_t i = next++; i < working.series.size(); i = next++)
			parts[i] = detail::fill_series(working, working.series[i], opts);
	};
	const unsigned n_threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(parts.size())));
	if (n_threads == 1) {
		worker();
	} else {
		std::vector<std::jthread> pool;
		for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
	}

	FillResult result;
	result.filled.stations = data.stations;
	for (auto& p : parts) {
		for (auto& iv : p.values)
			result.provenance.push_back({p.filled.station_id, p.filled.variable, p.filled.time_at(iv.slot), std::move(iv)});
		result.filled.series.push_back(std::move(p.filled));
		result.outcomes.push_back(std::move(p.outcome));
	}
	return result;
}

inline void write_provenance(std::ostream& out, std::span<const ProvenanceRow> rows) {
	out << "station_id,variable,timestamp,method,value,contributing_stations,clamped,degenerate\n";
	for (const auto& r : rows) {
		std::string contributors;
		for (const auto& id : r.imputed.contributing_stations) {
			if (!contributors.empty()) contributors += ';';
			contributors += id;
		}
		out << csv::quote_if_needed(r.station_id) << ',' << to_string(r.variable) << ',' << format_timestamp(r.time) << ','
		    << to_string(r.imputed.method) << ',' << csv::format_double(r.imputed.value) << ','
		    << csv::quote_if_needed(contributors) << ',' << (r.imputed.clamped ? 1 : 0) << ','
		    << (r.imputed.degenerate ? 1 : 0) << '\n';
	}
}

/// Reads a provenance file back (used by tests and downstream tooling).
inline std::vector<ProvenanceRow> parse_provenance(std::istream& in) {
	std::string line;
	if (!csv::read_line(in, line)) throw Error(Errc::MalformedRow, "empty provenance file");
	std::vector<ProvenanceRow> rows;
	std::size_t line_no = 1;
	while (csv::read_line(in, line)) {
		++line_no;
		if (line.empty()) continue;
		const auto f = csv::split(line);
		const auto where = "provenance line " + std::to_string(line_no);
		if (f.size() != 8) throw Error(Errc::MalformedRow, where);
		const auto var = variable_from_string(f[1]);
		const auto tp = parse_timestamp(f[2]);
		const auto method = fill_method_from_string(f[3]);
		const auto value = csv::parse_double(f[4]);
		if (!var || !tp || !method || !value) throw Error(Errc::MalformedRow, where);
		ProvenanceRow row{f[0], *var, *tp, {}};
		row.imputed.method = *method;
		row.imputed.value = *value;
		for (std::size_t pos = 0; pos < f[5].size();) {
			const auto end = std::min(f[5].find(';', pos), f[5].size());
			row.imputed.contributing_stations.push_back(f[5].substr(pos, end - pos));
			pos = end + 1;
		}
		row.imputed.clamped = f[6] == "1";
		row.imputed.degenerate = f[7] == "1";
		rows.push_back(std::move(row));
	}
	return rows;
}

// ---------------------------------------------------------------------------
// File-level driver

struct PipelineConfig {
	std::filesystem::path observations;
	std::filesystem::path stations;
	std::filesystem::path output;
	std::filesystem::path provenance;
	std::optional<std::filesystem::path> report;
	Cadence cadence = kDefaultCadence;
	FillOptions fill;
};

enum class ExitStatus { Clean = 0, ResidualGaps = 2, InputError = 3 };

struct RunReport {
	ValidationReport validation;
	FillResult fill;

	ExitStatus status() const { return fill.residual_slots() == 0 ? ExitStatus::Clean : ExitStatus::ResidualGaps; }
};

inline nlohmann::ordered_json to_json(const RunReport& run) {
	using nlohmann::ordered_json;
	ordered_json series = ordered_json::array();
	for (const auto& o : run.fill.outcomes) {
		ordered_json scores = ordered_json::object();
		for (const auto& [m, v] : o.selection_scores) scores[std::string(to_string(m))] = v;
		ordered_json residual = ordered_json::array();
		const auto* s = [&]() -> const StationSeries* {
			for (const auto& x : run.fill.filled.series)
				if (x.station_id == o.station_id && x.variable == o.variable) return &x;
			return nullptr;
		}();
		for (const auto& g : o.residual_gaps)
			residual.push_back({{"first_slot", g.first_slot},
			                    {"timestamp", s ? format_timestamp(s->time_at(g.first_slot)) : std::string{}},
			                    {"length", g.length},
			                    {"class", std::string(to_string(g.gap_class))}});
		ordered_json entry;
		entry["station_id"] = o.station_id;
		entry["variable"] = std::string(to_string(o.variable));
		entry["long_gap_method"] = o.long_gap_method ? ordered_json(std::string(to_string(*o.long_gap_method))) : ordered_json(nullptr);
		entry["selection"] = o.selection;
		entry["selection_scores"] = scores;
		entry["short_filled"] = o.short_filled;
		entry["long_filled"] = o.long_filled;
		entry["residual_gaps"] = residual;
		if (!o.note.empty()) entry["note"] = o.note;
		series.push_back(std::move(entry));
	}
	ordered_json j;
	j["validation"] = to_json(run.validation);
	j["series"] = series;
	j["filled_slots"] = run.fill.provenance.size();
	j["residual_slots"] = run.fill.residual_slots();
	j["status"] = run.status() == ExitStatus::Clean ? "clean" : "residual_gaps";
	return j;
}

/// Runs the whole workflow and writes the filled observations, the provenance
/// sidecar and (optionally) the JSON run report.
inline RunReport run_pipeline(const PipelineConfig& cfg) {
	for (const auto& p : {cfg.observations, cfg.stations})
		if (!std::filesystem::exists(p)) throw Error(Errc::FileNotFound, p.string());

	Dataset data;
	data.stations = parse_station_meta(cfg.stations);
	data.series = parse_observations(cfg.observations, cfg.cadence);

	RunReport run;
	run.validation = validate(data.series, data.stations, cfg.fill.bounds);
	run.fill = fill_dataset(data, cfg.fill);

	write_observations(cfg.output, run.fill.filled.series);
	{
		std::ofstream prov(cfg.provenance, std::ios::binary);
		if (!prov) throw Error(Errc::Io, "cannot write " + cfg.provenance.string());
		write_provenance(prov, run.fill.provenance);
	}
	if (cfg.report) {
		std::ofstream rep(*cfg.report, std::ios::binary);
		if (!rep) throw Error(Errc::Io, "cannot write " + cfg.report->string());
		rep << to_json(run).dump(2) << '\n';
	}
	return run;
}

} // namespace metfill
