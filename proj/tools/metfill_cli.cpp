#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "metfill/metfill.hpp"

using namespace metfill;

namespace {

constexpr int kExitInputError = static_cast<int>(ExitStatus::InputError);

Cadence cadence_arg(const std::string& text) {
	const auto c = parse_cadence(text);
	if (!c) throw Error(Errc::InvalidConfig, "bad cadence '" + text + "' (expected e.g. 15m, 1h, 900s dividing one day)");
	return *c;
}

// `temperature=-35.2:60.0`
PlausibilityBounds bounds_arg(const std::vector<std::string>& specs) {
	PlausibilityBounds bounds;
	for (const auto& spec : specs) {
		const auto eq = spec.find('=');
		const auto colon = spec.find(':', eq == std::string::npos ? 0 : eq);
		if (eq == std::string::npos || colon == std::string::npos)
			throw Error(Errc::InvalidConfig, "bad bounds '" + spec + "' (expected variable=min:max)");
		const auto var = variable_from_string(spec.substr(0, eq));
		const auto lo = csv::parse_double(spec.substr(eq + 1, colon - eq - 1));
		const auto hi = csv::parse_double(spec.substr(colon + 1));
		if (!var || !lo || !hi) throw Error(Errc::InvalidConfig, "bad bounds '" + spec + "'");
		if (!(*lo < *hi)) throw Error(Errc::InvalidConfig, "bounds '" + spec + "' need min < max");
		bounds[*var] = {*lo, *hi};
	}
	return bounds;
}

std::vector<MethodTag> methods_arg(const std::vector<std::string>& names) {
	std::vector<MethodTag> out;
	for (const auto& n : names) {
		const auto m = method_from_string(n);
		if (!m || *m == MethodTag::LinearInterp) throw Error(Errc::InvalidConfig, "unknown long-gap method '" + n + "'");
		out.push_back(*m);
	}
	return out;
}

Ranking rank_arg(const std::string& text) {
	if (text == "geometric") return Ranking::Geometric;
	if (text == "correlation") return Ranking::Correlation;
	throw Error(Errc::InvalidConfig, "unknown ranking '" + text + "'");
}

std::ofstream open_output(const std::string& path) {
	std::ofstream out(path, std::ios::binary);
	if (!out) throw Error(Errc::Io, "cannot write " + path);
	return out;
}

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"Gap detection, spatial imputation and benchmarking for multi-station weather series"};
	app.require_subcommand(1);
	app.set_version_flag("--version", std::string(kVersion));

	// validate
	auto* validate_cmd = app.add_subcommand("validate", "Count expected/present/null/missing records per station, variable and year");
	std::string v_obs, v_meta, v_cadence = "15m";
	std::vector<std::string> v_bounds;
	validate_cmd->add_option("observations", v_obs, "Observations CSV")->required();
	validate_cmd->add_option("--meta", v_meta, "Station metadata CSV")->required();
	validate_cmd->add_option("--cadence", v_cadence, "Slot cadence (e.g. 15m)");
	validate_cmd->add_option("--bounds", v_bounds, "Plausibility bounds, variable=min:max (repeatable)");

	// gaps
	auto* gaps_cmd = app.add_subcommand("gaps", "List gaps as CSV");
	std::string g_obs, g_station, g_variable, g_cadence = "15m";
	gaps_cmd->add_option("observations", g_obs, "Observations CSV")->required();
	gaps_cmd->add_option("--station", g_station, "Only this station");
	gaps_cmd->add_option("--variable", g_variable, "temperature or rainfall");
	gaps_cmd->add_option("--cadence", g_cadence, "Slot cadence (e.g. 15m)");

	// fill
	auto* fill_cmd = app.add_subcommand("fill", "Fill short gaps by interpolation and long gaps from neighbouring stations");
	std::string f_obs, f_meta, f_method, f_out, f_prov, f_report, f_cadence = "15m", f_rank = "geometric";
	std::vector<std::string> f_bounds;
	std::vector<double> f_levels = EvalConfig{}.levels;
	std::size_t f_k = 2, f_depth = kDefaultCascadeDepth;
	std::uint64_t f_seed = 42;
	bool f_oob = false;
	unsigned f_threads = default_threads();
	fill_cmd->add_option("observations", f_obs, "Observations CSV")->required();
	fill_cmd->add_option("--meta", f_meta, "Station metadata CSV")->required();
	fill_cmd->add_option("--method", f_method, "Long-gap method: nr, gc, nrgc, nn or auto")
	    ->required()
	    ->check(CLI::IsMember({"nr", "gc", "nrgc", "nn", "auto"}));
	fill_cmd->add_option("--neighbours", f_k, "Neighbour count k");
	fill_cmd->add_option("--out", f_out, "Filled observations CSV")->required();
	fill_cmd->add_option("--provenance", f_prov, "Provenance CSV (one row per filled slot)")->required();
	fill_cmd->add_option("--report", f_report, "Run report JSON");
	fill_cmd->add_option("--cadence", f_cadence, "Slot cadence (e.g. 15m)");
	fill_cmd->add_option("--bounds", f_bounds, "Plausibility bounds, variable=min:max (repeatable)");
	fill_cmd->add_flag("--treat-out-of-bounds-as-missing", f_oob, "Blank out-of-bounds values before filling");
	fill_cmd->add_option("--cascade-depth", f_depth, "Neighbours walked by the nn cascade");
	fill_cmd->add_option("--rank", f_rank, "Neighbour ranking: geometric or correlation");
	fill_cmd->add_option("--levels", f_levels, "Missingness levels for auto selection")->delimiter(',');
	fill_cmd->add_option("--seed", f_seed, "Seed for auto selection");
	fill_cmd->add_option("--threads", f_threads, "Worker threads");

	// bench
	auto* bench_cmd = app.add_subcommand("bench", "Mask known values, impute them back and score RMSE");
	std::string b_obs, b_meta, b_pattern = "point", b_out, b_csv, b_cadence = "15m", b_rank = "geometric";
	std::vector<double> b_levels = EvalConfig{}.levels;
	std::vector<std::string> b_methods{"nr", "gc", "nrgc", "nn"}, b_targets;
	std::uint64_t b_seed = 42;
	std::size_t b_k = 2, b_depth = kDefaultCascadeDepth;
	unsigned b_threads = default_threads();
	bench_cmd->add_option("observations", b_obs, "Observations CSV")->required();
	bench_cmd->add_option("--meta", b_meta, "Station metadata CSV")->required();
	bench_cmd->add_option("--levels", b_levels, "Missingness levels")->delimiter(',');
	bench_cmd->add_option("--seed", b_seed, "Masking seed");
	bench_cmd->add_option("--methods", b_methods, "Methods to compare")->delimiter(',');
	bench_cmd->add_option("--pattern", b_pattern, "point or block:N");
	bench_cmd->add_option("--neighbours", b_k, "Neighbour count k");
	bench_cmd->add_option("--cascade-depth", b_depth, "Neighbours walked by the nn cascade");
	bench_cmd->add_option("--rank", b_rank, "Neighbour ranking: geometric or correlation");
	bench_cmd->add_option("--targets", b_targets, "Only these stations")->delimiter(',');
	bench_cmd->add_option("--out", b_out, "Report JSON")->required();
	bench_cmd->add_option("--csv", b_csv, "Flat CSV of the report cells");
	bench_cmd->add_option("--cadence", b_cadence, "Slot cadence (e.g. 15m)");
	bench_cmd->add_option("--threads", b_threads, "Worker threads");

	// synth
	auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic multi-station dataset");
	SynthOptions s_opts;
	std::string s_out, s_meta_out, s_start = "2014-01-01";
	synth_cmd->add_option("--stations", s_opts.stations, "Station count");
	synth_cmd->add_option("--days", s_opts.days, "Days of data");
	synth_cmd->add_option("--seed", s_opts.seed, "Generator seed");
	synth_cmd->add_option("--noise", s_opts.noise_scale, "Noise amplitude multiplier");
	synth_cmd->add_option("--start", s_start, "First day, YYYY-MM-DD");
	synth_cmd->add_option("--out", s_out, "Observations CSV")->required();
	synth_cmd->add_option("--meta-out", s_meta_out, "Station metadata CSV")->required();

	// plot
	auto* plot_cmd = app.add_subcommand("plot", "Render a benchmark report as SVG charts");
	std::string p_report, p_out;
	plot_cmd->add_option("report", p_report, "Report JSON from bench")->required();
	plot_cmd->add_option("--out", p_out, "SVG output")->required();

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError& e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : kExitInputError;
	}

	try {
		if (*validate_cmd) {
			Dataset data;
			data.stations = parse_station_meta(v_meta);
			data.series = parse_observations(v_obs, cadence_arg(v_cadence));
			const auto report = validate(data.series, data.stations, bounds_arg(v_bounds));
			std::cout << to_json(report).dump(2) << '\n';
			return 0;
		}

		if (*gaps_cmd) {
			std::optional<Variable> only_var;
			if (!g_variable.empty()) {
				only_var = variable_from_string(g_variable);
				if (!only_var) throw Error(Errc::UnknownVariable, g_variable);
			}
			const auto series = parse_observations(g_obs, cadence_arg(g_cadence));
			std::cout << "station_id,variable,first_slot,first_timestamp,length,class\n";
			for (const auto& s : series) {
				if (!g_station.empty() && s.station_id != g_station) continue;
				if (only_var && s.variable != *only_var) continue;
				for (const auto& g : detect_gaps(s))
					std::cout << csv::quote_if_needed(s.station_id) << ',' << to_string(s.variable) << ',' << g.first_slot << ','
					          << format_timestamp(s.time_at(g.first_slot)) << ',' << g.length << ',' << to_string(g.gap_class)
					          << '\n';
			}
			return 0;
		}

		if (*fill_cmd) {
			PipelineConfig cfg;
			cfg.observations = f_obs;
			cfg.stations = f_meta;
			cfg.output = f_out;
			cfg.provenance = f_prov;
			if (!f_report.empty()) cfg.report = f_report;
			cfg.cadence = cadence_arg(f_cadence);
			cfg.fill.neighbour_k = f_k;
			if (f_method != "auto") cfg.fill.long_gap_method = method_from_string(f_method);
			cfg.fill.cascade_depth = f_depth;
			cfg.fill.rank = rank_arg(f_rank);
			cfg.fill.bounds = bounds_arg(f_bounds);
			cfg.fill.treat_out_of_bounds_as_missing = f_oob;
			cfg.fill.selection.levels = f_levels;
			cfg.fill.selection.seed = f_seed;
			cfg.fill.threads = f_threads;
			check_config(cfg.fill.selection);
			const auto run = run_pipeline(cfg);
			std::fprintf(stderr, "filled %zu slots, %zu residual\n", run.fill.provenance.size(), run.fill.residual_slots());
			return static_cast<int>(run.status());
		}

		if (*bench_cmd) {
			Dataset data;
			data.stations = parse_station_meta(b_meta);
			data.series = parse_observations(b_obs, cadence_arg(b_cadence));
			EvalConfig cfg;
			cfg.levels = b_levels;
			cfg.seed = b_seed;
			cfg.methods = methods_arg(b_methods);
			const auto pattern = mask_spec_from_string(b_pattern);
			if (!pattern) throw Error(Errc::InvalidConfig, "bad pattern '" + b_pattern + "' (expected point or block:N)");
			cfg.pattern = *pattern;
			cfg.neighbour_k = b_k;
			cfg.cascade_depth = b_depth;
			cfg.rank = rank_arg(b_rank);
			cfg.targets = b_targets;
			const auto report = run_benchmark(data, cfg, b_threads);
			open_output(b_out) << to_json(report).dump(2) << '\n';
			if (!b_csv.empty()) {
				auto out = open_output(b_csv);
				write_cells_csv(out, report);
			}
			return 0;
		}

		if (*synth_cmd) {
			const auto start = parse_timestamp(s_start + "T00:00:00Z");
			if (!start) throw Error(Errc::InvalidConfig, "bad start date '" + s_start + "'");
			s_opts.start = *start;
			const auto data = synth_dataset(s_opts);
			{
				auto out = open_output(s_out);
				write_observations(out, data.series);
			}
			auto meta = open_output(s_meta_out);
			write_station_meta(meta, data.stations);
			return 0;
		}

		if (*plot_cmd) {
			std::ifstream in(p_report);
			if (!in) throw Error(Errc::FileNotFound, p_report);
			nlohmann::json j;
			try {
				in >> j;
			} catch (const nlohmann::json::exception& e) {
				throw Error(Errc::MalformedRow, std::string("report JSON: ") + e.what());
			}
			emit_plot(report_from_json(j), p_out);
			return 0;
		}
	} catch (const Error& e) {
		std::cerr << "error: " << e.what() << '\n';
		return kExitInputError;
	}
	return 0;
}
