#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace metfill;
using testing_support::kNA;
using testing_support::make_series;
using testing_support::scratch_dir;
using testing_support::slurp;

namespace {

std::string observations_csv(const std::vector<StationSeries>& series) {
	std::ostringstream out;
	write_observations(out, series);
	return out.str();
}

struct Files {
	std::filesystem::path dir, obs, meta, out, prov, report;
};

Files write_inputs(const std::string& name, const Dataset& data) {
	Files f;
	f.dir = scratch_dir(name);
	f.obs = f.dir / "obs.csv";
	f.meta = f.dir / "stations.csv";
	f.out = f.dir / "filled.csv";
	f.prov = f.dir / "prov.csv";
	f.report = f.dir / "run.json";
	write_observations(f.obs, data.series);
	std::ofstream m(f.meta, std::ios::binary);
	write_station_meta(m, data.stations);
	return f;
}

PipelineConfig config_for(const Files& f, std::optional<MethodTag> method) {
	PipelineConfig cfg;
	cfg.observations = f.obs;
	cfg.stations = f.meta;
	cfg.output = f.out;
	cfg.provenance = f.prov;
	cfg.report = f.report;
	cfg.fill.long_gap_method = method;
	return cfg;
}

std::vector<ProvenanceRow> read_provenance(const std::filesystem::path& p) {
	std::ifstream in(p, std::ios::binary);
	return parse_provenance(in);
}

Dataset three_station_dataset(std::vector<double> target) {
	const std::size_t n = target.size();
	std::vector<double> a(n), b(n);
	for (std::size_t i = 0; i < n; ++i) {
		a[i] = 8.0 + 0.25 * static_cast<double>(i % 9);
		b[i] = 15.0 - 0.5 * static_cast<double>(i % 5);
	}
	Dataset d;
	d.stations = {{"T", -3.0, 51.0, ""}, {"A", -2.7, 51.4, ""}, {"B", -3.6, 51.8, ""}};
	d.series = {make_series("A", Variable::Temperature, a), make_series("B", Variable::Temperature, b),
	            make_series("T", Variable::Temperature, target)};
	return d;
}

} // namespace

TEST(Pipeline, CompleteInputIsUnchanged) {
	SynthOptions o;
	o.stations = 4;
	o.days = 3;
	const auto data = synth_dataset(o);
	const auto f = write_inputs("complete", data);
	const auto run = run_pipeline(config_for(f, MethodTag::NRGC));
	EXPECT_EQ(run.status(), ExitStatus::Clean);
	EXPECT_EQ(slurp(f.out), slurp(f.obs));
	EXPECT_EQ(slurp(f.prov), "station_id,variable,timestamp,method,value,contributing_stations,clamped,degenerate\n");
}

TEST(Pipeline, ShortGapIsInterpolated) {
	std::vector<double> t(96, 12.0);
	t[40] = 10;
	t[41] = t[42] = t[43] = kNA;
	t[44] = 14;
	const auto f = write_inputs("short", three_station_dataset(t));
	const auto run = run_pipeline(config_for(f, MethodTag::GC));
	EXPECT_EQ(run.status(), ExitStatus::Clean);
	const auto rows = read_provenance(f.prov);
	ASSERT_EQ(rows.size(), 3u);
	for (std::size_t j = 0; j < 3; ++j) {
		EXPECT_EQ(rows[j].imputed.method, FillMethod::LinearInterp);
		EXPECT_EQ(rows[j].imputed.value, 11.0 + static_cast<double>(j));
		EXPECT_EQ(rows[j].time, make_date(2014, 1, 1) + std::chrono::minutes{15} * (41 + j));
	}
	const auto filled = parse_observations(f.out);
	EXPECT_EQ(*filled[2].slots[42], 12.0);
}

TEST(Pipeline, LongGapUsesRatioCoordinates) {
	std::vector<double> t(192);
	for (std::size_t i = 0; i < t.size(); ++i) t[i] = 11.0 + 0.1 * static_cast<double>(i % 11);
	for (std::size_t i = 100; i < 108; ++i) t[i] = kNA;
	const auto data = three_station_dataset(t);
	const auto f = write_inputs("long", data);
	run_pipeline(config_for(f, MethodTag::NRGC));
	const auto rows = read_provenance(f.prov);
	ASSERT_EQ(rows.size(), 8u);

	// Oracle inputs: pairwise-overlap means and raw coordinate offsets.
	std::vector<std::optional<double>> ts, as, bs;
	for (const auto& s : data.series) {
		auto& dst = s.station_id == "T" ? ts : s.station_id == "A" ? as : bs;
		dst = s.slots;
	}
	const auto [ms_a, mi_a] = oracle::pair_means(ts, as);
	const auto [ms_b, mi_b] = oracle::pair_means(ts, bs);
	for (std::size_t r = 0; r < rows.size(); ++r) {
		const std::size_t slot = 100 + r;
		EXPECT_EQ(rows[r].imputed.method, FillMethod::NRGC);
		EXPECT_EQ(rows[r].imputed.contributing_stations, (std::vector<std::string>{"A", "B"}));
		const std::vector<oracle::Nb> nbs{{0.3, 0.4, ms_a, mi_a, as[slot]}, {-0.6, 0.8, ms_b, mi_b, bs[slot]}};
		// The provenance file stores the shortest round-trip text, so this is exact up to the sum order.
		EXPECT_NEAR(rows[r].imputed.value, *oracle::ratio_coordinates(nbs), 1e-9);
	}
}

TEST(Pipeline, EverySlotFilledOnceAndOnlyMissingSlots) {
	SynthOptions o;
	o.stations = 5;
	o.days = 4;
	o.seed = 19;
	auto data = synth_dataset(o);
	std::mt19937_64 rng(1);
	std::bernoulli_distribution drop(0.05);
	for (auto& s : data.series) {
		for (auto& v : s.slots)
			if (drop(rng)) v.reset();
		for (std::size_t i = 150; i < 170; ++i) s.slots[i].reset();
	}
	const auto f = write_inputs("props", data);
	const auto input = parse_observations(f.obs);
	const auto run = run_pipeline(config_for(f, MethodTag::NN));
	EXPECT_EQ(run.status(), ExitStatus::Clean);

	std::set<std::tuple<std::string, Variable, TimePoint>> seen;
	for (const auto& row : read_provenance(f.prov)) {
		EXPECT_TRUE(seen.emplace(row.station_id, row.variable, row.time).second) << "slot filled twice";
		const auto& s = *std::find_if(input.begin(), input.end(),
		                              [&](const StationSeries& x) { return x.station_id == row.station_id && x.variable == row.variable; });
		EXPECT_FALSE(s.slots[*s.slot_at(row.time)]);
	}
	std::size_t missing = 0;
	for (const auto& s : input) missing += s.slots.size() - s.present_count();
	EXPECT_EQ(seen.size(), missing);
	for (const auto& s : parse_observations(f.out)) EXPECT_TRUE(detect_gaps(s).empty());
}

TEST(Pipeline, RunningOnOwnOutputIsANoOp) {
	std::vector<double> t(192, 9.5);
	for (std::size_t i = 20; i < 30; ++i) t[i] = kNA;
	t[60] = kNA;
	const auto f = write_inputs("idem", three_station_dataset(t));
	run_pipeline(config_for(f, MethodTag::GC));

	auto second = config_for(f, MethodTag::GC);
	second.observations = f.out;
	second.output = f.dir / "filled2.csv";
	second.provenance = f.dir / "prov2.csv";
	const auto run = run_pipeline(second);
	EXPECT_EQ(run.status(), ExitStatus::Clean);
	EXPECT_EQ(slurp(second.output), slurp(f.out));
	EXPECT_TRUE(read_provenance(second.provenance).empty());
}

TEST(Pipeline, EdgeGapGoesToLongMethod) {
	std::vector<double> t(96, 7.0);
	t[0] = t[1] = kNA;  // short, but no previous value
	const auto f = write_inputs("edge", three_station_dataset(t));
	run_pipeline(config_for(f, MethodTag::GC));
	const auto rows = read_provenance(f.prov);
	ASSERT_EQ(rows.size(), 2u);
	EXPECT_EQ(rows[0].imputed.method, FillMethod::GC);
}

TEST(Pipeline, ResidualGapsAreReported) {
	// The only neighbour is missing at the same slots, and NR has no fallback.
	Dataset d;
	d.stations = {{"T", 0, 0, ""}, {"A", 0.2, 0.2, ""}};
	std::vector<double> t(96, 5.0), a(96, 6.0);
	for (std::size_t i = 30; i < 40; ++i) t[i] = a[i] = kNA;
	d.series = {make_series("A", Variable::Temperature, a), make_series("T", Variable::Temperature, t)};
	const auto f = write_inputs("residual", d);
	auto cfg = config_for(f, MethodTag::NR);
	cfg.fill.neighbour_k = 1;
	const auto run = run_pipeline(cfg);
	EXPECT_EQ(run.status(), ExitStatus::ResidualGaps);
	EXPECT_EQ(run.fill.residual_slots(), 20u);
	const auto report = nlohmann::json::parse(slurp(f.report));
	EXPECT_EQ(report["status"], "residual_gaps");
	EXPECT_EQ(report["series"][0]["residual_gaps"][0]["first_slot"], 30);
	EXPECT_EQ(report["series"][0]["residual_gaps"][0]["length"], 10);
	// Residual slots stay missing in the output.
	const auto filled = parse_observations(f.out);
	EXPECT_FALSE(filled[1].slots[35]);
}

TEST(Pipeline, AutoSelectionRecordsChoice) {
	SynthOptions o;
	o.stations = 5;
	o.days = 5;
	auto data = synth_dataset(o);
	for (auto& s : data.series)
		if (s.station_id == "S02")
			for (std::size_t i = 200; i < 230; ++i) s.slots[i].reset();
	FillOptions opts;
	const auto result = fill_dataset(data, opts);
	std::size_t auto_chosen = 0;
	for (const auto& out : result.outcomes) {
		if (out.station_id != "S02") {
			EXPECT_EQ(out.selection, "none");
			continue;
		}
		EXPECT_EQ(out.selection, "auto");
		ASSERT_TRUE(out.long_gap_method);
		EXPECT_EQ(out.selection_scores.size(), 4u);
		// The chosen method has the lowest score among the fully scored ones.
		const double best = out.selection_scores.at(*out.long_gap_method);
		for (const auto& [m, v] : out.selection_scores) EXPECT_GE(v, best) << to_string(m);
		++auto_chosen;
	}
	EXPECT_EQ(auto_chosen, 2u);
	EXPECT_EQ(result.residual_slots(), 0u);
}

TEST(Pipeline, OutOfBoundsValuesCanBeRefilled) {
	std::vector<double> t(96, 12.0);
	t[50] = 99.0;
	auto cfg_data = three_station_dataset(t);
	FillOptions opts;
	opts.long_gap_method = MethodTag::GC;
	opts.treat_out_of_bounds_as_missing = true;
	const auto result = fill_dataset(cfg_data, opts);
	ASSERT_EQ(result.provenance.size(), 1u);
	EXPECT_EQ(result.provenance[0].imputed.value, 12.0);
	opts.treat_out_of_bounds_as_missing = false;
	EXPECT_TRUE(fill_dataset(cfg_data, opts).provenance.empty());
}

TEST(Pipeline, ThreadCountDoesNotChangeResult) {
	SynthOptions o;
	o.stations = 6;
	o.days = 3;
	auto data = synth_dataset(o);
	for (auto& s : data.series)
		for (std::size_t i = 10; i < 40; i += 3) s.slots[i + (s.station_id.back() - '0')].reset();
	FillOptions opts;
	opts.long_gap_method = MethodTag::NRGC;
	const auto one = fill_dataset(data, opts);
	opts.threads = 8;
	const auto many = fill_dataset(data, opts);
	EXPECT_EQ(observations_csv(one.filled.series), observations_csv(many.filled.series));
	std::ostringstream pa, pb;
	write_provenance(pa, one.provenance);
	write_provenance(pb, many.provenance);
	EXPECT_EQ(pa.str(), pb.str());
}

TEST(Pipeline, ConfigErrors) {
	Dataset d;
	FillOptions opts;
	opts.long_gap_method = MethodTag::LinearInterp;
	EXPECT_THROW(fill_dataset(d, opts), Error);
	PipelineConfig cfg;
	cfg.observations = "/nonexistent/obs.csv";
	cfg.stations = "/nonexistent/st.csv";
	try {
		run_pipeline(cfg);
		FAIL();
	} catch (const Error& e) {
		EXPECT_EQ(e.code(), Errc::FileNotFound);
	}
}

// ---------------------------------------------------------------------------
// Plot

namespace {

EvalReport fake_report(std::size_t stations, std::size_t variables) {
	EvalReport r;
	for (std::size_t s = 0; s < stations; ++s)
		for (std::size_t v = 0; v < variables; ++v)
			for (auto m : r.config.methods)
				for (double level : r.config.levels)
					r.cells.push_back({"S0" + std::to_string(s + 1), v ? Variable::Rainfall : Variable::Temperature, m, level,
					                   0.5 + level + 0.1 * static_cast<int>(m), 100, 0});
	return r;
}

std::size_t count(const std::string& text, const std::string& needle) {
	std::size_t n = 0;
	for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
	return n;
}

} // namespace

TEST(Plot, OnePanelPerSeries) {
	const auto report = fake_report(4, 2);
	EXPECT_EQ(panel_count(report), 8u);
	const auto svg = render_svg(report);
	EXPECT_EQ(count(svg, "class=\"panel\""), 8u);
	EXPECT_EQ(count(svg, "class=\"bar\""), report.cells.size());
	EXPECT_EQ(svg.rfind("<svg", 0), 0u);
}

TEST(Plot, SingleCell) {
	EvalReport r;
	r.cells.push_back({"S01", Variable::Temperature, MethodTag::GC, 0.1, 1.25, 10, 0});
	const auto svg = render_svg(r);
	EXPECT_EQ(panel_count(r), 1u);
	EXPECT_EQ(count(svg, "class=\"panel\""), 1u);
	EXPECT_EQ(count(svg, "class=\"bar\""), 1u);
}

TEST(Plot, DeterministicBytes) {
	const auto report = fake_report(2, 2);
	const auto dir = scratch_dir("plot");
	emit_plot(report, dir / "a.svg");
	emit_plot(report, dir / "b.svg");
	EXPECT_EQ(slurp(dir / "a.svg"), slurp(dir / "b.svg"));
}

TEST(Plot, EmptyReport) {
	try {
		render_svg(EvalReport{});
		FAIL();
	} catch (const Error& e) {
		EXPECT_EQ(e.code(), Errc::EmptyReport);
	}
}
