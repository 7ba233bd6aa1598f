#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

using namespace metfill;
using testing_support::kNA;
using testing_support::make_series;

namespace {

std::string complete_rows(const std::string& id, const std::string& var, TimePoint start, std::size_t days, double value = 5.5) {
	std::string out;
	for (std::size_t i = 0; i < days * 96; ++i)
		out += id + "," + format_timestamp(start + std::chrono::minutes{15} * static_cast<long long>(i)) + "," + var + "," +
		       csv::format_double(value) + "\n";
	return out;
}

std::vector<StationSeries> parse(const std::string& body) {
	std::istringstream in(std::string(kObservationHeader) + "\n" + body);
	return parse_observations(in);
}

Errc parse_error(const std::string& body) {
	try {
		parse(body);
	} catch (const Error& e) {
		return e.code();
	}
	ADD_FAILURE() << "expected an error";
	return Errc::Io;
}

Errc meta_error(const std::string& body) {
	std::istringstream in(std::string(kStationMetaHeader) + "\n" + body);
	try {
		parse_station_meta(in);
	} catch (const Error& e) {
		return e.code();
	}
	ADD_FAILURE() << "expected an error";
	return Errc::Io;
}

} // namespace

TEST(StationMetaCsv, ParsesCoastalStationRow) {
	std::istringstream in("station_id,longitude,latitude,label\ns2n1,-1.524,52.057,\"1st nearest\"\n");
	const auto stations = parse_station_meta(in);
	ASSERT_EQ(stations.size(), 1u);
	EXPECT_EQ(stations[0].station_id, "s2n1");
	EXPECT_DOUBLE_EQ(stations[0].longitude, -1.524);
	EXPECT_DOUBLE_EQ(stations[0].latitude, 52.057);
	EXPECT_EQ(stations[0].label, "1st nearest");
}

TEST(StationMetaCsv, Errors) {
	EXPECT_EQ(meta_error("a,-1.0,91,x\n"), Errc::CoordinateOutOfRange);
	EXPECT_EQ(meta_error("a,-181,50,x\n"), Errc::CoordinateOutOfRange);
	EXPECT_EQ(meta_error("a,-1.0,50,x\na,-2.0,51,y\n"), Errc::DuplicateStationId);
	EXPECT_EQ(meta_error("a,west,50,x\n"), Errc::MalformedRow);
	EXPECT_EQ(meta_error("a,1\n"), Errc::MalformedRow);

	std::istringstream bad_header("id,lon,lat\n");
	EXPECT_THROW(parse_station_meta(bad_header), Error);
}

TEST(StationMetaCsv, ErrorReportsLineNumber) {
	std::istringstream in("station_id,longitude,latitude,label\na,1,1,x\nb,1,oops,y\n");
	try {
		parse_station_meta(in);
		FAIL();
	} catch (const Error& e) {
		EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
	}
}

TEST(StationMetaCsv, WriteParseRoundTrip) {
	std::vector<StationMeta> in{{"a", -3.315, 51.128, "Station 1, coast"}, {"b", 0.1, -0.2, ""}};
	std::stringstream ss;
	write_station_meta(ss, in);
	EXPECT_EQ(parse_station_meta(ss), in);
}

TEST(ObservationsCsv, FullYearHas35040Slots) {
	const auto series = parse(complete_rows("s1", "temperature", make_date(2014, 1, 1), 365));
	ASSERT_EQ(series.size(), 1u);
	EXPECT_EQ(series[0].slots.size(), 35040u);
	EXPECT_EQ(series[0].present_count(), 35040u);
	EXPECT_EQ(series[0].start, make_date(2014, 1, 1));
}

TEST(ObservationsCsv, LeapYearHas35136Slots) {
	const auto series = parse(complete_rows("s1", "rainfall", make_date(2016, 1, 1), 366, 0.0));
	ASSERT_EQ(series.size(), 1u);
	EXPECT_EQ(series[0].slots.size(), 35136u);
}

TEST(ObservationsCsv, EmptyAndNullValues) {
	const auto series = parse("a,2014-01-01T00:15:00Z,temperature,1.5\n"
	                          "a,2014-01-01T00:30:00Z,temperature,\n"
	                          "a,2014-01-01T00:45:00Z,temperature,null\n"
	                          "a,2014-01-01T01:00:00Z,temperature,-2\n");
	ASSERT_EQ(series.size(), 1u);
	const auto& s = series[0];
	EXPECT_EQ(s.start, make_date(2014, 1, 1));  // anchored at midnight
	ASSERT_EQ(s.slots.size(), 5u);
	EXPECT_FALSE(s.slots[0]);
	EXPECT_EQ(s.slots[1], 1.5);
	EXPECT_FALSE(s.slots[2]);
	EXPECT_FALSE(s.slots[3]);
	EXPECT_EQ(s.slots[4], -2.0);
	EXPECT_EQ(s.null_slots, std::vector<std::size_t>{3});
}

TEST(ObservationsCsv, GroupsAndSortsBySeries) {
	const auto series = parse("b,2014-01-01T00:00:00Z,rainfall,0\n"
	                          "a,2014-01-01T00:15:00Z,rainfall,1\n"
	                          "b,2014-01-01T00:00:00Z,temperature,3\n"
	                          "a,2014-01-01T00:00:00Z,rainfall,2\n");
	ASSERT_EQ(series.size(), 3u);
	EXPECT_EQ(series[0].station_id, "a");
	EXPECT_EQ(series[0].slots, (std::vector<std::optional<double>>{2.0, 1.0}));
	EXPECT_EQ(series[1].station_id, "b");
	EXPECT_EQ(series[1].variable, Variable::Temperature);
	EXPECT_EQ(series[2].variable, Variable::Rainfall);
}

TEST(ObservationsCsv, Errors) {
	EXPECT_EQ(parse_error("a,2014-01-01T00:00:00Z,temperature,1\na,2014-01-01T00:00:00Z,temperature,2\n"), Errc::DuplicateSlot);
	EXPECT_EQ(parse_error("a,2014-01-01T00:07:00Z,temperature,1\n"), Errc::OffGridTimestamp);
	EXPECT_EQ(parse_error("a,2014-01-01T00:00:00Z,humidity,1\n"), Errc::UnknownVariable);
	EXPECT_EQ(parse_error("a,2014-01-01T00:00:00Z,rainfall,abc\n"), Errc::UnparseableValue);
	EXPECT_EQ(parse_error("a,2014-01-01T00:00:00Z,rainfall,nan\n"), Errc::UnparseableValue);
	EXPECT_EQ(parse_error("a,2014-01-01,rainfall,1\n"), Errc::MalformedRow);
	EXPECT_EQ(parse_error("a,2014-01-01T00:00:00Z,rainfall\n"), Errc::MalformedRow);
}

TEST(ObservationsCsv, MissingFile) {
	try {
		parse_observations(std::filesystem::path("/nonexistent/obs.csv"));
		FAIL();
	} catch (const Error& e) {
		EXPECT_EQ(e.code(), Errc::FileNotFound);
	}
}

// Property: write then parse is the identity on random midnight-anchored series.
TEST(ObservationsCsv, RoundTripProperty) {
	std::mt19937_64 rng(20240501);
	std::uniform_int_distribution<int> len(1, 400), day_offset(0, 3000), kind(0, 9);
	std::uniform_real_distribution<double> val(-40.0, 60.0);
	for (int trial = 0; trial < 200; ++trial) {
		std::vector<StationSeries> series;
		for (const auto& [id, var] : {std::pair{"alpha", Variable::Temperature}, {"alpha", Variable::Rainfall}, {"beta,2", Variable::Temperature}}) {
			StationSeries s;
			s.station_id = id;
			s.variable = var;
			s.start = make_date(2010, 1, 1) + std::chrono::days{day_offset(rng)};
			const int n = len(rng);
			for (int i = 0; i < n; ++i) {
				const int k = kind(rng);
				// Last slot must hold a row; missing rows there would shorten the series.
				if (k == 0 && i + 1 < n) {
					s.slots.emplace_back();
				} else if (k == 1 && i + 1 < n) {
					s.slots.emplace_back();
					s.null_slots.push_back(static_cast<std::size_t>(i));
				} else {
					s.slots.emplace_back(var == Variable::Rainfall ? std::abs(val(rng)) : val(rng));
				}
			}
			series.push_back(std::move(s));
		}
		std::stringstream ss;
		write_observations(ss, series);
		const auto back = parse_observations(ss);
		ASSERT_EQ(back, series) << "trial " << trial;
	}
}

TEST(DetectGaps, Examples) {
	const double v = 1.0;
	auto gaps = detect_gaps(make_series("a", Variable::Temperature, {v, kNA, kNA, kNA, v}));
	ASSERT_EQ(gaps.size(), 1u);
	EXPECT_EQ(gaps[0], (GapSpan{1, 3, GapClass::Short}));

	gaps = detect_gaps(make_series("a", Variable::Temperature, {v, kNA, kNA, kNA, kNA, v}));
	ASSERT_EQ(gaps.size(), 1u);
	EXPECT_EQ(gaps[0], (GapSpan{1, 4, GapClass::Long}));

	EXPECT_TRUE(detect_gaps(make_series("a", Variable::Temperature, {v, v, v})).empty());
}

TEST(DetectGaps, EdgesAndOrdering) {
	const auto gaps = detect_gaps(make_series("a", Variable::Rainfall, {kNA, 1, kNA, kNA, 2, kNA, kNA, kNA, kNA, kNA}));
	ASSERT_EQ(gaps.size(), 3u);
	EXPECT_EQ(gaps[0], (GapSpan{0, 1, GapClass::Short}));
	EXPECT_EQ(gaps[1], (GapSpan{2, 2, GapClass::Short}));
	EXPECT_EQ(gaps[2], (GapSpan{5, 5, GapClass::Long}));
}

TEST(ExpectedRecords, FullAndPartialYears) {
	const std::pair<std::size_t, std::size_t> table[] = {{365, 35040}, {365, 35040}, {366, 35136}, {365, 35040}, {295, 28320}};
	for (const auto& [days, records] : table) EXPECT_EQ(expected_records(days), records);
}

TEST(Validate, PartialYear2018) {
	const auto series = parse(complete_rows("s1", "temperature", make_date(2018, 1, 1), 295, 9.0));
	const auto report = validate(series);
	ASSERT_EQ(report.entries.size(), 1u);
	const auto& e = report.entries[0];
	EXPECT_EQ(e.year, 2018);
	EXPECT_EQ(e.expected_records, 28320u);
	EXPECT_EQ(e.present_records, 28320u);
	EXPECT_EQ(e.missing_records + e.null_records, 0u);
}

TEST(Validate, BoundsAreInclusive) {
	const auto s = make_series("s3", Variable::Temperature, {60.0, -35.2, 60.01, -35.3, 20.0});
	const auto report = validate(std::vector{s}, PlausibilityBounds{{-35.2, 60.0}, {0.0, 500.0}});
	ASSERT_EQ(report.entries.size(), 1u);
	EXPECT_EQ(report.entries[0].out_of_bounds_records, 2u);
	EXPECT_EQ(report.entries[0].present_records, 5u);
}

TEST(Validate, EmptySeries) {
	StationSeries s;
	s.station_id = "z";
	s.start = make_date(2015, 1, 1);
	const auto report = validate(std::vector{s});
	ASSERT_EQ(report.entries.size(), 1u);
	EXPECT_EQ(report.entries[0].expected_records, 0u);
	EXPECT_EQ(report.entries[0].present_records, 0u);
	EXPECT_EQ(to_json(report)["entries"][0]["gap_histogram"].dump(), "{}");
}

TEST(Validate, RejectsInvertedBounds) {
	EXPECT_THROW(validate(std::vector<StationSeries>{}, PlausibilityBounds{{5, 5}, {0, 1}}), Error);
}

TEST(Validate, SplitsAcrossYearsAndAccountsEverySlot) {
	// 2 days ending 2014-12-31 plus 1 day in 2015; the last row is at 06:00.
	std::string body = complete_rows("y", "rainfall", make_date(2014, 12, 30), 2, 0.2);
	body += "y,2015-01-01T00:00:00Z,rainfall,null\n";
	body += "y,2015-01-01T06:00:00Z,rainfall,0.4\n";
	const auto series = parse(body);
	const auto report = validate(series);
	ASSERT_EQ(report.entries.size(), 2u);
	const auto& y14 = report.entries[0];
	const auto& y15 = report.entries[1];
	EXPECT_EQ(y14.year, 2014);
	EXPECT_EQ(y14.expected_records, 192u);
	EXPECT_EQ(y14.present_records, 192u);
	EXPECT_EQ(y15.year, 2015);
	EXPECT_EQ(y15.expected_records, 96u);
	EXPECT_EQ(y15.present_records, 1u);
	EXPECT_EQ(y15.null_records, 1u);
	EXPECT_EQ(y15.missing_records, 94u);
	// null + 23 missing slots form one long gap; the unrecorded tail after 06:00 is another
	EXPECT_EQ(y15.long_gaps, 2u);
	EXPECT_EQ(y15.short_gaps, 0u);
	for (const auto& e : report.entries) EXPECT_EQ(e.present_records + e.null_records + e.missing_records, e.expected_records);
}

// Property: gap lengths add up to missing + null for whole-day series.
TEST(Validate, GapLengthsMatchMissingCounts) {
	std::mt19937_64 rng(99);
	std::bernoulli_distribution miss(0.2);
	for (int trial = 0; trial < 50; ++trial) {
		StationSeries s;
		s.station_id = "p";
		s.start = make_date(2016, 12, 28);
		for (int i = 0; i < 96 * 7; ++i) {
			if (miss(rng)) {
				s.slots.emplace_back();
				if (i % 2) s.null_slots.push_back(static_cast<std::size_t>(i));
			} else {
				s.slots.emplace_back(1.0);
			}
		}
		std::size_t gap_total = 0;
		for (const auto& g : detect_gaps(s)) gap_total += g.length;
		std::size_t absent = 0;
		for (const auto& e : validate(std::vector{s}).entries) absent += e.missing_records + e.null_records;
		EXPECT_EQ(gap_total, absent);
	}
}

TEST(Validate, StationsWithoutMeta) {
	const auto s = make_series("ghost", Variable::Temperature, {1.0});
	const std::vector<StationMeta> meta{{"known", 0, 0, ""}};
	const auto report = validate(std::vector{s}, meta);
	EXPECT_EQ(report.stations_without_meta, std::vector<std::string>{"ghost"});
}

TEST(Validate, JsonIsStable) {
	const auto series = parse(complete_rows("s1", "temperature", make_date(2014, 1, 1), 2));
	const auto a = to_json(validate(series)).dump();
	const auto b = to_json(validate(series)).dump();
	EXPECT_EQ(a, b);
	EXPECT_EQ(a.find("\"cadence_seconds\""), 1u);
	EXPECT_LT(a.find("\"expected_records\""), a.find("\"present_records\""));
}
