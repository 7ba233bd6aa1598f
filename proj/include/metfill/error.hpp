#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace metfill {

enum class Errc {
	// ingest
	FileNotFound,
	MalformedRow,
	DuplicateStationId,
	CoordinateOutOfRange,
	OffGridTimestamp,
	DuplicateSlot,
	UnknownVariable,
	UnparseableValue,
	// geo
	NoTargetSeries,
	NoCandidates,
	EmptyOverlap,
	MisalignedGrid,
	// impute
	NotShortGap,
	BoundaryMissing,
	NoNeighbourData,
	ZeroNeighbourMean,
	DegenerateWeights,
	NoFallbackMean,
	// eval
	LevelInfeasible,
	EmptyInput,
	InvalidConfig,
	// pipeline
	EmptyReport,
	Io,
};

constexpr std::string_view to_string(Errc code) {
	switch (code) {
	case Errc::FileNotFound: return "FileNotFound";
	case Errc::MalformedRow: return "MalformedRow";
	case Errc::DuplicateStationId: return "DuplicateStationId";
	case Errc::CoordinateOutOfRange: return "CoordinateOutOfRange";
	case Errc::OffGridTimestamp: return "OffGridTimestamp";
	case Errc::DuplicateSlot: return "DuplicateSlot";
	case Errc::UnknownVariable: return "UnknownVariable";
	case Errc::UnparseableValue: return "UnparseableValue";
	case Errc::NoTargetSeries: return "NoTargetSeries";
	case Errc::NoCandidates: return "NoCandidates";
	case Errc::EmptyOverlap: return "EmptyOverlap";
	case Errc::MisalignedGrid: return "MisalignedGrid";
	case Errc::NotShortGap: return "NotShortGap";
	case Errc::BoundaryMissing: return "BoundaryMissing";
	case Errc::NoNeighbourData: return "NoNeighbourData";
	case Errc::ZeroNeighbourMean: return "ZeroNeighbourMean";
	case Errc::DegenerateWeights: return "DegenerateWeights";
	case Errc::NoFallbackMean: return "NoFallbackMean";
	case Errc::LevelInfeasible: return "LevelInfeasible";
	case Errc::EmptyInput: return "EmptyInput";
	case Errc::InvalidConfig: return "InvalidConfig";
	case Errc::EmptyReport: return "EmptyReport";
	case Errc::Io: return "Io";
	}
	return "Unknown";
}

/// Every failure raised by the library. `code()` identifies the failure class,
/// `what()` carries the human-readable detail (line numbers, station ids).
class Error : public std::runtime_error {
public:
	Error(Errc code, const std::string& detail)
		: std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

	Errc code() const noexcept { return code_; }

private:
	Errc code_;
};

} // namespace metfill
