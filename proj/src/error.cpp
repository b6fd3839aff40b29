#include "q4s/error.hpp"

namespace q4s {

const char* errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::LengthNotDivisible: return "LengthNotDivisible";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::TooFewDetections: return "TooFewDetections";
    case Errc::NoPeak: return "NoPeak";
    case Errc::FitDiverged: return "FitDiverged";
    case Errc::InsufficientInliers: return "InsufficientInliers";
    case Errc::EstimateNotOk: return "EstimateNotOk";
    case Errc::NoEdge: return "NoEdge";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::Io: return "Io";
    case Errc::Parse: return "Parse";
    case Errc::SyncFailed: return "SyncFailed";
    }
    return "Unknown";
}

} // namespace q4s
