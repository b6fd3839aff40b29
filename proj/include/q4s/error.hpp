#pragma once

#include <stdexcept>
#include <string>

namespace q4s {

enum class Errc {
    InvalidArgument,
    InvalidParams,
    LengthMismatch,
    LengthNotDivisible,
    DimensionMismatch,
    DegenerateInput,
    TooFewDetections,
    NoPeak,
    FitDiverged,
    InsufficientInliers,
    EstimateNotOk,
    NoEdge,
    ConfigInvalid,
    Io,
    Parse,
    SyncFailed,
};

const char* errc_name(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above; the C
// API maps them one-to-one onto q4s_status values.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace q4s
