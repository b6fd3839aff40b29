#pragma once

// File formats.
//
//   string (text)    header "QSYNC1 L N1 L1 lambda seed", then L characters
//                    from {+,-}, wrapped at 80 per line
//   string (binary)  header line "QSYNC1B L N1 L1 lambda seed", then
//                    ceil(L/8) bytes, bit i of the string at byte i/8, bit
//                    i%8 (LSB first); a set bit is +1
//   detections       CSV "t_seconds,outcome", outcome in {Z0,Z1,X0,X1}
//   truth sidecar    CSV "t_seconds,emitted_index,is_background"
//   ternary string   CSV "symbol", one value in {-1,0,1} per line
//   config           key=value lines, '#' starts a comment
//
// Reals are written in shortest round-trip form.

#include "q4s/channel_sim.hpp"
#include "q4s/sync_string.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace q4s::io {

std::string format_real(double v);
/// Strict parse of a whole token; throws Parse.
double parse_real(const std::string& token, const std::string& what);
std::uint64_t parse_uint(const std::string& token, const std::string& what);
std::int64_t parse_int(const std::string& token, const std::string& what);

void write_string(const std::string& path, const SyncString& s, bool binary = false);
/// Reads either string variant. Throws Io or Parse.
SyncString read_string(const std::string& path);

void write_detections(const std::string& path, const DetectionStream& stream);
DetectionStream read_detections(const std::string& path);

struct Truth {
    std::vector<std::int64_t> emitted_index;
    std::vector<std::uint8_t> is_background;
};
void write_truth(const std::string& path, const SimOutput& sim);
Truth read_truth(const std::string& path);

void write_ternary(const std::string& path, const std::vector<std::int8_t>& symbols);
std::vector<std::int8_t> read_ternary(const std::string& path);

using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_config_text(const std::string& text);
KeyValues read_config(const std::string& path);

} // namespace q4s::io
