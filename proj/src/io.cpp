#include "q4s/io.hpp"

#include "q4s/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace q4s::io {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error(Errc::Io, "write failed for " + path);
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(trim(std::string_view(line).substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

// Non-empty lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> lines_of(const std::string& text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::size_t start = 0;
    std::size_t number = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++number;
        std::string line = trim(std::string_view(text).substr(start, end - start));
        if (!line.empty()) out.emplace_back(number, std::move(line));
        start = end + 1;
    }
    return out;
}

bool looks_numeric(const std::string& token) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    return ec == std::errc() && ptr == token.data() + token.size();
}

std::string where(const std::string& path, std::size_t line) { return path + ":" + std::to_string(line); }

struct StringHeader {
    StringParams params;
    bool binary = false;
};

StringHeader parse_string_header(const std::string& line, const std::string& path) {
    std::istringstream ss(line);
    std::string magic;
    std::string fields[5];
    ss >> magic;
    for (auto& f : fields) ss >> f;
    std::string extra;
    if (ss >> extra || fields[4].empty()) throw Error(Errc::Parse, path + ": malformed string header");
    StringHeader h;
    if (magic == "QSYNC1B") {
        h.binary = true;
    } else if (magic != "QSYNC1") {
        throw Error(Errc::Parse, path + ": not a synchronization string file");
    }
    h.params.L = parse_uint(fields[0], "L");
    h.params.N1 = parse_uint(fields[1], "N1");
    h.params.L1 = parse_uint(fields[2], "L1");
    h.params.lambda = parse_real(fields[3], "lambda");
    h.params.seed = parse_uint(fields[4], "seed");
    if (h.params.L == 0 || h.params.N1 * h.params.L1 != h.params.L) {
        throw Error(Errc::Parse, path + ": header requires L = N1 * L1 > 0");
    }
    return h;
}

Outcome parse_outcome(const std::string& token, const std::string& at) {
    if (token == "Z0") return Outcome::Z0;
    if (token == "Z1") return Outcome::Z1;
    if (token == "X0") return Outcome::X0;
    if (token == "X1") return Outcome::X1;
    throw Error(Errc::Parse, at + ": unknown outcome '" + token + "'");
}

} // namespace

std::string format_real(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

double parse_real(const std::string& token, const std::string& what) {
    const std::string t = trim(token);
    double v = 0.0;
    const char* first = t.data();
    if (!t.empty() && t[0] == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw Error(Errc::Parse, what + ": expected a number, got '" + token + "'");
    }
    return v;
}

std::uint64_t parse_uint(const std::string& token, const std::string& what) {
    const std::string t = trim(token);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        // Accept integral values written in floating notation, e.g. 1e6.
        const double d = parse_real(t, what);
        if (!(d >= 0.0 && d < 1.8e19) || std::floor(d) != d) {
            throw Error(Errc::Parse, what + ": expected a non-negative integer, got '" + token + "'");
        }
        return static_cast<std::uint64_t>(d);
    }
    return v;
}

std::int64_t parse_int(const std::string& token, const std::string& what) {
    const std::string t = trim(token);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw Error(Errc::Parse, what + ": expected an integer, got '" + token + "'");
    }
    return v;
}

void write_string(const std::string& path, const SyncString& s, bool binary) {
    auto out = open_out(path, binary);
    const StringParams& p = s.params;
    out << (binary ? "QSYNC1B " : "QSYNC1 ") << p.L << ' ' << p.N1 << ' ' << p.L1 << ' ' << format_real(p.lambda)
        << ' ' << p.seed << '\n';
    if (binary) {
        std::vector<char> bytes((s.size() + 7) / 8, 0);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.symbols[i] > 0) bytes[i / 8] = static_cast<char>(bytes[i / 8] | (1 << (i % 8)));
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    } else {
        std::string line;
        for (std::size_t i = 0; i < s.size(); ++i) {
            line.push_back(s.symbols[i] > 0 ? '+' : '-');
            if (line.size() == 80 || i + 1 == s.size()) {
                out << line << '\n';
                line.clear();
            }
        }
    }
    finish(out, path);
}

SyncString read_string(const std::string& path) {
    const std::string text = slurp(path);
    const std::size_t eol = text.find('\n');
    if (eol == std::string::npos) throw Error(Errc::Parse, path + ": missing string header");
    const StringHeader h = parse_string_header(trim(std::string_view(text).substr(0, eol)), path);
    SyncString s;
    s.params = h.params;
    s.c0_nominal = nominal_c0(h.params.lambda);
    s.symbols.reserve(h.params.L);
    if (h.binary) {
        const std::size_t bytes = (h.params.L + 7) / 8;
        if (text.size() - eol - 1 != bytes) throw Error(Errc::Parse, path + ": binary payload has the wrong size");
        for (std::size_t i = 0; i < h.params.L; ++i) {
            const auto byte = static_cast<unsigned char>(text[eol + 1 + i / 8]);
            s.symbols.push_back((byte >> (i % 8)) & 1u ? std::int8_t{1} : std::int8_t{-1});
        }
    } else {
        for (std::size_t i = eol + 1; i < text.size(); ++i) {
            const char c = text[i];
            if (c == '+') {
                s.symbols.push_back(1);
            } else if (c == '-') {
                s.symbols.push_back(-1);
            } else if (!std::isspace(static_cast<unsigned char>(c))) {
                throw Error(Errc::Parse, path + ": unexpected character in string body");
            }
        }
        if (s.symbols.size() != h.params.L) {
            throw Error(Errc::Parse, path + ": body holds " + std::to_string(s.symbols.size()) + " symbols, header says " +
                                         std::to_string(h.params.L));
        }
    }
    return s;
}

void write_detections(const std::string& path, const DetectionStream& stream) {
    auto out = open_out(path);
    out << "t_seconds,outcome\n";
    for (std::size_t i = 0; i < stream.size(); ++i) {
        out << format_real(stream.arrivals.timestamps[i]) << ',' << outcome_name(stream.outcomes[i]) << '\n';
    }
    finish(out, path);
}

DetectionStream read_detections(const std::string& path) {
    DetectionStream s;
    bool first = true;
    for (const auto& [number, line] : lines_of(slurp(path))) {
        const auto f = split(line, ',');
        // Only the first line may be a header.
        if (std::exchange(first, false) && !looks_numeric(f[0])) continue;
        if (f.size() != 2) throw Error(Errc::Parse, where(path, number) + ": expected t_seconds,outcome");
        s.arrivals.timestamps.push_back(parse_real(f[0], where(path, number)));
        s.outcomes.push_back(parse_outcome(f[1], where(path, number)));
    }
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s.arrivals.timestamps[i] < s.arrivals.timestamps[i - 1]) {
            throw Error(Errc::Parse, path + ": timestamps are not sorted");
        }
    }
    return s;
}

void write_truth(const std::string& path, const SimOutput& sim) {
    auto out = open_out(path);
    out << "t_seconds,emitted_index,is_background\n";
    for (std::size_t i = 0; i < sim.stream.size(); ++i) {
        out << format_real(sim.stream.arrivals.timestamps[i]) << ',' << sim.emitted_index[i] << ','
            << int{sim.is_background[i]} << '\n';
    }
    finish(out, path);
}

Truth read_truth(const std::string& path) {
    Truth t;
    bool first = true;
    for (const auto& [number, line] : lines_of(slurp(path))) {
        const auto f = split(line, ',');
        if (std::exchange(first, false) && !looks_numeric(f[0])) continue;
        if (f.size() != 3) throw Error(Errc::Parse, where(path, number) + ": expected t_seconds,emitted_index,is_background");
        parse_real(f[0], where(path, number));
        t.emitted_index.push_back(parse_int(f[1], where(path, number)));
        const std::int64_t bg = parse_int(f[2], where(path, number));
        if (bg != 0 && bg != 1) throw Error(Errc::Parse, where(path, number) + ": is_background must be 0 or 1");
        t.is_background.push_back(static_cast<std::uint8_t>(bg));
    }
    return t;
}

void write_ternary(const std::string& path, const std::vector<std::int8_t>& symbols) {
    auto out = open_out(path);
    out << "symbol\n";
    for (std::int8_t v : symbols) out << int{v} << '\n';
    finish(out, path);
}

std::vector<std::int8_t> read_ternary(const std::string& path) {
    std::vector<std::int8_t> out;
    bool first = true;
    for (const auto& [number, line] : lines_of(slurp(path))) {
        if (std::exchange(first, false) && line == "symbol") continue;
        for (const std::string& tok : split(line, ',')) {
            if (tok.empty()) continue;
            const std::int64_t v = parse_int(tok, where(path, number));
            if (v < -1 || v > 1) throw Error(Errc::Parse, where(path, number) + ": symbol must be -1, 0 or 1");
            out.push_back(static_cast<std::int8_t>(v));
        }
    }
    return out;
}

KeyValues parse_config_text(const std::string& text) {
    KeyValues kv;
    for (auto [number, line] : lines_of(text)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = trim(std::string_view(line).substr(0, hash));
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::ConfigInvalid, "config line " + std::to_string(number) + ": expected key=value");
        }
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw Error(Errc::ConfigInvalid, "config line " + std::to_string(number) + ": empty key");
        kv.emplace_back(std::move(key), std::move(value));
    }
    return kv;
}

KeyValues read_config(const std::string& path) { return parse_config_text(slurp(path)); }

} // namespace q4s::io
