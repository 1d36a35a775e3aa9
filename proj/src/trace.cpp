#include "sketchguard/trace.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "sketchguard/errors.hpp"
#include "sketchguard/hashing.hpp"

namespace sketchguard {

namespace {

std::uint64_t parse_u64(const std::string& s, const char* what) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw io_error(std::string("trace: bad ") + what + " '" + s + "'");
    return v;
}

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

FlowId parse_hex_id(const std::string& digits, std::uint16_t bits, const std::string& token) {
    if (digits.empty() || digits.size() > 64)
        throw io_error("trace: bad identifier '" + token + "'");
    FlowId id;
    id.bits = bits;
    unsigned sig_bits = 0;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        const int nib = hex_nibble(digits[i]);
        if (nib < 0) throw io_error("trace: bad identifier '" + token + "'");
        if (sig_bits == 0 && nib != 0)
            sig_bits = static_cast<unsigned>(
                std::bit_width(static_cast<unsigned>(nib)) + 4 * (digits.size() - 1 - i));
        const std::size_t pos = digits.size() - 1 - i;  // nibbles from the right
        id.bytes[31 - pos / 2] |= static_cast<std::uint8_t>(nib << (pos % 2 ? 4 : 0));
    }
    if (sig_bits > bits)
        throw io_error("trace: identifier '" + token + "' does not fit " +
                       std::to_string(bits) + " bits");
    return id;
}

}  // namespace

FlowId parse_flow_id(const std::string& token, std::uint16_t bits) {
    if (token.size() > 2 && token[0] == '0' && (token[1] == 'x' || token[1] == 'X'))
        return parse_hex_id(token.substr(2), bits, token);
    const std::uint64_t v = parse_u64(token, "identifier");
    if (bits < 64 && std::bit_width(v) > bits)
        throw io_error("trace: identifier '" + token + "' does not fit " +
                       std::to_string(bits) + " bits");
    return FlowId::from_u64(v, bits);
}

Trace parse_trace(std::istream& in) {
    Trace trace;
    bool width_seen = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        std::size_t start = 0;
        while (start < line.size() && line[start] == ' ') ++start;
        if (start == line.size()) continue;
        if (line[start] == '#') {
            if (!width_seen && line.compare(start, 5, "#mid=") == 0) {
                const std::uint64_t bits = parse_u64(line.substr(start + 5), "width header");
                if (bits == 0 || bits > 256)
                    throw io_error("trace: identifier width must be 1..256 bits");
                trace.bits_mid = static_cast<std::uint16_t>(bits);
                width_seen = true;
            }
            continue;  // other # lines are comments
        }
        std::uint64_t count = 1;
        std::string token = line.substr(start);
        if (const std::size_t comma = token.find(','); comma != std::string::npos) {
            count = parse_u64(token.substr(0, comma), "count");
            if (count == 0)
                throw io_error("trace: zero count on line " + std::to_string(lineno));
            token = token.substr(comma + 1);
        }
        const FlowId id = parse_flow_id(token, trace.bits_mid);
        trace.items.insert(trace.items.end(), count, id);
    }
    return trace;
}

Trace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("trace: cannot open '" + path + "'");
    return parse_trace(in);
}

void write_trace(std::ostream& out, const Trace& trace) {
    out << "#mid=" << trace.bits_mid << "\n";
    for (const FlowId& id : trace.items) out << id.to_hex() << "\n";
}

void save_trace(const std::string& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) throw io_error("trace: cannot open '" + path + "' for writing");
    write_trace(out, trace);
    if (!out) throw io_error("trace: write to '" + path + "' failed");
}

Trace zipf_trace(std::uint64_t flows, std::uint64_t items, double s, std::uint64_t seed,
                 std::uint16_t bits_mid) {
    if (flows == 0) throw param_error("zipf_trace: need at least one flow");
    if (flows > items) throw param_error("zipf_trace: more flows than items");
    if (!(s >= 0.0) || !std::isfinite(s)) throw param_error("zipf_trace: exponent must be >= 0");
    if (bits_mid == 0 || bits_mid > 256)
        throw param_error("zipf_trace: identifier width must be 1..256 bits");
    if (bits_mid < 64 && (1ull << bits_mid) < flows)
        throw param_error("zipf_trace: identifier width too small for the flow count");

    // Distinct identifiers for ranks 1..flows, drawn from a side stream.
    const std::uint64_t mask = bits_mid >= 64 ? ~0ull : (1ull << bits_mid) - 1;
    SplitMix64 id_rng(seed ^ 0x1d2c3b4a59687766ull);
    std::unordered_set<std::uint64_t> used;
    std::vector<FlowId> ids;
    ids.reserve(flows);
    while (ids.size() < flows) {
        const std::uint64_t v = id_rng.next() & mask;
        if (used.insert(v).second) ids.push_back(FlowId::from_u64(v, bits_mid));
    }

    // Normalized CDF of rank weights 1/r^s.
    std::vector<double> cdf(flows);
    double sum = 0.0;
    for (std::uint64_t r = 0; r < flows; ++r) {
        sum += std::pow(static_cast<double>(r + 1), -s);
        cdf[r] = sum;
    }
    for (double& c : cdf) c /= sum;
    cdf.back() = 1.0;

    std::mt19937_64 rng(seed);
    Trace trace;
    trace.bits_mid = bits_mid;
    trace.items.reserve(items);
    for (std::uint64_t i = 0; i < items; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        trace.items.push_back(ids[static_cast<std::size_t>(it - cdf.begin())]);
    }
    return trace;
}

}  // namespace sketchguard
