#pragma once

// Little-endian 64-bit float blocks behind short text headers.

#include "error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace toirc {

inline void write_f64_le(std::ostream& out, std::span<const double> values)
{
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()), std::streamsize(values.size() * sizeof(double)));
    } else {
        for (double v : values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) {
                b[i] = static_cast<unsigned char>(bits >> (8 * i));
            }
            out.write(reinterpret_cast<const char*>(b), 8);
        }
    }
    if (!out) {
        throw DataError("write failed");
    }
}

inline void read_f64_le(std::istream& in, std::span<double> values, const std::string& what)
{
    in.read(reinterpret_cast<char*>(values.data()), std::streamsize(values.size() * sizeof(double)));
    if (in.gcount() != std::streamsize(values.size() * sizeof(double))) {
        throw DataError("truncated " + what);
    }
    if constexpr (std::endian::native != std::endian::little) {
        for (double& v : values) {
            unsigned char b[8];
            std::memcpy(b, &v, 8);
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i) {
                bits |= std::uint64_t(b[i]) << (8 * i);
            }
            std::memcpy(&v, &bits, 8);
        }
    }
}

/// Reads one '\n'-terminated header line.
inline std::string read_header_line(std::istream& in, const std::string& what)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("missing header in " + what);
    }
    return line;
}

} // namespace toirc
