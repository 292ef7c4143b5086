// Little-endian binary primitives and number formatting shared by the file
// format readers/writers. Values are encoded byte by byte, so the files are
// identical regardless of host endianness.

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "perfusion/errors.hpp"

namespace perfusion {

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    auto u = static_cast<std::make_unsigned_t<T>>(value);
    char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xff);
    out.write(bytes, sizeof(T));
}

inline void write_le_f64(std::ostream& out, double value) {
    std::uint64_t u = std::bit_cast<std::uint64_t>(value);
    write_le(out, u);
}

template <typename T>
T read_le(std::istream& in) {
    static_assert(std::is_integral_v<T>);
    char bytes[sizeof(T)];
    in.read(bytes, sizeof(T));
    if (!in) throw DataError("unexpected end of file");
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    return static_cast<T>(u);
}

inline double read_le_f64(std::istream& in) {
    return std::bit_cast<double>(read_le<std::uint64_t>(in));
}

// Shortest round-trip decimal form of a double (17 significant digits).
inline std::string fmt_f64(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Compact form for logs and plot labels.
inline std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace perfusion
