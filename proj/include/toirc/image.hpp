#pragma once

#include "error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace toirc {

inline constexpr int kFrameWidth = 160;
inline constexpr int kFrameHeight = 120;

/// Grayscale frame, row-major, intensities in [0, 1].
struct GrayFrame {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    GrayFrame() = default;
    GrayFrame(int w, int h, double fill = 0.0) : width(w), height(h), pixels(std::size_t(w) * h, fill) {}

    double& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
    double at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
    bool same_shape(const GrayFrame& o) const { return width == o.width && height == o.height; }
};

/// Foreground mask, row-major, true = foreground.
struct BinaryFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> mask;

    BinaryFrame() = default;
    BinaryFrame(int w, int h) : width(w), height(h), mask(std::size_t(w) * h, 0) {}

    std::uint8_t& at(int x, int y) { return mask[std::size_t(y) * width + x]; }
    bool at(int x, int y) const { return mask[std::size_t(y) * width + x] != 0; }
    std::size_t count() const { return std::size_t(std::count(mask.begin(), mask.end(), std::uint8_t{1})); }

    friend bool operator==(const BinaryFrame&, const BinaryFrame&) = default;
};

namespace detail {

inline std::string pgm_token(std::istream& in)
{
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) {
                break;
            }
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

} // namespace detail

/// Width and height from a binary (P5) PGM header without reading pixels.
inline std::pair<int, int> read_pgm_size(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open frame " + path.string());
    }
    if (detail::pgm_token(in) != "P5") {
        throw DataError("not a binary PGM (P5): " + path.string());
    }
    try {
        const int w = std::stoi(detail::pgm_token(in));
        const int h = std::stoi(detail::pgm_token(in));
        return {w, h};
    } catch (const std::exception&) {
        throw DataError("malformed PGM header: " + path.string());
    }
}

/// Reads an 8-bit binary PGM and scales intensities to [0, 1].
inline GrayFrame read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open frame " + path.string());
    }
    if (detail::pgm_token(in) != "P5") {
        throw DataError("not a binary PGM (P5): " + path.string());
    }
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(detail::pgm_token(in));
        h = std::stoi(detail::pgm_token(in));
        maxval = std::stoi(detail::pgm_token(in));
    } catch (const std::exception&) {
        throw DataError("malformed PGM header: " + path.string());
    }
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        throw DataError("unsupported PGM (need 8-bit): " + path.string());
    }
    std::vector<unsigned char> raw(std::size_t(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (in.gcount() != std::streamsize(raw.size())) {
        throw DataError("truncated PGM: " + path.string());
    }
    GrayFrame f(w, h);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        f.pixels[i] = double(raw[i]) / double(maxval);
    }
    return f;
}

inline void write_pgm(const std::filesystem::path& path, const GrayFrame& f)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << "P5\n" << f.width << ' ' << f.height << "\n255\n";
    std::vector<unsigned char> raw(f.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<unsigned char>(std::lround(std::clamp(f.pixels[i], 0.0, 1.0) * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
}

/// Frame files of a directory, lexicographically ordered.
inline std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir)
{
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
            files.push_back(entry.path());
        }
    }
    if (ec) {
        throw DataError("cannot list " + dir.string() + ": " + ec.message());
    }
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace toirc
